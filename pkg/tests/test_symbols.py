import math
from fractions import Fraction

import numpy as np
import pytest

from asl.symbols import (SymbolError, check_identities, compose_fractional, ipm_symbol,
                         lattice_ball, make_symbol, mg_symbol, singular_order_report)


def test_mg_zero_plane_any_params():
    for params in ({}, {"Omega": 2.5, "beta2_over_eta": 0.3}):
        assert np.array_equal(mg_symbol(params).evaluate((1, 1, 0)), np.zeros(3))


def test_mg_unit_params_at_ones(mg0):
    assert mg0.exact((1, 1, 1)) == (Fraction(5, 13), Fraction(-7, 13), Fraction(2, 13))
    np.testing.assert_allclose(mg0.evaluate((1, 1, 1)), np.array([5, -7, 2]) / 13, rtol=1e-15)


def test_mg_divergence_at_ones(mg0):
    assert sum(k * m for k, m in zip((1, 1, 1), mg0.exact((1, 1, 1)))) == 0


def test_mg_declared_order_and_parity():
    s = mg_symbol({}, 0.5)
    assert s.r0 == 1.5 and s.parity == "even" and s.d == 3


@pytest.mark.parametrize("alpha", [-1.5, 1.01])
def test_mg_alpha_out_of_range(alpha):
    with pytest.raises(SymbolError):
        mg_symbol({}, alpha)


@pytest.mark.parametrize("params", [{"Omega": 0.0}, {"beta2_over_eta": -1.0}])
def test_mg_nonpositive_params(params):
    with pytest.raises(SymbolError):
        mg_symbol(params)


def test_mg_unknown_param():
    with pytest.raises(SymbolError):
        mg_symbol({"omega": 1.0})


@pytest.mark.parametrize("k, expected", [((0, 1), (0, 0)), ((1, 1), (-0.5, 0.5)), ((1, 0), (0, 1))])
def test_ipm_values(ipm0, k, expected):
    np.testing.assert_allclose(ipm0.evaluate(k), expected, atol=1e-16)


def test_ipm_zero_vector(ipm0):
    assert np.array_equal(ipm0.evaluate((0, 0)), np.zeros(2))


@pytest.mark.parametrize("alpha", [-0.1, 2.0])
def test_ipm_alpha_out_of_range(alpha):
    with pytest.raises(SymbolError):
        ipm_symbol(alpha)


def test_compose_identity(ipm0):
    assert compose_fractional(ipm0, 0.0) is ipm0


def test_compose_ipm_alpha1(ipm0):
    s = compose_fractional(ipm0, 1.0)
    h = math.sqrt(2) / 2
    np.testing.assert_allclose(s.evaluate((1, 1)), (-h, h), rtol=1e-15)
    assert s.r0 == 1.0


def test_compose_mg_minus_one(mg0):
    s = compose_fractional(mg0, -1.0)
    want = np.array([5, -7, 2]) / (13 * math.sqrt(3))
    np.testing.assert_allclose(s.evaluate((1, 1, 1)), want, rtol=1e-15)
    assert s.r0 == 0.0 and np.array_equal(s.evaluate((2, 3, 0)), np.zeros(3))


def test_make_symbol_ids():
    assert make_symbol("mg").name == "mg"
    assert make_symbol("sipm", {}, 1.0).r0 == 1.0
    with pytest.raises(SymbolError):
        make_symbol("sqg")


def test_singular_order_ipm(ipm0):
    rep = singular_order_report(ipm0, 32)
    assert 0 < rep.sup_ratio <= 1.0 + 1e-15


def test_singular_order_mg_minus_one():
    rep = singular_order_report(mg_symbol({}, -1.0), 32)
    assert math.isfinite(rep.sup_ratio) and rep.sup_ratio > 0
    assert max(abs(x) for x in rep.argmax) <= 32


def test_singular_order_k1_unit_vectors(ipm0):
    ball = lattice_ball(2, 1)
    assert ball.shape[1] == 4
    rep = singular_order_report(ipm0, 1)
    assert sum(abs(x) for x in rep.argmax) == 1


def test_singular_order_bounded_in_K(mg0):
    sups = [singular_order_report(mg0, K).sup_ratio for K in (16, 32, 64)]
    assert max(sups) < 1.0
    assert sups[0] <= sups[1] <= sups[2]  # sup over nested balls


def test_singular_order_nonincreasing_in_declared_r0(mg0):
    vals = [singular_order_report(mg0, 16, r0).sup_ratio for r0 in (0.0, 0.5, 1.0)]
    assert vals[0] >= vals[1] >= vals[2]


def test_singular_order_rejects_nonfinite():
    bad = mg_symbol({}, 0.0)
    from dataclasses import replace
    bad = replace(bad, core=lambda k: np.full((3,) + np.shape(k)[1:], np.nan))
    with pytest.raises(SymbolError, match="non-finite"):
        singular_order_report(bad, 2)


@pytest.mark.parametrize("name", ["mg", "ipm"])
def test_identities_exact_K16(name, mg0, ipm0):
    rep = check_identities(mg0 if name == "mg" else ipm0, 16)
    assert rep.divergence_free and rep.even and rep.zero_convention
    assert rep.first_failure is None


def test_mg_third_component_positive(mg0):
    k = lattice_ball(3, 10)
    m3 = mg0.evaluate_array(k)[2]
    assert np.all(m3[k[2] != 0] >= 0)
    assert np.all(m3[(k[2] != 0) & (k[1] != 0)] > 0)


def test_mg_monotone_in_n(mg0):
    for j in range(1, 21):
        vals = [mg0.exact((j * j, j, n))[2] for n in range(1, 60)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_fractional_divergence_float():
    s = mg_symbol({}, 0.5)
    k = lattice_ball(3, 12).astype(float)
    m = s.evaluate_array(k)
    div = np.abs(np.sum(k * m, axis=0))
    scale = np.linalg.norm(k, axis=0) * np.linalg.norm(m, axis=0)
    assert np.all(div <= 1e-13 * np.maximum(scale, 1e-300))
