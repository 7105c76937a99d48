import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import factorial

from asl.conditions import MG_SEQUENCE, SIPM_SEQUENCE
from asl.eigensolver import (InadmissibleSigma, RecursionData, RecursionError_, build_recursion,
                             continued_fraction_F, continued_fraction_F_at_depth, eta_window_violations,
                             g_tail, normalize, recursion_residuals, sigma_growth_sweep, solve_sigma,
                             synthesize_eigenfunction, top_decade_slope, fit_l2_constant,
                             tridiagonal_oracle)
from asl.spectral import GevreyParams, gevrey_norm, l2_norm
from asl.symbols import make_symbol

TOY = RecursionData.from_function(lambda p: p.astype(float) ** 2, 256, label="p^2")


def test_mg_alpha_values(mg11):
    rec, _ = mg11
    np.testing.assert_allclose(rec.alpha[1:4], [13.0, 97.0, 397.0], rtol=1e-13)


def test_mg_sigma_value(mg11):
    rec, pair = mg11
    assert pair.sigma == pytest.approx(0.028619204092996734, rel=1e-12)
    assert pair.bracket_contains()
    assert pair.admissible


def test_mg_oracle_agreement(mg11):
    rec, pair = mg11
    assert abs(tridiagonal_oracle(rec, 200) - pair.sigma) <= 1e-10 * pair.sigma


def test_oracle_matches_eigvalsh(mg11):
    rec, _ = mg11
    N = 60
    al = rec.alpha[1:N + 1]
    off = 1.0 / np.sqrt(al[:-1] * al[1:])
    M = np.diag(off, 1) + np.diag(off, -1)
    assert tridiagonal_oracle(rec, N) == pytest.approx(np.linalg.eigvalsh(M)[-1], rel=1e-13)


def test_oracle_monotone_in_N(mg11):
    rec, pair = mg11
    vals = [tridiagonal_oracle(rec, N) for N in (2, 4, 8, 16, 32, 64, 128)]
    assert all(b >= a * (1 - 1e-15) for a, b in zip(vals, vals[1:]))
    assert vals[-1] <= pair.sigma * (1 + 1e-12)


def test_toy_sigma():
    pair = solve_sigma(TOY)
    assert pair.sigma == pytest.approx(0.5277260419, rel=1e-9)
    assert tridiagonal_oracle(TOY, 200) == pytest.approx(pair.sigma, rel=1e-10)


def test_recursion_residuals(mg11):
    rec, pair = mg11
    assert np.max(recursion_residuals(pair, rec, 100)) < 1e-12
    assert pair.residual_max < 1e-12


def test_eta_window(mg11):
    rec, pair = mg11
    assert eta_window_violations(pair, rec) == []
    assert pair.eta2_gap < 1e-10


def test_coefficients_alternate_and_decay(mg11):
    rec, pair = mg11
    p = np.arange(1, 40)
    assert np.all(pair.sign_c[p] == np.where(p % 2 == 1, 1.0, -1.0))
    # c_p carries a factor alpha_p, so |c_p| rises over the first few p before decaying
    q = np.arange(4, 40)
    lc = pair.log_abs_c[q]
    assert np.all(np.diff(lc) < 0)
    # faster than (p!)^-2 for the mg symbol (alpha_p ~ p^4)
    lf = -2 * np.log(factorial(q))
    assert np.all(np.diff(lc - lf) < 0)


def test_coefficient_tail_below_floor(mg11):
    _, pair = mg11
    lc = pair.log_abs_c
    assert lc[pair.depth] - np.max(lc[1:]) < math.log(1e-16)


def test_normalization_unit_gevrey(mg11, gp):
    rec, pair = mg11
    phi = synthesize_eigenfunction(pair, rec, gp, K=40)
    assert gevrey_norm(phi, gp) == pytest.approx(1.0, rel=1e-12)
    assert l2_norm(phi) == pytest.approx(pair.norm_target.l2_norm, rel=1e-12)


def test_eigenfunction_real_and_odd(mg11, gp):
    rec, pair = mg11
    phi = synthesize_eigenfunction(pair, rec, gp, K=20)
    assert phi.conjugate_asymmetry() < 1e-15


def test_p1_truncation_sanity():
    # with P=1 the relation sigma c_1 = -c_2/alpha_2 and c_2 = 0 force sigma = 0; any deeper
    # truncation returns a positive eigenvalue below the infinite-depth root
    rec = TOY
    assert tridiagonal_oracle(rec, 2) == pytest.approx(1.0 / math.sqrt(rec.alpha[1] * rec.alpha[2]))


def test_g_tail_properties():
    assert g_tail(1.0, 4.0) == pytest.approx(2 / (4 + math.sqrt(12)))
    with pytest.raises(InadmissibleSigma):
        g_tail(1.0, 2.0)


def test_F_refuses_inadmissible(mg11):
    rec, _ = mg11
    with pytest.raises(InadmissibleSigma):
        continued_fraction_F(rec, 2, 1.0 / rec.alpha[2])


def test_F_dominated_by_tail(mg11):
    rec, pair = mg11
    s = 2 * pair.sigma
    for p in range(2, 12):
        F = continued_fraction_F(rec, p, s)
        assert 0 < F <= g_tail(s, rec.alpha[p])


def test_recursion_rejects_nonpositive():
    with pytest.raises(RecursionError_):
        RecursionData.from_function(lambda p: 1.0 - p, 10)
    with pytest.raises(RecursionError_):
        RecursionData.from_function(lambda p: 1.0 / p, 10)


def test_build_recursion_rejects_zero_b(mg0):
    with pytest.raises(ValueError):
        build_recursion(mg0, 1, (0, 1))


def test_sipm_sequence_sigma_grows(sipm1, sipm_report, gp):
    res = sigma_growth_sweep(sipm1, 1, SIPM_SEQUENCE, 20, gp, sipm_report, oracle_N=128)
    sg = np.array([r.sigma for r in res.rows])
    assert np.all(np.diff(sg) > 0)
    assert all(r.oracle_sigma == pytest.approx(r.sigma, rel=1e-8) for r in res.rows)


def test_sweep_corrected_bound_holds(mg0, mg_report, gp):
    res = sigma_growth_sweep(mg0, 1, MG_SEQUENCE, 5, gp, mg_report, oracle_N=128, threads=2)
    assert res.all_above_corrected
    for r in res.rows:
        assert r.lower_bound == pytest.approx(4 * r.corrected_bound)
        assert r.sigma_lo < r.sigma < r.sigma_hi


def test_top_decade_slope_power_law():
    b = np.arange(1, 101, dtype=float)
    assert top_decade_slope(b, 3 * b ** 1.5) == pytest.approx(1.5)


def test_fit_l2_constant_tight():
    b = np.array([1.0, 2.0, 4.0])
    C = fit_l2_constant(b, np.exp(-2.5 * b) / 2.5, 1.0)
    assert C == pytest.approx(2.5, rel=1e-10)


# -- properties ----------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0.1, 10.0))
def test_scaling_sigma_linear(lam):
    base = solve_sigma(TOY)
    scaled = solve_sigma(TOY.scaled(lam), tol=1e-13)
    assert scaled.sigma == pytest.approx(lam * base.sigma, rel=1e-10)
    np.testing.assert_allclose(scaled.eta[2:30], base.eta[2:30], rtol=1e-8)


@settings(max_examples=25, deadline=None)
@given(f=st.floats(1.05, 20.0), p=st.integers(2, 30))
def test_tail_decreasing_and_dominates(f, p):
    s = f * 2.0 / TOY.alpha[2]
    gs = [g_tail(s, TOY.alpha[q]) for q in range(p, p + 5)]
    assert all(b < a for a, b in zip(gs, gs[1:]))
    assert continued_fraction_F(TOY, p, s) <= gs[0] * (1 + 1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.floats(0.0, 1.0), f=st.floats(1.05, 20.0))
def test_seed_independence(seed, f):
    s = f * 2.0 / TOY.alpha[2]
    a = continued_fraction_F_at_depth(TOY, 2, s, 200, seed * g_tail(s, TOY.alpha[201]))
    b = continued_fraction_F_at_depth(TOY, 2, s, 200, 0.0)
    assert a == pytest.approx(b, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(alpha=st.sampled_from([0.0, 0.5, 1.0]), b1=st.integers(1, 6), b2=st.integers(1, 6))
def test_mg_sigma_matches_oracle(alpha, b1, b2):
    sym = make_symbol("mg", {}, alpha)
    rec = build_recursion(sym, 1, (b1, b2), 128)
    pair = solve_sigma(rec)
    assert pair.bracket_contains()
    assert tridiagonal_oracle(rec, 128) == pytest.approx(pair.sigma, rel=1e-9)
