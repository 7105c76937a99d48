import math

import numpy as np
import pytest

from asl.spectral import (FieldError, GevreyParams, RadiusSchedule, SpectralField, from_physical,
                          gevrey_norm, l2_norm, physical_grid, radius_schedule, sobolev_norm,
                          to_physical, random_analytic_field)


def unit_mode(d, K=3):
    k = (1,) + (0,) * (d - 1)
    return SpectralField.from_modes(d, K, {k: 1.0}, real=False)


@pytest.mark.parametrize("d", [2, 3])
def test_gevrey_single_mode(d):
    assert gevrey_norm(unit_mode(d), GevreyParams(1, 1, 4)) == pytest.approx(math.e, rel=1e-15)


def test_gevrey_zero_field():
    assert gevrey_norm(SpectralField.zeros(2, 4), GevreyParams()) == 0.0


def test_gevrey_two_modes_direct():
    p = GevreyParams(2.0, 0.7, 3.5)
    f = SpectralField.from_modes(2, 5, {(1, 2): 0.3 + 0.1j, (-3, 4): -0.2j}, real=False)
    terms = [abs(0.3 + 0.1j) ** 2 * 5 ** 3.5 * math.exp(2 * 0.7 * 5 ** 0.25),
             0.04 * 25 ** 3.5 * math.exp(2 * 0.7 * 5 ** 0.5)]
    assert gevrey_norm(f, p) == pytest.approx(math.sqrt(sum(terms)), rel=1e-14)


def test_gevrey_log_space_overflow():
    f = SpectralField.from_modes(2, 600, {(600, 0): 1e-300}, real=False)
    g = gevrey_norm(f, GevreyParams(1, 1.0, 4))
    assert g == pytest.approx(1e-300 * 600**4 * math.exp(600), rel=1e-12)
    big = SpectralField.from_modes(2, 600, {(600, 0): 1.0}, real=False)
    assert gevrey_norm(big, GevreyParams(1, 2.0, 4)) == math.inf


def test_gevrey_params_validation():
    for bad in [dict(s=0.5), dict(tau=0.0), dict(r=3.0)]:
        with pytest.raises(ValueError):
            GevreyParams(**bad)


def test_sobolev_unit_mode():
    f = unit_mode(2)
    assert sobolev_norm(f, 0) == pytest.approx(1.0)
    assert sobolev_norm(f, 1) == pytest.approx(math.sqrt(2))


def test_sobolev_random_direct():
    rng = np.random.default_rng(3)
    modes = {tuple(int(x) for x in rng.integers(-4, 5, 2)): complex(*rng.standard_normal(2))
             for _ in range(8)}
    modes.pop((0, 0), None)
    f = SpectralField.from_modes(2, 4, modes, real=False)
    q = 1.7
    direct = math.sqrt(sum((1 + k[0] ** 2 + k[1] ** 2) ** q * abs(v) ** 2 for k, v in modes.items()))
    assert sobolev_norm(f, q) == pytest.approx(direct, rel=1e-14)


def test_radius_schedule_examples():
    assert radius_schedule(1, 1, 0.5).t_star == 1.0
    assert radius_schedule(0.2, 2, 1).t_star == pytest.approx(0.05)
    s = RadiusSchedule(0.3, 1.7, 2.2)
    assert s.tau(s.t_star / 2) == pytest.approx(0.15)
    with pytest.raises(ValueError):
        radius_schedule(1, 0, 1)


@pytest.mark.parametrize("d", [2, 3])
def test_sin_samples(d):
    N = 8
    x = physical_grid(d, N)
    f = from_physical(np.sin(x[-1]), 3)
    e = (0,) * (d - 1)
    assert f[e + (1,)] == pytest.approx(-0.5j, abs=1e-15)
    assert f[e + (-1,)] == pytest.approx(0.5j, abs=1e-15)
    c = np.array(f.coeffs)
    c[tuple(K + 3 for K in e + (1,))] = 0
    c[tuple(K + 3 for K in e + (-1,))] = 0
    assert np.max(np.abs(c)) < 1e-15


def test_round_trip_random():
    f = random_analytic_field(2, 10, seed=5)
    g = from_physical(to_physical(f, 24), 10)
    assert np.max(np.abs(g.coeffs - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))


def test_grid_too_small():
    f = random_analytic_field(2, 10, seed=5)
    with pytest.raises(FieldError):
        to_physical(f, 21)
    with pytest.raises(FieldError):
        from_physical(np.zeros((21, 21)), 10)


def test_constant_field_rejected_unless_projected():
    samples = np.ones((8, 8)) + np.sin(physical_grid(2, 8)[0])
    with pytest.raises(FieldError, match="mean"):
        from_physical(samples, 3)
    f = from_physical(samples, 3, project_mean=True)
    assert f[(0, 0)] == 0


def test_conjugate_symmetry_enforced_on_real_fields():
    with pytest.raises(FieldError):
        SpectralField.from_modes(2, 2, {(1, 0): 1.0})
    f = SpectralField.from_modes(2, 2, {(1, 0): 1.0, (-1, 0): 1.0})
    assert f.conjugate_asymmetry() == 0


def test_csv_round_trip():
    f = random_analytic_field(3, 3, seed=1)
    g = SpectralField.from_csv_text(f.csv_text(), K=3)
    assert np.array_equal(f.coeffs, g.coeffs)


def test_field_immutable():
    f = random_analytic_field(2, 3, seed=1)
    with pytest.raises(ValueError):
        f.coeffs[0, 0] = 1.0


def test_random_field_seed_env(monkeypatch):
    monkeypatch.setenv("ASL_SEED", "42")
    a = random_analytic_field(2, 4)
    b = random_analytic_field(2, 4, seed=42)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert l2_norm(a) == pytest.approx(1.0)


def test_gevrey_small_tau_limit():
    f = random_analytic_field(2, 6, seed=2)
    k = f.abs_k()
    sob = math.sqrt(float(np.sum(k ** 8 * np.abs(f.coeffs) ** 2)))
    g3 = gevrey_norm(f, GevreyParams(1, 1e-3, 4))
    g6 = gevrey_norm(f, GevreyParams(1, 1e-6, 4))
    assert sob <= g6 <= g3
    assert g6 == pytest.approx(sob, rel=1e-4)


# -- properties ----------------------------------------------------------------------

from hypothesis import given, settings, strategies as st  # noqa: E402

seeds = st.integers(0, 2**31 - 1)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, lam=st.floats(-1e3, 1e3).filter(lambda x: abs(x) > 1e-3))
def test_gevrey_homogeneous(seed, lam):
    f = random_analytic_field(2, 5, seed=seed)
    p = GevreyParams(1.5, 0.3, 4)
    assert gevrey_norm(f * lam, p) == pytest.approx(abs(lam) * gevrey_norm(f, p), rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, t1=st.floats(0.01, 2.0), dt=st.floats(0.01, 2.0), s=st.floats(1.0, 3.0))
def test_gevrey_monotone_in_tau_and_s(seed, t1, dt, s):
    f = random_analytic_field(2, 5, seed=seed)
    assert gevrey_norm(f, GevreyParams(s, t1, 4)) <= gevrey_norm(f, GevreyParams(s, t1 + dt, 4))
    # |k| >= 1 on mean-free fields, so |k|^(1/s) decreases with s
    assert gevrey_norm(f, GevreyParams(s + 0.5, t1, 4)) <= gevrey_norm(f, GevreyParams(s, t1, 4))


@settings(max_examples=20, deadline=None)
@given(seed=seeds, d=st.sampled_from([2, 3]), K=st.integers(1, 5))
def test_round_trip_and_projection_idempotent(seed, d, K):
    f = random_analytic_field(d, K, seed=seed)
    x = to_physical(f)
    g = from_physical(x, K)
    np.testing.assert_allclose(g.coeffs, f.coeffs, atol=1e-14)
    h = from_physical(to_physical(g), K)
    np.testing.assert_allclose(h.coeffs, g.coeffs, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(tau0=st.floats(1e-3, 10), C=st.floats(1e-3, 10), K0=st.floats(1e-3, 10))
def test_schedule_half_time(tau0, C, K0):
    s = radius_schedule(tau0, C, K0)
    assert s.tau(0) == tau0
    assert s.tau(s.t_star / 2) == pytest.approx(tau0 / 2, rel=1e-12)
    assert s.tau(s.t_star) == pytest.approx(0.0, abs=1e-12 * tau0)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, q=st.floats(0, 4))
def test_sobolev_dominates_l2(seed, q):
    f = random_analytic_field(3, 3, seed=seed)
    assert l2_norm(f) <= sobolev_norm(f, q) * (1 + 1e-14)


@pytest.mark.parametrize("d", [2, 3])
def test_sine_product_l2(d):
    # single product of sines: 2^d modes of modulus 2^-d, so ||.||^2 = 2^-d (normalized measure)
    f = SpectralField.sine_product(d, 4, (1,) * (d - 1) + (2,), amplitude=3.0)
    assert l2_norm(f) ** 2 == pytest.approx(9.0 * 2.0 ** -d, rel=1e-15)
    x = physical_grid(d, 16)
    direct = np.mean((3.0 * np.prod([np.sin(xi) for xi in x[:-1]], axis=0) * np.sin(2 * x[-1])) ** 2)
    assert l2_norm(f) ** 2 == pytest.approx(direct, rel=1e-13)
