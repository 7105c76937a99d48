"""Pseudo-spectral integration of the active scalar equation and its linearisation.

    d_t theta + u . grad theta = S - kappa (-Delta)^gamma theta,   u = T theta

Fields live on the centred cube ``|k|_inf <= K``.  Quadratic products are
formed on a padded grid large enough that no alias lands inside the cube
(``N >= 2K/f + 1`` for dealias fraction ``f``; ``3K + 1`` for the 2/3 rule).
Time stepping is classical RK4.  For symbols of order above one the
continuum problem is ill-posed and every run is a finite-dimensional
Galerkin truncation only.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .eigensolver import (EigenPair, RecursionData, build_recursion, normalize, solve_sigma,
                          synthesize_eigenfunction)
from .spectral import (GevreyParams, RadiusSchedule, SpectralField, _fft_index, _flip, cube_to_grid,
                       gevrey_norm, grid_to_cube, l2_norm, sobolev_norm, wavenumber_grid)
from .symbols import MultiplierSymbol

CFL_LIMIT = 0.5
MAX_HALVINGS = 20
MAX_SUBSTEPS = 64
GALERKIN_LABEL = "finite-dimensional Galerkin truncation"


class SimulationError(RuntimeError):
    """Non-finite state; ``snapshot`` holds the last finite field and its time."""

    def __init__(self, msg: str, t: float, snapshot: SpectralField | None):
        super().__init__(msg)
        self.t = t
        self.snapshot = snapshot


class CFLViolation(RuntimeError):
    pass


def _even_at_least(n: float) -> int:
    """Smallest even FFT-friendly size >= n."""
    n = sfft.next_fast_len(int(math.ceil(n)))
    while n % 2:
        n = sfft.next_fast_len(n + 1)
    return n


@dataclass(eq=False)
class SimConfig:
    sym: MultiplierSymbol
    K: int
    dt: float
    t_end: float
    kappa: float = 0.0
    gamma: float = 0.5
    dealias: float = 2.0 / 3.0
    source: SpectralField | None = None
    schedule: RadiusSchedule | None = None
    gevrey: GevreyParams = field(default_factory=GevreyParams)
    linear_method: str = "spectral"
    workers: int | None = None
    cfl: float = CFL_LIMIT

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not (self.dt > 0 and self.t_end >= 0):
            raise ValueError("need dt > 0 and t_end >= 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.dealias <= 1:
            raise ValueError("dealias fraction must lie in (0, 1]")
        if self.linear_method not in ("spectral", "physical"):
            raise ValueError("linear_method must be 'spectral' or 'physical'")
        if self.source is not None and (self.source.d != self.sym.d or self.source.K != self.K):
            raise ValueError("source field must match (d, K) of the run")
        d, K = self.sym.d, self.K
        self.kgrid = wavenumber_grid(d, K).astype(float)
        self.kabs = np.sqrt(np.sum(self.kgrid**2, axis=0))
        self.T = self.sym.evaluate_array(self.kgrid.reshape(d, -1)).reshape((d,) + self.kabs.shape)
        self.T[(slice(None),) + (K,) * d] = 0.0
        self.Tmax = float(np.max(np.abs(self.T)))
        self.damp = self.kappa * self.kabs ** (2 * self.gamma)
        self.N = _even_at_least(max(2 * K + 2, 2 * K / self.dealias + 1))
        self.S = None if self.source is None else np.array(self.source.coeffs)

    @property
    def d(self) -> int:
        return self.sym.d

    @property
    def label(self) -> str:
        return GALERKIN_LABEL if self.sym.r0 > 1 else "continuum-consistent"


def _clean(c: np.ndarray, K: int) -> np.ndarray:
    """Restore conjugate symmetry and drop the mean."""
    c = 0.5 * (c + np.conj(_flip(c)))
    c[(K,) * c.ndim] = 0.0
    return c


# -- operators -------------------------------------------------------------------------

def velocity(sym: MultiplierSymbol, theta: SpectralField) -> tuple[SpectralField, ...]:
    """``u(k) = T(k) theta(k)`` componentwise."""
    k = theta.wavenumbers().reshape(theta.d, -1)
    T = sym.evaluate_array(k).reshape((theta.d,) + theta.coeffs.shape)
    return tuple(SpectralField(theta.d, theta.K, T[i] * theta.coeffs) for i in range(theta.d))


def _advection(cfg: SimConfig, c: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Dealiased ``u . grad theta`` plus ``max|u|`` and ``max|grad theta|`` on the grid.

    Uses half-spectrum real transforms; ``c`` must be conjugate-symmetric.
    """
    K, N, d = cfg.K, cfg.N, cfg.d
    axes = tuple(range(1, d + 1))
    big = np.zeros((2 * d,) + (N,) * (d - 1) + (N // 2 + 1,), dtype=complex)
    idx = np.ix_(*([_fft_index(K, N)] * (d - 1) + [np.arange(K + 1)]))
    half = (Ellipsis, slice(K, None))
    for i in range(d):
        big[(i,) + idx] = (cfg.T[i] * c)[half]
        big[(d + i,) + idx] = (1j * cfg.kgrid[i] * c)[half]
    g = sfft.irfftn(big, s=(N,) * d, axes=axes, norm="forward", workers=cfg.workers)
    u, grad = g[:d], g[d:]
    prod = np.sum(u * grad, axis=0)
    ph = sfft.rfftn(prod, norm="forward", workers=cfg.workers)[idx]
    out = np.empty_like(c)
    out[half] = ph
    # negative last-axis half from conjugate symmetry
    out[..., :K] = np.conj(_flip(out)[..., :K])
    return out, float(np.max(np.abs(u))), float(np.max(np.abs(grad)))


def _nl_rhs(cfg: SimConfig, c: np.ndarray) -> tuple[np.ndarray, float]:
    adv, umax, gmax = _advection(cfg, c)
    r = -adv - cfg.damp * c
    if cfg.S is not None:
        r = r + cfg.S
    rate = umax * cfg.K + gmax * cfg.Tmax + float(np.max(cfg.damp))
    return _clean(r, cfg.K), rate


def nonlinear_rhs(cfg: SimConfig, theta: SpectralField) -> SpectralField:
    """``S - u . grad theta - kappa |k|^{2 gamma} theta`` (mean-free)."""
    return SpectralField(cfg.d, cfg.K, _nl_rhs(cfg, np.asarray(theta.coeffs))[0])


def advective_term(cfg: SimConfig, theta: SpectralField) -> SpectralField:
    """Dealiased ``u . grad theta`` alone."""
    adv = _advection(cfg, np.asarray(theta.coeffs))[0]
    return SpectralField(cfg.d, cfg.K, _clean(adv, cfg.K))


def _shift_last(g: np.ndarray, s: int) -> np.ndarray:
    """``out[..., k] = g[..., k - s]`` on the cube, zero outside."""
    out = np.zeros_like(g)
    if s > 0:
        out[..., s:] = g[..., :-s]
    elif s < 0:
        out[..., :s] = g[..., -s:]
    else:
        out[...] = g
    return out


def _lin_apply(cfg: SimConfig, a: int, c: np.ndarray) -> np.ndarray:
    g = cfg.T[-1] * c
    if cfg.linear_method == "spectral":
        # (g cos(a x_d))^(k) = (g(k - a e_d) + g(k + a e_d)) / 2, truncated to the cube
        out = -0.5 * a * (_shift_last(g, a) + _shift_last(g, -a))
    else:
        N = _even_at_least(2 * cfg.K + a + 1)
        grid = cube_to_grid(g, cfg.K, N, cfg.workers).real
        x = 2 * np.pi * np.arange(N) / N
        shape = [1] * cfg.d
        shape[-1] = N
        out = -grid_to_cube(grid * (a * np.cos(a * x)).reshape(shape), cfg.K, cfg.workers)
    out = out - cfg.damp * c
    return _clean(out, cfg.K)


def linearized_rhs(cfg: SimConfig, a: int, Theta: SpectralField) -> SpectralField:
    """``L Theta = -(T_d Theta)^v a cos(a x_d)``, minus dissipation when ``kappa > 0``."""
    return SpectralField(cfg.d, cfg.K, _lin_apply(cfg, a, np.asarray(Theta.coeffs)))


def steady_state(d: int, K: int, a: int = 1) -> SpectralField:
    """``sin(a x_d)``."""
    k = (0,) * (d - 1)
    return SpectralField.from_modes(d, K, {k + (a,): 0.5 / 1j, k + (-a,): -0.5 / 1j})


# -- stepping ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimState:
    t: float
    theta: SpectralField


def _rk4(f: Callable[[np.ndarray], np.ndarray], c: np.ndarray, h: float, k1: np.ndarray) -> np.ndarray:
    k2 = f(c + 0.5 * h * k1)
    k3 = f(c + 0.5 * h * k2)
    k4 = f(c + h * k3)
    return c + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Stepper:
    """RK4 over one output interval ``dt`` with CFL-driven substep halving."""

    def __init__(self, cfg: SimConfig, mode: str, a: int):
        self.cfg, self.mode, self.a = cfg, mode, a
        self.min_dt = cfg.dt

    def rhs(self, c: np.ndarray) -> tuple[np.ndarray, float]:
        if self.mode == "nonlinear":
            return _nl_rhs(self.cfg, c)
        rate = self.a * self.cfg.Tmax + float(np.max(self.cfg.damp))
        return _lin_apply(self.cfg, self.a, c), rate

    def advance(self, c: np.ndarray, t: float) -> np.ndarray:
        k1, rate = self.rhs(c)
        h, n = self.cfg.dt, 1
        while h * rate > self.cfg.cfl:
            h, n = 0.5 * h, 2 * n
            if n > 2**MAX_HALVINGS:
                raise CFLViolation(f"CFL guard needs more than {MAX_HALVINGS} halvings at t={t:g}")
        self.min_dt = min(self.min_dt, h)
        f = lambda x: _clean(self.rhs(x)[0], self.cfg.K)
        for i in range(n):
            if i > 0:
                k1 = f(c)
            c = _clean(_rk4(f, c, h, k1), self.cfg.K)
        if not np.all(np.isfinite(c)):
            raise SimulationError(f"non-finite coefficients at t={t + self.cfg.dt:g}", t, None)
        return c


def step(cfg: SimConfig, state: SimState, mode: str = "nonlinear", a: int = 1) -> SimState:
    """Advance by ``cfg.dt`` with RK4 (``mode`` is ``"nonlinear"`` or ``"linear"``)."""
    st = _Stepper(cfg, mode, a)
    try:
        c = st.advance(np.array(state.theta.coeffs), state.t)
    except SimulationError as e:
        raise SimulationError(str(e), state.t, state.theta) from None
    return SimState(state.t + cfg.dt, SpectralField(cfg.d, cfg.K, c))


# -- runs ---------------------------------------------------------------------------------

TIME_SERIES_HEADER = ("t", "l2", "hq", "gevrey", "tau", "predicted_exp")


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    l2: np.ndarray
    hq: np.ndarray
    gevrey: np.ndarray
    tau: np.ndarray
    predicted_exp: np.ndarray
    q: float
    dt_min: float
    label: str
    final: SpectralField = field(repr=False)

    def csv_rows(self) -> list[list[str]]:
        return [[f"{v:.17g}" for v in row] for row in
                zip(self.t, self.l2, self.hq, self.gevrey, self.tau, self.predicted_exp)]

    def log_l2_slope(self, t0: float, t1: float) -> float:
        sel = (self.t >= t0 - 1e-12) & (self.t <= t1 + 1e-12)
        return float(np.polyfit(self.t[sel], np.log(self.l2[sel]), 1)[0])


def default_q(sym: MultiplierSymbol) -> float:
    return sym.r0 + sym.d / 4 + 0.25


def run(cfg: SimConfig, theta0: SpectralField, *, mode: str = "nonlinear", a: int = 1,
        sigma: float | None = None, q: float | None = None, sample_every: int = 1,
        reference: SpectralField | None = None, scale: float = 1.0) -> TimeSeries:
    """Integrate to ``cfg.t_end`` and sample norms of ``(theta - reference) / scale``."""
    if theta0.d != cfg.d or theta0.K != cfg.K:
        theta0 = theta0.resized(cfg.K)
    if mode not in ("nonlinear", "linear"):
        raise ValueError("mode must be 'nonlinear' or 'linear'")
    q = default_q(cfg.sym) if q is None else q
    ref = None if reference is None else np.asarray(reference.resized(cfg.K).coeffs)
    st = _Stepper(cfg, mode, a)
    n_steps = int(round(cfg.t_end / cfg.dt))
    c = np.array(theta0.coeffs)
    rows = []

    def sample(t: float, c: np.ndarray):
        dev = c if ref is None else c - ref
        f = SpectralField(cfg.d, cfg.K, dev / scale)
        tau = cfg.schedule.tau(t) if cfg.schedule is not None else cfg.gevrey.tau
        g = gevrey_norm(f, GevreyParams(cfg.gevrey.s, tau, cfg.gevrey.r)) if tau > 0 else math.nan
        rows.append((t, l2_norm(f), sobolev_norm(f, q), g, tau,
                     math.exp(sigma * t) if sigma is not None else math.nan))

    sample(0.0, c)
    for i in range(n_steps):
        t = i * cfg.dt
        try:
            c = st.advance(c, t)
        except SimulationError as e:
            raise SimulationError(str(e), t, SpectralField(cfg.d, cfg.K, _clean(c, cfg.K))) from None
        if (i + 1) % sample_every == 0 or i + 1 == n_steps:
            sample((i + 1) * cfg.dt, c)
    arr = np.array(rows, dtype=float).T
    return TimeSeries(*arr, q=q, dt_min=st.min_dt, label=cfg.label,
                      final=SpectralField(cfg.d, cfg.K, c))


# -- growth experiment ----------------------------------------------------------------------

GROWTH_HEADER = ("epsilon", "t", "ratio", "amplification", "hq_ratio", "predicted_exp",
                 "rel_err", "linear_regime")


@dataclass(frozen=True)
class GrowthRun:
    epsilon: float
    series: TimeSeries
    amplification: np.ndarray
    rel_err: np.ndarray
    linear: np.ndarray

    def amplification_at(self, t: float) -> float:
        return float(np.interp(t, self.series.t, self.amplification))


@dataclass(frozen=True)
class GrowthTable:
    a: int
    b: tuple[int, ...]
    sigma: float
    phi_l2: float
    runs: tuple[GrowthRun, ...]
    label: str

    def max_linear_error(self) -> float:
        return max(float(np.max(r.rel_err[r.linear])) for r in self.runs)

    def csv_rows(self) -> list[list[str]]:
        out = []
        for r in self.runs:
            s = r.series
            for i in range(s.t.size):
                out.append([f"{r.epsilon:.6g}", f"{s.t[i]:.17g}", f"{s.l2[i]:.17g}",
                            f"{r.amplification[i]:.17g}", f"{s.hq[i]:.17g}",
                            f"{s.predicted_exp[i]:.17g}", f"{r.rel_err[i]:.6e}",
                            str(bool(r.linear[i])).lower()])
        return out


def eigenfunction(sym: MultiplierSymbol, a: int, b: Sequence[int], gp: GevreyParams,
                  K: int, P: int = 128) -> tuple[EigenPair, RecursionData, SpectralField]:
    """Eigenpair for ``(a, b)`` and its unit-Gevrey eigenfunction on the cube of radius ``K``."""
    rec = build_recursion(sym, a, b, P)
    pair = normalize(solve_sigma(rec), rec, gp)
    return pair, rec, synthesize_eigenfunction(pair, rec, gp, K=K)


def growth_experiment(cfg: SimConfig, a: int, b: Sequence[int],
                      epsilon_list: Sequence[float] = (1e-3, 1e-4, 1e-5), *,
                      P: int = 128, q: float | None = None, sample_every: int = 1,
                      threads: int | None = None) -> GrowthTable:
    """Full nonlinear runs from ``sin(a x_d) + eps phi``.

    ``ratio = ||theta - sin(a x_d)||_{L2} / eps`` starts at ``||phi||_{L2}``
    (phi has unit Gevrey norm), so ``amplification = ratio / ||phi||_{L2}``
    is the quantity compared with ``exp(sigma t)``.  Rows with
    ``eps exp(sigma t) > 0.1`` are flagged as outside the linear regime.
    """
    pair, rec, phi = eigenfunction(cfg.sym, a, b, cfg.gevrey, cfg.K, P)
    base = steady_state(cfg.d, cfg.K, a)
    phi_l2 = l2_norm(phi)

    def job(eps: float) -> GrowthRun:
        ts = run(cfg, base + phi * eps, mode="nonlinear", a=a, sigma=pair.sigma, q=q,
                 sample_every=sample_every, reference=base, scale=eps)
        amp = ts.l2 / phi_l2
        rel = np.abs(amp - ts.predicted_exp) / ts.predicted_exp
        lin = eps * ts.predicted_exp <= 0.1
        return GrowthRun(eps, ts, amp, rel, lin)

    eps_list = [float(e) for e in epsilon_list]
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            runs = tuple(ex.map(job, eps_list))
    else:
        runs = tuple(job(e) for e in eps_list)
    return GrowthTable(a=a, b=tuple(b), sigma=pair.sigma, phi_l2=phi_l2, runs=runs, label=cfg.label)


# -- well-posed Gevrey diagnostic ---------------------------------------------------------

WELLPOSED_HEADER = ("t", "tau", "gevrey", "running_min", "ratio_C", "holds")


@dataclass(frozen=True)
class WellposedResult:
    t: np.ndarray
    tau: np.ndarray
    gevrey: np.ndarray
    ratio: np.ndarray
    C: float
    K0: float
    t_star: float
    iterations: int
    tolerance: float
    holds: np.ndarray

    @property
    def monotone(self) -> bool:
        return bool(np.all(self.holds))

    def csv_rows(self) -> list[list[str]]:
        rmin = np.minimum.accumulate(self.gevrey)
        return [[f"{self.t[i]:.17g}", f"{self.tau[i]:.17g}", f"{self.gevrey[i]:.17g}",
                 f"{rmin[i]:.17g}", f"{self.ratio[i]:.17g}", str(bool(self.holds[i])).lower()]
                for i in range(self.t.size)]


def _weighted(cfg: SimConfig, c: np.ndarray, gp: GevreyParams) -> tuple[float, float, float]:
    """``||theta||_tau``, ``||Lambda^{1/2s} theta||_tau^2`` and ``R = -Re<adv, W theta>``."""
    k = cfg.kabs
    with np.errstate(divide="ignore"):
        logw = np.where(k > 0, 2 * gp.r * np.log(np.where(k > 0, k, 1.0)) + 2 * gp.tau * k ** (1 / gp.s), -np.inf)
    shift = float(np.max(logw[np.abs(c) > 0])) if np.any(np.abs(c) > 0) else 0.0
    w = np.exp(logw - shift)
    a2 = np.abs(c) ** 2
    G2 = float(np.sum(w * a2))
    D = float(np.sum(w * k ** (1 / gp.s) * a2))
    adv = _advection(cfg, c)[0]
    R = -float(np.real(np.sum(w * np.conj(c) * adv)))
    e = math.exp(0.5 * shift)
    return math.sqrt(G2) * e, D * e * e, R * e * e


def wellposed_diagnostic(sym: MultiplierSymbol, theta0: SpectralField, gp: GevreyParams,
                         n_steps: int = 200, fraction: float = 0.5, tolerance: float = 0.01,
                         max_iter: int = 16, workers: int | None = None) -> WellposedResult:
    """Gevrey norm along the shrinking radius ``tau(t) = tau0 - 2 C K0 t``.

    ``K0 = ||theta0||_{tau0}``.  ``C`` is the measured sup of
    ``R / (||theta||_tau ||Lambda^{1/2s} theta||_tau^2)`` along the run;
    the run is restarted with a larger value (at least doubling after an
    early abort) until the measured sup stays below the value in use.
    The check is ``G(t_i) <= (1 + tolerance) min_{j<i} G(t_j)`` up to
    ``fraction * t_star``.
    """
    tau0 = gp.tau
    K = theta0.K
    K0 = gevrey_norm(theta0, gp)
    probe = SimConfig(sym=sym, K=K, dt=1.0, t_end=0.0, workers=workers)
    G, D, R = _weighted(probe, np.asarray(theta0.coeffs), gp)
    # floor: the first run needs at most MAX_SUBSTEPS RK4 substeps per output interval
    rate0 = _nl_rhs(probe, np.asarray(theta0.coeffs))[1]
    C_floor = fraction * tau0 * rate0 / (2 * K0 * n_steps * CFL_LIMIT * MAX_SUBSTEPS)
    C = max(R / (G * D), C_floor, 1e-12)
    for it in range(1, max_iter + 1):
        sched = RadiusSchedule(tau0, C, K0)
        t_end = fraction * sched.t_star
        cfg = SimConfig(sym=sym, K=K, dt=t_end / n_steps, t_end=t_end, schedule=sched,
                        gevrey=gp, workers=workers)
        st = _Stepper(cfg, "nonlinear", 1)
        c = np.array(theta0.coeffs)
        ts, taus, gs, ratios = [], [], [], []
        aborted = False
        for i in range(n_steps + 1):
            t = i * cfg.dt
            tp = GevreyParams(gp.s, sched.tau(t), gp.r)
            G, D, R = _weighted(cfg, c, tp)
            ts.append(t), taus.append(tp.tau), gs.append(G), ratios.append(R / (G * D))
            # growth of G between samples also certifies sup ratio > C (energy identity)
            grew = len(gs) > 1 and gs[-1] > (1 + tolerance) * min(gs[:-1])
            if (ratios[-1] > C or grew) and it < max_iter:
                aborted = True
                break  # C too small: restart with a larger value
            if i < n_steps:
                c = st.advance(c, t)
        C_meas = max(ratios)
        if not aborted and (C_meas <= C or it == max_iter):
            break
        # any C above the sup closes the estimate; grow geometrically after an abort
        C = max(1.05 * C_meas, 2.0 * C if aborted else 0.0)
    gs = np.array(gs)
    prev_min = np.concatenate([[np.inf], np.minimum.accumulate(gs)[:-1]])
    holds = gs <= (1 + tolerance) * prev_min
    return WellposedResult(t=np.array(ts), tau=np.array(taus), gevrey=gs, ratio=np.array(ratios),
                           C=C, K0=K0, t_star=sched.t_star, iterations=it, tolerance=tolerance,
                           holds=holds)
