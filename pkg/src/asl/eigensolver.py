"""Unstable eigenpairs of the operator linearised about ``sin(a x_d)``.

With ``phi = prod_i sin(b_i x_i) * sum_p c_p sin(p a x_d)`` the eigen-equation
``L phi = sigma phi`` reduces to the three-term recursion

    sigma c_1 + c_2 / alpha_2 = 0
    sigma c_p + c_{p+1} / alpha_{p+1} + c_{p-1} / alpha_{p-1} = 0,   p >= 2

with ``alpha_p = (2/a) / T_d(b, p a)``.  The ratios ``eta_p`` solve a
continued fraction ``F_p``; ``sigma`` is the root of ``F_2(sigma) = sigma alpha_1``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .conditions import BSequence, ConditionReport
from .spectral import GevreyParams, SpectralField
from .symbols import MultiplierSymbol

DEFAULT_DEPTH = 128
MAX_DEPTH = 1 << 16
CF_TOL = 1e-12
COEFF_FLOOR = 1e-16


class RecursionError_(ValueError):
    """Recursion data is invalid (non-positive or non-increasing alpha_p)."""


class InadmissibleSigma(ValueError):
    """``sigma * alpha_2 <= 2``: outside the region where G_p is real."""


class DepthInstability(ArithmeticError):
    """A backward-recurrence denominator was not positive."""


class BracketError(RuntimeError):
    """``H`` did not change sign on the bracket even after depth escalation."""


AlphaSource = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RecursionData:
    """``alpha_p`` for ``p = 1..P``; ``alpha[0]`` is unused."""

    a: int
    b: tuple[int, ...]
    P: int
    alpha: np.ndarray = field(repr=False)
    source: AlphaSource = field(repr=False, compare=False)
    label: str = ""
    scale: float = 1.0

    @classmethod
    def from_function(cls, fn: AlphaSource, P: int = DEFAULT_DEPTH, a: int = 1,
                      b: tuple[int, ...] = (), label: str = "synthetic") -> "RecursionData":
        return _make(fn, P, a, tuple(b), label)

    def extended(self, P: int) -> "RecursionData":
        if P <= self.P:
            return self
        return _make(self.source, P, self.a, self.b, self.label)

    def scaled(self, lam: float) -> "RecursionData":
        """Recursion for the symbol ``lam * T_d`` (every alpha_p divided by lam)."""
        src = self.source
        return _make(lambda p: src(p) / lam, self.P, self.a, self.b, f"{lam:g}*{self.label}")

    @property
    def b_norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.b))

    @property
    def bracket(self) -> tuple[float, float]:
        a1, a2 = self.alpha[1], self.alpha[2]
        return 1.0 / math.sqrt(a1 * a2), 1.0 / math.sqrt(a1 * a2 - a1 * a1)


def _make(fn: AlphaSource, P: int, a: int, b: tuple[int, ...], label: str) -> RecursionData:
    if P < 3:
        raise ValueError("recursion depth P must be >= 3")
    p = np.arange(1, P + 2)
    vals = np.asarray(fn(p), dtype=float)
    alpha = np.concatenate([[np.nan], vals])
    bad = ~(np.isfinite(vals) & (vals > 0))
    if bad.any():
        raise RecursionError_(f"{label}: alpha_p not positive at p={int(p[np.argmax(bad)])} "
                              "(T_d(b, p a) must be > 0)")
    inc = np.diff(vals) > 0
    if not inc.all():
        raise RecursionError_(f"{label}: alpha_p not increasing at p={int(p[np.argmin(inc)])}")
    if not alpha[P] > alpha[max(1, P // 2)]:
        raise RecursionError_(f"{label}: alpha_p shows no growth")
    return RecursionData(a=a, b=b, P=P, alpha=alpha, source=fn, label=label)


def build_recursion(sym: MultiplierSymbol, a: int, b: Sequence[int], P: int = DEFAULT_DEPTH) -> RecursionData:
    """``alpha_p = (2/a) / T_d(b, p a)`` for the given symbol."""
    b = tuple(int(x) for x in b)
    if len(b) != sym.d - 1 or any(x == 0 for x in b):
        raise ValueError(f"b must be a nonzero {sym.d - 1}-vector, got {b}")
    # the sine ansatz needs T_d invariant under each coordinate reflection
    for n in (1, 2):
        base = sym.evaluate(b + (n * a,))[-1]
        for axis in range(sym.d):
            k = list(b + (n * a,))
            k[axis] = -k[axis]
            if not math.isclose(sym.evaluate(k)[-1], base, rel_tol=1e-13, abs_tol=0.0):
                raise RecursionError_(f"{sym.name}: T_d not even in k_{axis + 1}")

    def fn(p: np.ndarray) -> np.ndarray:
        k = np.vstack([np.repeat(np.array(b)[:, None], p.size, axis=1), a * p[None, :]])
        td = sym.evaluate_array(k)[-1]
        with np.errstate(divide="ignore"):
            return np.where(td > 0, (2.0 / a) / td, -1.0)

    return _make(fn, P, a, b, f"{sym.name} a={a} b={b}")


def g_tail(sigma: float, alpha_p: float) -> float:
    """Fixed point of ``x = 1/(sigma alpha_p - x)``: ``2/(s a + sqrt(s^2 a^2 - 4))``."""
    z = sigma * alpha_p
    if z <= 2:
        raise InadmissibleSigma(f"sigma*alpha_p = {z:g} <= 2")
    return 2.0 / (z + math.sqrt(z * z - 4.0))


def _backward(alpha: np.ndarray, sigma: float, start: int, depth: int, seed: float) -> list[float]:
    """Approximants ``x[p] ~ F_p(sigma)`` for ``start <= p <= depth``; ``x[depth+1] = seed``."""
    x = [0.0] * (depth + 2)
    x[depth + 1] = seed
    t = seed
    for q in range(depth, start - 1, -1):
        den = sigma * alpha[q] - t
        if den <= 0.0:
            raise DepthInstability(f"denominator {den:.3g} at p={q}, sigma={sigma:.6g}")
        t = 1.0 / den
        x[q] = t
    return x


def _seed(alpha: np.ndarray, sigma: float, depth: int, use_tail: bool) -> float:
    z = sigma * alpha[depth + 1]
    return g_tail(sigma, alpha[depth + 1]) if use_tail and z > 2 else 0.0


def continued_fraction_F(rec: RecursionData, p: int, sigma: float, *, tail_seed: bool = True,
                         require_admissible: bool = True, tol: float = CF_TOL) -> float:
    """``F_p(sigma)`` by backward recurrence with adaptive depth doubling.

    Depth is doubled from ``rec.P`` until two successive depths agree to
    ``tol``.  With ``require_admissible`` the call is refused unless
    ``sigma * alpha_2 > 2``; otherwise any sigma whose denominators stay
    positive is accepted.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if require_admissible and sigma * rec.alpha[2] <= 2:
        raise InadmissibleSigma(f"sigma*alpha_2 = {sigma * rec.alpha[2]:g} <= 2")
    depth = max(rec.P, p + 1)
    r = rec.extended(depth + 1)
    prev = _backward(r.alpha, sigma, p, depth, _seed(r.alpha, sigma, depth, tail_seed))[p]
    while depth < MAX_DEPTH:
        depth *= 2
        r = r.extended(depth + 1)
        cur = _backward(r.alpha, sigma, p, depth, _seed(r.alpha, sigma, depth, tail_seed))[p]
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev = cur
    raise DepthInstability(f"F_{p} did not settle by depth {MAX_DEPTH}")


def continued_fraction_F_at_depth(rec: RecursionData, p: int, sigma: float, depth: int,
                                  seed: float = 0.0) -> float:
    """Fixed-depth approximant with an explicit tail seed (``F_{depth+1} := seed``)."""
    r = rec.extended(depth + 1)
    return _backward(r.alpha, sigma, p, depth, seed)[p]


# -- eigenpairs ------------------------------------------------------------------

@dataclass(frozen=True)
class Normalization:
    s: float
    tau: float
    r: float
    log_scale: float
    gevrey_norm: float
    l2_norm: float


@dataclass(frozen=True)
class EigenPair:
    sigma: float
    bracket: tuple[float, float]
    depth: int
    eta: np.ndarray = field(repr=False)        # eta[p] for 2 <= p <= depth
    log_abs_c: np.ndarray = field(repr=False)  # log|c_p|, index p
    sign_c: np.ndarray = field(repr=False)
    residual_max: float
    eta2_gap: float
    admissible: bool
    H_value: float
    refined_bound: float | None = None
    stated_bound: float | None = None
    norm_target: Normalization | None = None

    @property
    def c(self) -> np.ndarray:
        """``c_p`` as floats (deep coefficients underflow to 0)."""
        out = self.sign_c * np.exp(self.log_abs_c)
        out[0] = 0.0
        return out

    def bracket_contains(self) -> bool:
        lo, hi = self.bracket
        return lo < self.sigma < hi


def _H_sign(alpha: np.ndarray, sigma: float, depth: int) -> float:
    """``F_2(sigma) - sigma alpha_1`` at fixed depth; ``+inf`` below the pole region."""
    try:
        x = _backward(alpha, sigma, 2, depth, _seed(alpha, sigma, depth, True))
    except DepthInstability:
        return math.inf
    return x[2] - sigma * alpha[1]


def _bisect(alpha: np.ndarray, depth: int, lo: float, hi: float, tol: float,
            max_iter: int = 200) -> float:
    h_lo, h_hi = _H_sign(alpha, lo, depth), _H_sign(alpha, hi, depth)
    if not h_lo > 0 or not h_hi < 0:
        raise BracketError(f"H has no sign change on [{lo:.6g}, {hi:.6g}] at depth {depth} "
                           f"(H(lo)={h_lo:.3g}, H(hi)={h_hi:.3g})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if _H_sign(alpha, mid, depth) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 0.25 * tol * lo:
            break
    return 0.5 * (lo + hi)


def solve_sigma(rec: RecursionData, tol: float = 1e-12,
                report: ConditionReport | None = None) -> EigenPair:
    """Root of ``H(sigma) = F_2(sigma) - sigma alpha_1`` inside the closed-form bracket.

    Bisection treats a non-positive backward-recurrence denominator as
    "sigma too small": positive denominators are equivalent to sigma
    exceeding the spectrum of the ``p >= 2`` block, whose top eigenvalue lies
    strictly below the root.  Depth is doubled until the root and the
    coefficient decay are both stable.
    """
    lo, hi = rec.bracket
    depth = rec.P
    root = None
    while depth <= MAX_DEPTH:
        r = rec.extended(2 * depth + 1)
        try:
            s1 = _bisect(r.alpha, depth, lo, hi, tol)
            s2 = _bisect(r.alpha, 2 * depth, lo, hi, tol)
        except BracketError:
            if depth * 2 > MAX_DEPTH:
                raise
            depth *= 2
            continue
        if abs(s2 - s1) <= tol * s2:
            root = s2
            depth *= 2
            pair = _populate(r, root, depth, (lo, hi), report)
            if pair.log_abs_c[depth] - np.max(pair.log_abs_c[1:]) < math.log(COEFF_FLOOR):
                return pair
        else:
            depth *= 2
    raise BracketError(f"{rec.label}: no stable root up to depth {MAX_DEPTH}")


def _populate(rec: RecursionData, sigma: float, depth: int, bracket: tuple[float, float],
              report: ConditionReport | None) -> EigenPair:
    alpha = rec.alpha
    x = _backward(alpha, sigma, 2, depth, _seed(alpha, sigma, depth, True))
    eta = np.full(depth + 1, np.nan)
    eta[2:] = [-x[p] for p in range(2, depth + 1)]
    log_abs_eta = np.log(np.abs(eta[2:]))
    log_c = np.full(depth + 1, -np.inf)
    log_c[1] = math.log(alpha[1])
    log_c[2:] = np.log(alpha[2:depth + 1]) + np.cumsum(log_abs_eta)
    p = np.arange(depth + 1)
    sign = np.where(p % 2 == 1, 1.0, -1.0)
    sign[0] = 0.0

    # residuals in units of the larger neighbour term max(|c_{p-1}|/alpha_{p-1}, |c_{p+1}|/alpha_{p+1})
    # u_p = log(|c_p|/alpha_p) - log c_1/alpha_1
    u = np.zeros(depth + 1)
    u[2:] = np.cumsum(log_abs_eta)
    res = [abs(sigma * alpha[1] + eta[2]) / abs(eta[2])]
    for q in range(2, depth):
        t_mid = sigma * alpha[q] * sign[q] * math.exp(u[q] - u[q - 1])
        t_up = sign[q + 1] * math.exp(u[q + 1] - u[q - 1])
        scale = max(1.0, math.exp(u[q + 1] - u[q - 1]))
        res.append(abs(t_mid + t_up + sign[q - 1]) / scale)
    residual_max = float(max(res[:min(len(res), 100)]))

    refined = stated = None
    if report is not None:
        bn = rec.b_norm
        refined = 0.5 * rec.a * math.sqrt(report.Ctilde2) * bn ** report.beta3
        stated = 2.0 * math.sqrt(report.Ctilde2) / rec.a * bn ** report.beta3
    return EigenPair(
        sigma=sigma, bracket=bracket, depth=depth, eta=eta, log_abs_c=log_c, sign_c=sign,
        residual_max=residual_max, eta2_gap=abs(eta[2] + sigma * alpha[1]) / (sigma * alpha[1]),
        admissible=bool(sigma * alpha[2] > 2), H_value=x[2] - sigma * alpha[1],
        refined_bound=refined, stated_bound=stated,
    )


def recursion_residuals(pair: EigenPair, rec: RecursionData, p_max: int | None = None) -> np.ndarray:
    """Relative recursion residuals for ``1 <= p <= p_max`` from the stored ``c_p``."""
    p_max = min(p_max or pair.depth - 1, pair.depth - 1)
    r = rec.extended(pair.depth + 1)
    lc, sg, al, s = pair.log_abs_c, pair.sign_c, r.alpha, pair.sigma
    out = np.empty(p_max)
    # work relative to the neighbour term of largest magnitude
    for p in range(1, p_max + 1):
        terms = [(math.log(s) + lc[p], sg[p]), (lc[p + 1] - math.log(al[p + 1]), sg[p + 1])]
        neigh = [lc[p + 1] - math.log(al[p + 1])]
        if p >= 2:
            terms.append((lc[p - 1] - math.log(al[p - 1]), sg[p - 1]))
            neigh.append(lc[p - 1] - math.log(al[p - 1]))
        ref = max(neigh)
        total = sum(sign * math.exp(lg - ref) for lg, sign in terms)
        out[p - 1] = abs(total)
    return out


def eta_window_violations(pair: EigenPair, rec: RecursionData) -> list[int]:
    """Indices ``p`` (with ``sigma alpha_p > 2``) where ``eta_p`` leaves its window.

    The window has relative width about ``(sigma alpha_p)**-2``; once that is
    below rounding, ``eta_p`` may land on either end, so ties within 4 ulp are
    accepted.
    """
    r = rec.extended(pair.depth + 1)
    bad = []
    for p in range(2, pair.depth):
        z = pair.sigma * r.alpha[p]
        if z > 2:
            lo = -2.0 / (z + math.sqrt(z * z - 4.0))
            hi = -1.0 / z
            e = pair.eta[p]
            slack = 4 * np.finfo(float).eps * abs(hi)
            if not (lo - slack <= e <= hi + slack):
                bad.append(p)
    return bad


# -- independent oracle ------------------------------------------------------------

def tridiagonal_oracle(rec: RecursionData, N: int, max_iter: int = 400) -> float:
    """Largest eigenvalue of the ``N x N`` truncation of ``sigma c = A c``.

    ``A[p, p+1] = -1/alpha_{p+1}``, ``A[p, p-1] = -1/alpha_{p-1}``.  The matrix
    is similar to the symmetric tridiagonal matrix with off-diagonals
    ``1/sqrt(alpha_p alpha_{p+1})``; its top eigenvalue is located by
    bisection on the Sturm count of the leading-minor recurrence.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if N > rec.P:
        raise ValueError(f"N={N} exceeds recursion depth P={rec.P}")
    al = rec.alpha
    e2 = [1.0 / (al[p] * al[p + 1]) for p in range(1, N)]
    bound = 2.0 * max(math.sqrt(v) for v in e2) + 1e-300

    def count_below(x: float) -> int:
        # number of eigenvalues < x from the signs of q_i = det_i / det_{i-1}
        n = 0
        q = -x
        for i in range(N):
            if i > 0:
                q = -x - e2[i - 1] / q
            if q == 0.0:
                q = -1e-300
            if q < 0:
                n += 1
        return n

    lo, hi = 0.0, bound
    for it in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        if count_below(mid) == N:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            return 0.5 * (lo + hi)
    raise RuntimeError(f"oracle bisection did not converge after {max_iter} iterations")


# -- eigenfunctions ------------------------------------------------------------------

def _mode_norms(pair: EigenPair, rec: RecursionData) -> tuple[np.ndarray, np.ndarray]:
    p = np.arange(1, pair.depth + 1)
    kabs = np.sqrt(rec.b_norm**2 + (p * rec.a) ** 2.0)
    return p, kabs


def normalize(pair: EigenPair, rec: RecursionData, gp: GevreyParams) -> EigenPair:
    """Attach the scale making ``||phi||_{G^s_tau} = 1`` and the resulting L2 norm."""
    d = len(rec.b) + 1
    p, kabs = _mode_norms(pair, rec)
    lc = pair.log_abs_c[1:]
    # each sin-product term spreads over 2^d modes of modulus |c_p| 2^-d
    base = -d * math.log(2.0)
    log_g2 = base + logsumexp(2 * lc + 2 * gp.r * np.log(kabs) + 2 * gp.tau * kabs ** (1 / gp.s))
    log_l2 = base + logsumexp(2 * lc)
    log_scale = -0.5 * log_g2
    norm = Normalization(s=gp.s, tau=gp.tau, r=gp.r, log_scale=float(log_scale), gevrey_norm=1.0,
                         l2_norm=float(math.exp(0.5 * log_l2 + log_scale)))
    return replace(pair, norm_target=norm)


def synthesize_eigenfunction(pair: EigenPair, rec: RecursionData, gp: GevreyParams,
                             K: int | None = None) -> SpectralField:
    """Spectral field of ``phi`` scaled to unit ``G^s_tau`` norm.

    ``K`` defaults to the smallest cube holding every coefficient above
    ``1e-16`` of the largest; modes with ``p a > K`` are dropped.
    """
    if pair.norm_target is None or (pair.norm_target.s, pair.norm_target.tau,
                                    pair.norm_target.r) != (gp.s, gp.tau, gp.r):
        pair = normalize(pair, rec, gp)
    lc = pair.log_abs_c
    keep = lc[1:] - np.max(lc[1:]) >= math.log(COEFF_FLOOR)
    p_eff = int(np.max(np.nonzero(keep)[0])) + 1
    if p_eff >= pair.depth:
        raise ValueError("coefficients do not decay below 1e-16 before the recursion depth")
    bmax = max(abs(x) for x in rec.b)
    if K is None:
        K = max(bmax, rec.a * p_eff)
    if K < bmax or K < rec.a:
        raise ValueError(f"K={K} cannot hold b={rec.b} and a={rec.a}")
    d = len(rec.b) + 1
    coeffs = np.ones((1,) * d, dtype=complex)
    for axis, f in enumerate(rec.b):
        v = np.zeros(2 * K + 1, dtype=complex)
        v[K + f] += 0.5 / 1j
        v[K - f] -= 0.5 / 1j
        shape = [1] * d
        shape[axis] = 2 * K + 1
        coeffs = coeffs * v.reshape(shape)
    w = np.zeros(2 * K + 1, dtype=complex)
    log_scale = pair.norm_target.log_scale
    for p in range(1, min(pair.depth, K // rec.a) + 1):
        c = pair.sign_c[p] * math.exp(lc[p] + log_scale)
        w[K + p * rec.a] += c * 0.5 / 1j
        w[K - p * rec.a] -= c * 0.5 / 1j
    shape = [1] * d
    shape[-1] = 2 * K + 1
    coeffs = coeffs * w.reshape(shape)
    return SpectralField(d, K, coeffs)


# -- sweeps ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    j: int
    b: tuple[int, ...]
    b_norm: float
    sigma: float
    sigma_lo: float
    sigma_hi: float
    lower_bound: float
    corrected_bound: float
    l2_norm: float
    gevrey_norm: float
    oracle_sigma: float
    residual: float
    flags: str = ""


SWEEP_HEADER = ("j", "b_norm", "sigma", "sigma_lo", "sigma_hi", "lower_bound", "l2_norm",
                "gevrey_norm", "corrected_bound", "oracle_sigma", "residual", "b", "flags")


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    beta3: float
    slope: float
    slope_ok: bool
    all_above_bound: bool
    all_above_corrected: bool
    C_l2: float
    l2_exponent: float

    def csv_rows(self) -> list[list[str]]:
        out = []
        for r in self.rows:
            out.append([str(r.j), f"{r.b_norm:.17g}", f"{r.sigma:.17g}", f"{r.sigma_lo:.17g}",
                        f"{r.sigma_hi:.17g}", f"{r.lower_bound:.17g}", f"{r.l2_norm:.17g}",
                        f"{r.gevrey_norm:.17g}", f"{r.corrected_bound:.17g}", f"{r.oracle_sigma:.17g}",
                        f"{r.residual:.3e}", " ".join(map(str, r.b)), r.flags])
        return out


def top_decade_slope(b_norm: np.ndarray, sigma: np.ndarray) -> float:
    sel = b_norm >= b_norm.max() / 10.0
    if sel.sum() < 2:
        return math.nan
    x, y = np.log(b_norm[sel]), np.log(sigma[sel])
    return float(np.polyfit(x, y, 1)[0])


def fit_l2_constant(b_norm: np.ndarray, l2: np.ndarray, exponent: float) -> float:
    """Smallest ``C >= 1`` with ``l2_j >= exp(-C |b_j|^exponent) / C`` for every ``j``."""
    best = 1.0
    for bn, v in zip(b_norm, l2):
        best = max(best, _solve_l2_C(bn**exponent, math.log(v)))
    return best


def _solve_l2_C(x: float, target: float) -> float:
    # exp(-C x)/C is decreasing in C, so the bound holds for every C >= root of f
    f = lambda C: target + math.log(C) + C * x
    if f(1.0) >= 0:
        return 1.0
    hi = 2.0
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 1.0, hi, xtol=1e-14, rtol=1e-14)


def sigma_growth_sweep(sym: MultiplierSymbol, a: int, sequence: BSequence, j_max: int,
                       gp: GevreyParams, report: ConditionReport, P: int = DEFAULT_DEPTH,
                       oracle_N: int = 200, tol: float = 1e-12,
                       threads: int | None = None) -> SweepResult:
    """Eigenvalues along ``b_j`` with the lower-bound and growth-law checks.

    ``lower_bound`` is ``(2 sqrt(C2)/a)|b|^beta3``; ``corrected_bound`` is
    ``(a/2) sqrt(C2)|b|^beta3``, the constant that follows from bounding
    ``1/sigma`` through the continued fraction.  For ``a = 1`` the first is
    four times the second.
    """

    def job(j: int) -> SweepRow:
        b = sequence(j)
        rec = build_recursion(sym, a, b, max(P, oracle_N))
        pair = normalize(solve_sigma(rec, tol=tol, report=report), rec, gp)
        oracle = tridiagonal_oracle(rec.extended(oracle_N), oracle_N)
        flags = []
        if not pair.bracket_contains():
            flags.append("bracket")
        if not pair.sigma > pair.stated_bound:
            flags.append("below_bound")
        if not pair.sigma > pair.refined_bound:
            flags.append("below_corrected_bound")
        if abs(oracle - pair.sigma) > 1e-8 * pair.sigma:
            flags.append("oracle")
        return SweepRow(j=j, b=b, b_norm=rec.b_norm, sigma=pair.sigma, sigma_lo=pair.bracket[0],
                        sigma_hi=pair.bracket[1], lower_bound=pair.stated_bound,
                        corrected_bound=pair.refined_bound, l2_norm=pair.norm_target.l2_norm,
                        gevrey_norm=pair.norm_target.gevrey_norm, oracle_sigma=oracle,
                        residual=pair.residual_max, flags=",".join(flags))

    js = range(1, j_max + 1)
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = tuple(ex.map(job, js))
    else:
        rows = tuple(job(j) for j in js)
    bn = np.array([r.b_norm for r in rows])
    sg = np.array([r.sigma for r in rows])
    slope = top_decade_slope(bn, sg)
    expo = (report.beta3 - report.beta1) / (gp.s * report.beta2)
    C = fit_l2_constant(bn, np.array([r.l2_norm for r in rows]), expo)
    return SweepResult(rows=rows, beta3=report.beta3, slope=slope,
                       slope_ok=bool(slope >= report.beta3 - 0.05),
                       all_above_bound=all(r.sigma > r.lower_bound for r in rows),
                       all_above_corrected=all(r.sigma > r.corrected_bound for r in rows),
                       C_l2=C, l2_exponent=expo)
