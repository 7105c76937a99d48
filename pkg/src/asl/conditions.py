"""Finite-sweep verification of the ill-posedness conditions (C1)-(C6).

All conditions concern the last velocity component ``T_d`` evaluated along
``(b_j, n a)`` for a sequence of transverse wave vectors ``b_j``.  C1, C2
and C4 are decided in exact arithmetic whenever the symbol carries a
rational core; C3, C5 and C6 are asymptotic statements, so the sweep only
exhibits finite evidence for them (see :func:`verify_conditions`).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .symbols import MultiplierSymbol

CONDITIONS = ("C1", "C2", "C3", "C4", "C5", "C6")
EPS_TAIL = 1e-6
STABILITY_TOL = 0.10


class ConstraintViolation(ValueError):
    """The exponents (beta1, beta2, beta3) violate the admissible block."""


@dataclass(frozen=True)
class BSequence:
    """A named generator ``j -> b_j`` of transverse wave vectors."""

    name: str
    fn: Callable[[int], tuple[int, ...]] = field(repr=False, compare=False)

    def __call__(self, j: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.fn(j))


MG_SEQUENCE = BSequence("mg", lambda j: (j * j, j))
SIPM_SEQUENCE = BSequence("sipm", lambda j: (j,))
SEQUENCES = {"mg": MG_SEQUENCE, "sipm": SIPM_SEQUENCE}


def beta_violations(betas: Sequence[float], r0: float) -> list[str]:
    b1, b2, b3 = betas
    out = []
    if not b3 > 0:
        out.append(f"beta3 > 0 violated (beta3={b3:g})")
    if not b3 <= b1:
        out.append(f"beta3 <= beta1 violated ({b3:g} > {b1:g})")
    if not b1 + b2 <= r0 + 1e-12:
        out.append(f"beta1 + beta2 <= r0 violated ({b1 + b2:g} > {r0:g})")
    if not -2 <= b2 < 0:
        out.append(f"-2 <= beta2 < 0 violated (beta2={b2:g})")
    return out


def check_betas(betas: Sequence[float], r0: float) -> None:
    bad = beta_violations(betas, r0)
    if bad:
        raise ConstraintViolation("; ".join(bad))


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: str


@dataclass(frozen=True)
class WitnessRow:
    condition: str
    j: int
    b: tuple[int, ...]
    n: int
    value: float
    bound: float
    holds: bool
    note: str = ""


@dataclass(frozen=True)
class ConditionReport:
    symbol: str
    a: int
    sequence_name: str
    beta1: float
    beta2: float
    beta3: float
    j_max: int
    n_max: int
    verdicts: dict[str, Verdict]
    Ctilde1: float
    Ctilde2: float
    Ctilde1_stable: bool
    Ctilde2_stable: bool
    rows: tuple[WitnessRow, ...] = field(repr=False)

    @property
    def betas(self) -> tuple[float, float, float]:
        return (self.beta1, self.beta2, self.beta3)

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts.values())

    def summary_line(self) -> str:
        flags = " ".join(f"{c}={'pass' if self.verdicts[c].holds else 'FAIL'}" for c in CONDITIONS)
        return (f"conditions symbol={self.symbol} a={self.a} sequence={self.sequence_name} "
                f"betas=({self.beta1:g},{self.beta2:g},{self.beta3:g}) j_max={self.j_max} "
                f"n_max={self.n_max} {flags} Ctilde1={self.Ctilde1:.12g} "
                f"Ctilde2={self.Ctilde2:.12g} Ctilde1_stable={self.Ctilde1_stable} "
                f"Ctilde2_stable={self.Ctilde2_stable}")

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["condition", "j", "b", "n", "value", "bound", "holds", "note"])
        for r in self.rows:
            w.writerow([r.condition, r.j, " ".join(map(str, r.b)), r.n,
                        f"{r.value:.17g}", f"{r.bound:.17g}", int(r.holds), r.note])
        return buf.getvalue()


def _exact_last(sym: MultiplierSymbol, k: tuple[int, ...]) -> Fraction:
    assert sym.core_exact is not None
    return sym.core_exact(k)[-1]


def _alpha_fraction(alpha: float) -> Fraction | None:
    f = Fraction(alpha)
    return f if f.denominator <= 64 else None


def _strictly_less(sym: MultiplierSymbol, k_new: tuple[int, ...], k_old: tuple[int, ...],
                   f_new: float, f_old: float) -> bool:
    """``T_d(k_new) < T_d(k_old)``, exactly when the symbol allows it."""
    alpha = _alpha_fraction(sym.alpha)
    if sym.core_exact is None or alpha is None:
        return f_new < f_old
    r_new, r_old = _exact_last(sym, k_new), _exact_last(sym, k_old)
    if r_new <= 0 or r_old <= 0:
        return r_new < r_old
    m_new, m_old = sum(c * c for c in k_new), sum(c * c for c in k_old)
    if alpha == 0:
        return r_new < r_old
    # m**(alpha/2) R, alpha = p/q: raise both sides to the power 2q
    p, q = alpha.numerator, alpha.denominator
    lhs = r_new ** (2 * q) * Fraction(m_new) ** p
    rhs = r_old ** (2 * q) * Fraction(m_old) ** p
    return lhs < rhs


def _log_slope(n: np.ndarray, v: np.ndarray) -> float:
    x, y = np.log(n), np.log(v)
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def verify_conditions(sym: MultiplierSymbol, a: int, sequence: BSequence,
                      betas: Sequence[float], j_max: int, n_max: int,
                      eps_tail: float = EPS_TAIL) -> ConditionReport:
    """Check (C1)-(C6) on ``1 <= j <= j_max``, ``1 <= n <= n_max``.

    C3 (a limit) is accepted on finite evidence: the last ten samples must
    strictly decrease and the log-log slope of ``n -> T_d(b_j, n a)`` over
    the top decade of ``n`` must be negative.  Whether the tail value itself
    is below ``eps_tail`` is recorded in the witness but does not decide the
    verdict.  The fitted constants are the sample extremes: ``Ctilde1`` the
    max of ``T_d / (|b|**beta1 n**beta2)``, ``Ctilde2`` the min of
    ``T_d(b, a) T_d(b, 2a) / |b|**(2 beta3)``; each is flagged unstable when
    its running extreme still moves by 10% or more over the top half of the
    ``j`` range.
    """
    betas = tuple(float(b) for b in betas)
    check_betas(betas, sym.r0)
    if a < 1 or j_max < 2 or n_max < 20:
        raise ValueError("need a >= 1, j_max >= 2 and n_max >= 20")
    beta1, beta2, beta3 = betas
    d = sym.d
    bs = [sequence(j) for j in range(1, j_max + 1)]
    if any(len(b) != d - 1 for b in bs):
        raise ValueError(f"sequence {sequence.name} must yield {d - 1}-vectors")
    bnorm = np.array([math.sqrt(sum(c * c for c in b)) for b in bs])
    if np.any(np.diff(bnorm) <= 0):
        raise ValueError(f"sequence {sequence.name}: |b_j| must be strictly increasing")

    rows: list[WitnessRow] = []
    verdicts: dict[str, Verdict] = {}
    ns = np.arange(1, n_max + 1)

    # C1: steady state sin(a x_d) has zero velocity
    k0 = (0,) * (d - 1) + (a,)
    if sym.core_exact is not None:
        c1 = all(v == 0 for v in sym.core_exact(k0))
        v0 = 0.0 if c1 else float(max(abs(v) for v in sym.core_exact(k0)))
    else:
        v0 = float(np.max(np.abs(sym.evaluate(k0))))
        c1 = v0 == 0.0
    rows.append(WitnessRow("C1", 0, k0[:-1], 1, v0, 0.0, c1, "max |T(0', a)|"))
    verdicts["C1"] = Verdict(c1, f"|T(0',{a})| = {v0:g}")

    # values on the (j, n) grid, float
    grid = np.empty((j_max, n_max))
    for i, b in enumerate(bs):
        k = np.vstack([np.repeat(np.array(b)[:, None], n_max, axis=1), a * ns[None, :]])
        grid[i] = sym.evaluate_array(k)[-1]

    # C2: positivity and evenness of T_d on the samples
    c2_ok = True
    c2_notes = []
    for i, b in enumerate(bs):
        pos = bool(np.all(grid[i] > 0))
        even = True
        for n in (1, 2, n_max):
            k = tuple(b) + (n * a,)
            km = tuple(-c for c in k)
            if sym.core_exact is not None:
                even &= _exact_last(sym, k) == _exact_last(sym, km)
            else:
                even &= bool(np.isclose(sym.evaluate(k)[-1], sym.evaluate(km)[-1], rtol=1e-14))
        ok = pos and even
        if not pos:
            n_bad = int(ns[np.argmax(grid[i] <= 0)])
            c2_notes.append(f"T_d <= 0 at j={i + 1}, n={n_bad}")
        if not even:
            c2_notes.append(f"not even at j={i + 1}")
        c2_ok &= ok
        rows.append(WitnessRow("C2", i + 1, b, int(ns[np.argmin(grid[i])]), float(grid[i].min()),
                               0.0, ok, "min over n; evenness checked at n in {1,2,n_max}"))
    rational = "rational core" if sym.core_exact is not None else "no rational core"
    verdicts["C2"] = Verdict(c2_ok, "; ".join(c2_notes) or f"positive and even on all samples ({rational})")

    # C4: strict decrease in n (exact when possible)
    c4_ok = True
    c4_first = ""
    decreasing_tail = []
    for i, b in enumerate(bs):
        first_bad = 0
        for n in range(1, n_max):
            k_old, k_new = tuple(b) + (n * a,), tuple(b) + ((n + 1) * a,)
            if not _strictly_less(sym, k_new, k_old, grid[i, n], grid[i, n - 1]):
                first_bad = n
                break
        ok = first_bad == 0
        decreasing_tail.append(ok or first_bad < n_max - 10)
        if not ok and not c4_first:
            c4_first = f"T_d(b,{first_bad + 1}a) >= T_d(b,{first_bad}a) at j={i + 1}"
        c4_ok &= ok
        rows.append(WitnessRow("C4", i + 1, b, first_bad, float(grid[i, -1]), float(grid[i, 0]), ok,
                               "n = first non-decrease (0 if none)"))
    verdicts["C4"] = Verdict(c4_ok, c4_first or f"strictly decreasing for n <= {n_max} on every j")

    # C3: finite evidence of decay to zero
    top = ns >= max(1, n_max // 10)
    c3_ok = True
    worst_slope = -math.inf
    below_eps = 0
    for i, b in enumerate(bs):
        last_ok = bool(np.all(np.diff(grid[i, -11:]) < 0)) and decreasing_tail[i]
        slope = _log_slope(ns[top], grid[i, top]) if np.all(grid[i, top] > 0) else math.nan
        tail = float(grid[i, -1])
        small = tail < eps_tail
        below_eps += small
        ok = last_ok and slope < 0
        worst_slope = max(worst_slope, slope) if not math.isnan(slope) else math.inf
        c3_ok &= ok
        rows.append(WitnessRow("C3", i + 1, b, n_max, tail, eps_tail, ok,
                               f"tail log-slope={slope:.6g}; tail<eps_tail={int(small)}"))
    verdicts["C3"] = Verdict(c3_ok, f"max tail log-slope {worst_slope:.4g} over n in "
                                    f"[{n_max // 10},{n_max}]; tail below {eps_tail:g} "
                                    f"for {below_eps}/{j_max} j")

    # C5: Ctilde1 = max T_d / (|b|^beta1 n^beta2)
    ratio5 = grid / (bnorm[:, None] ** beta1 * ns[None, :].astype(float) ** beta2)
    per_j5 = ratio5.max(axis=1)
    run_max = np.maximum.accumulate(per_j5)
    half = (j_max + 1) // 2 - 1
    C1t = float(run_max[-1])
    stable1 = bool(np.isfinite(C1t) and C1t > 0
                   and (run_max[-1] - run_max[half]) / run_max[-1] < STABILITY_TOL)
    for i, b in enumerate(bs):
        rows.append(WitnessRow("C5", i + 1, b, int(ns[np.argmax(ratio5[i])]), float(per_j5[i]),
                               C1t, bool(per_j5[i] <= C1t), "max over n of T_d/(|b|^b1 n^b2)"))
    i1 = int(np.argmax(per_j5))
    rows.append(WitnessRow("Ctilde1", i1 + 1, bs[i1], int(ns[np.argmax(ratio5[i1])]), C1t,
                           float(run_max[half]), stable1, "value=Ctilde1; bound=running max at j_max/2"))
    c5_ok = bool(np.isfinite(C1t) and C1t > 0 and stable1)
    verdicts["C5"] = Verdict(c5_ok, f"Ctilde1={C1t:.6g} attained at j={i1 + 1}; stable={stable1}")

    # C6: Ctilde2 = min T_d(b,a) T_d(b,2a) / |b|^(2 beta3)
    ratio6 = grid[:, 0] * grid[:, 1] / bnorm ** (2 * beta3)
    run_min = np.minimum.accumulate(ratio6)
    C2t = float(run_min[-1])
    stable2 = bool(np.isfinite(C2t) and C2t > 0
                   and (run_min[half] - run_min[-1]) / run_min[half] < STABILITY_TOL)
    for i, b in enumerate(bs):
        rows.append(WitnessRow("C6", i + 1, b, 1, float(ratio6[i]), C2t, bool(ratio6[i] >= C2t),
                               "T_d(b,a)T_d(b,2a)/|b|^(2 b3)"))
    i2 = int(np.argmin(ratio6))
    rows.append(WitnessRow("Ctilde2", i2 + 1, bs[i2], 1, C2t, float(run_min[half]), stable2,
                           "value=Ctilde2; bound=running min at j_max/2"))
    c6_ok = bool(np.isfinite(C2t) and C2t > 0 and stable2)
    verdicts["C6"] = Verdict(c6_ok, f"Ctilde2={C2t:.6g} attained at j={i2 + 1}; stable={stable2}")

    return ConditionReport(
        symbol=sym.name, a=a, sequence_name=sequence.name, beta1=beta1, beta2=beta2, beta3=beta3,
        j_max=j_max, n_max=n_max, verdicts=verdicts, Ctilde1=C1t, Ctilde2=C2t,
        Ctilde1_stable=stable1, Ctilde2_stable=stable2, rows=tuple(rows),
    )
