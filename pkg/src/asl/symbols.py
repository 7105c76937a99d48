"""Fourier multiplier symbols for active scalar constitutive laws.

Every built-in symbol has the form ``|k|**alpha * R(k)`` where ``R`` is a
rational function of the integer wave vector.  The rational core is kept
twice: a vectorised float version for sweeps and simulation, and an exact
:class:`fractions.Fraction` version for structural identity checks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

WaveVector = tuple[int, ...]

ArrayCore = Callable[[np.ndarray], np.ndarray]
ExactCore = Callable[[WaveVector], tuple[Fraction, ...]]
# integer array (d, ...) -> (numerators (d, ...), common denominator (...)), exact
IntegerCore = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


class SymbolError(ValueError):
    """A symbol could not be built or evaluated."""


def wave_vector(components: Sequence[int], d: int | None = None) -> WaveVector:
    k = tuple(int(c) for c in components)
    if any(int(c) != c for c in components):
        raise SymbolError(f"wave vector components must be integers, got {components!r}")
    if d is not None and len(k) != d:
        raise SymbolError(f"expected a {d}-vector, got {k!r}")
    return k


def _as_fraction(x: float | Fraction) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class MultiplierSymbol:
    """A map ``k -> T(k)`` in R^d with declared singular order.

    ``core`` takes an integer array of shape ``(d, ...)`` and returns the
    rational part with the same shape; ``alpha`` is the exponent of the
    ``|k|**alpha`` prefactor.  ``core_exact`` (optional) evaluates the
    rational part in exact arithmetic.
    """

    name: str
    d: int
    r0: float
    core: ArrayCore = field(repr=False, compare=False)
    core_exact: ExactCore | None = field(default=None, repr=False, compare=False)
    core_int: IntegerCore | None = field(default=None, repr=False, compare=False)
    alpha: float = 0.0
    params: Mapping[str, float] = field(default_factory=dict)
    parity: str = "even"
    zero_convention: str = ""

    def evaluate_array(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k)
        if k.shape[0] != self.d:
            raise SymbolError(f"{self.name}: expected leading axis of length {self.d}")
        out = np.asarray(self.core(k), dtype=float)
        if self.alpha != 0.0:
            kk = np.sum(np.asarray(k, dtype=float) ** 2, axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                fac = np.where(kk > 0, kk ** (0.5 * self.alpha), 0.0)
            out = out * fac
        return out

    def evaluate(self, k: Sequence[int]) -> np.ndarray:
        kv = np.asarray(wave_vector(k, self.d), dtype=np.int64)
        return self.evaluate_array(kv.reshape(self.d, 1))[:, 0]

    def exact(self, k: Sequence[int]) -> tuple[Fraction, ...]:
        """Exact rational core ``R(k)`` (the ``|k|**alpha`` factor excluded)."""
        if self.core_exact is None:
            raise SymbolError(f"{self.name} has no exact rational core")
        return self.core_exact(wave_vector(k, self.d))

    @property
    def is_rational(self) -> bool:
        return self.core_exact is not None and self.alpha == 0.0


# -- magnetogeostrophic ------------------------------------------------------

def _mg_core_array(omega: float, nu: float) -> ArrayCore:
    def core(k: np.ndarray) -> np.ndarray:
        k1, k2, k3 = (np.asarray(c, dtype=float) for c in k)
        kk = k1 * k1 + k2 * k2 + k3 * k3
        den = 4.0 * omega**2 * k3**2 * kk + nu**2 * k2**4
        num = np.stack([
            2.0 * omega * k2 * k3 * kk - nu * k1 * k2**2 * k3,
            -2.0 * omega * k1 * k3 * kk - nu * k2**3 * k3,
            nu * k2**2 * (k1**2 + k2**2),
        ])
        # den vanishes only when k3 == 0 and k2 == 0; the k3 == 0 plane is zeroed anyway
        live = k3 != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(live & (den != 0), num / np.where(den == 0, 1.0, den), 0.0)
        return out
    return core


def _mg_core_exact(omega: Fraction, nu: Fraction) -> ExactCore:
    def core(k: WaveVector) -> tuple[Fraction, ...]:
        k1, k2, k3 = k
        if k3 == 0:
            return (Fraction(0),) * 3
        kk = k1 * k1 + k2 * k2 + k3 * k3
        den = 4 * omega**2 * k3**2 * kk + nu**2 * k2**4
        return (
            (2 * omega * k2 * k3 * kk - nu * k1 * k2**2 * k3) / den,
            (-2 * omega * k1 * k3 * kk - nu * k2**3 * k3) / den,
            nu * k2**2 * (k1**2 + k2**2) / den,
        )
    return core


def _mg_core_int(omega: Fraction, nu: Fraction) -> IntegerCore:
    po, qo = omega.numerator, omega.denominator
    pn, qn = nu.numerator, nu.denominator

    coef = float(max(po, qo, pn, qn))

    def core(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        kmax = float(np.max(np.abs(k))) if np.size(k) else 0.0
        # |num| * |den| <= ~100 * coef**8 * kmax**8; callers multiply the two
        safe = 100.0 * coef**8 * max(kmax, 1.0) ** 8 < 2.0**62
        dtype = np.int64 if safe else object
        k1, k2, k3 = (np.asarray(c).astype(dtype) for c in k)
        kk = k1 * k1 + k2 * k2 + k3 * k3
        # numerators and denominator scaled by qo**2 * qn**2 to clear fractions
        den = 4 * po**2 * qn**2 * k3**2 * kk + pn**2 * qo**2 * k2**4
        num = np.stack([
            2 * po * qo * qn**2 * k2 * k3 * kk - pn * qn * qo**2 * k1 * k2**2 * k3,
            -2 * po * qo * qn**2 * k1 * k3 * kk - pn * qn * qo**2 * k2**3 * k3,
            pn * qn * qo**2 * k2**2 * (k1**2 + k2**2),
        ])
        dead = np.asarray(k[2]) == 0
        num[:, dead] = 0
        den = np.where(dead, 1, den)
        return num, den
    return core


def mg_symbol(params: Mapping[str, float] | None = None, alpha: float = 0.0) -> MultiplierSymbol:
    """Magnetogeostrophic symbol ``|k|**alpha * M(k)`` on the 3-torus.

    ``params`` holds ``Omega`` and ``beta2_over_eta`` (both default 1).
    ``M`` vanishes on the plane ``k3 = 0``.
    """
    params = dict(params or {})
    unknown = set(params) - {"Omega", "beta2_over_eta"}
    if unknown:
        raise SymbolError(f"mg: unknown parameters {sorted(unknown)}")
    omega = float(params.get("Omega", 1.0))
    nu = float(params.get("beta2_over_eta", 1.0))
    if not (omega > 0 and nu > 0):
        raise SymbolError("mg: Omega and beta2_over_eta must be positive")
    if not -1.0 <= alpha <= 1.0:
        raise SymbolError(f"mg: alpha={alpha} outside [-1, 1]")
    return MultiplierSymbol(
        name="mg" if alpha == 0 else f"mg(alpha={alpha:g})",
        d=3,
        r0=alpha + 1.0,
        core=_mg_core_array(omega, nu),
        core_exact=_mg_core_exact(_as_fraction(omega), _as_fraction(nu)),
        core_int=_mg_core_int(_as_fraction(omega), _as_fraction(nu)),
        alpha=float(alpha),
        params={"Omega": omega, "beta2_over_eta": nu},
        zero_convention="k3 = 0",
    )


# -- (singular) incompressible porous media -----------------------------------

def _ipm_core_array(k: np.ndarray) -> np.ndarray:
    k1, k2 = (np.asarray(c, dtype=float) for c in k)
    kk = k1 * k1 + k2 * k2
    num = np.stack([-k1 * k2, k1 * k1])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(kk > 0, num / np.where(kk == 0, 1.0, kk), 0.0)


def _ipm_core_exact(k: WaveVector) -> tuple[Fraction, ...]:
    k1, k2 = k
    kk = k1 * k1 + k2 * k2
    if kk == 0:
        return (Fraction(0), Fraction(0))
    return (Fraction(-k1 * k2, kk), Fraction(k1 * k1, kk))


def _ipm_core_int(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = (np.asarray(c, dtype=np.int64) for c in k)
    kk = k1 * k1 + k2 * k2
    num = np.stack([-k1 * k2, k1 * k1])
    return num, np.where(kk == 0, 1, kk)


def ipm_symbol(alpha: float = 0.0) -> MultiplierSymbol:
    """Porous-media symbol ``|k|**alpha * I(k)`` on the 2-torus, ``0 <= alpha < 2``."""
    if not 0.0 <= alpha < 2.0:
        raise SymbolError(f"ipm: alpha={alpha} outside [0, 2)")
    return MultiplierSymbol(
        name="ipm" if alpha == 0 else f"sipm(alpha={alpha:g})",
        d=2,
        r0=float(alpha),
        core=_ipm_core_array,
        core_exact=_ipm_core_exact,
        core_int=_ipm_core_int,
        alpha=float(alpha),
        params={},
        zero_convention="k = 0",
    )


def compose_fractional(base: MultiplierSymbol, alpha: float) -> MultiplierSymbol:
    """Symbol of ``(-Delta)**(alpha/2) T``: multiplies ``base`` by ``|k|**alpha``."""
    if alpha == 0:
        return base
    return replace(
        base,
        name=f"|k|^{alpha:g}*{base.name}",
        r0=base.r0 + alpha,
        alpha=base.alpha + alpha,
    )


PRESETS: dict[str, Callable[..., MultiplierSymbol]] = {
    "mg": mg_symbol,
    "ipm": ipm_symbol,
}


def make_symbol(symbol_id: str, params: Mapping[str, float] | None = None,
                alpha: float = 0.0) -> MultiplierSymbol:
    """Build a preset symbol from its string id (``"mg"`` or ``"ipm"``)."""
    if symbol_id == "mg":
        return mg_symbol(params, alpha)
    if symbol_id in ("ipm", "sipm"):
        if params:
            raise SymbolError(f"ipm takes no parameters, got {sorted(params)}")
        return ipm_symbol(alpha)
    raise SymbolError(f"unknown symbol id {symbol_id!r}; expected one of {sorted(PRESETS)}")


# -- lattice sweeps ------------------------------------------------------------

def lattice_cube(d: int, K: int) -> np.ndarray:
    """All integer vectors with max-norm <= K, shape ``(d, (2K+1)**d)``."""
    axes = np.meshgrid(*([np.arange(-K, K + 1)] * d), indexing="ij")
    return np.stack([a.ravel() for a in axes])


def lattice_ball(d: int, K: int) -> np.ndarray:
    """Nonzero integer vectors with ``1 <= |k| <= K``."""
    k = lattice_cube(d, K)
    kk = np.sum(k * k, axis=0)
    return k[:, (kk >= 1) & (kk <= K * K)]


@dataclass(frozen=True)
class SingularOrderReport:
    K: int
    r0: float
    sup_ratio: float
    argmax: WaveVector


def singular_order_report(sym: MultiplierSymbol, K: int, r0: float | None = None) -> SingularOrderReport:
    """Measure ``sup |T(k)| / |k|**r0`` over the lattice ball ``1 <= |k| <= K``.

    The declared ``sym.r0`` is used unless ``r0`` overrides it.
    """
    if K < 1:
        raise SymbolError("K must be >= 1")
    r0 = sym.r0 if r0 is None else r0
    k = lattice_ball(sym.d, K)
    vals = sym.evaluate_array(k)
    bad = ~np.isfinite(vals).all(axis=0)
    if bad.any():
        where = tuple(int(c) for c in k[:, np.argmax(bad)])
        raise SymbolError(f"{sym.name}: non-finite value at k={where}")
    norm_k = np.sqrt(np.sum(k.astype(float) ** 2, axis=0))
    ratio = np.linalg.norm(vals, axis=0) / norm_k**r0
    i = int(np.argmax(ratio))
    return SingularOrderReport(K=K, r0=r0, sup_ratio=float(ratio[i]),
                               argmax=tuple(int(c) for c in k[:, i]))


@dataclass(frozen=True)
class IdentityReport:
    """Exact structural checks over ``1 <= |k|_inf <= K``."""

    K: int
    n_checked: int
    divergence_free: bool
    even: bool
    zero_convention: bool
    first_failure: WaveVector | None = None


def check_identities(sym: MultiplierSymbol, K: int) -> IdentityReport:
    """Divergence-free, evenness and zero-convention checks in exact arithmetic.

    Uses the integer core (numerators over a common denominator), so every
    comparison is between Python integers.  The ``|k|**alpha`` factor is a
    positive even scalar and cannot change either identity.
    """
    if sym.core_int is None:
        raise SymbolError(f"{sym.name}: exact identity checks need an integer core")
    k = lattice_cube(sym.d, K)
    k = k[:, np.any(k != 0, axis=0)]
    num, den = sym.core_int(k)
    num_m, den_m = sym.core_int(-k)
    div = np.sum(k.astype(num.dtype) * num, axis=0)
    div_bad = div != 0
    even_bad = np.any(num * den_m != num_m * den, axis=0)
    bad = div_bad | even_bad
    failure = tuple(int(c) for c in k[:, np.argmax(bad)]) if bad.any() else None
    return IdentityReport(K=K, n_checked=k.shape[1], divergence_free=not div_bad.any(),
                          even=not even_bad.any(), zero_convention=_zero_convention_holds(sym, K),
                          first_failure=failure)


def _zero_convention_holds(sym: MultiplierSymbol, K: int) -> bool:
    if sym.core_int is None:
        return True
    if sym.zero_convention == "k3 = 0":
        k = lattice_cube(2, K)
        k = np.vstack([k, np.zeros((1, k.shape[1]), dtype=k.dtype)])
    elif sym.zero_convention == "k = 0":
        k = np.zeros((sym.d, 1), dtype=np.int64)
    else:
        return True
    num, _ = sym.core_int(k)
    return bool(np.all(num == 0))
