"""Truncated Fourier fields on the torus [0, 2pi]^d and their norms.

Convention: ``theta(x) = sum_k c(k) exp(i k.x)`` with
``c(k) = (2pi)^-d * integral theta exp(-i k.x)``.  A field keeps every mode
with ``max_i |k_i| <= K`` in a dense, centred array (index ``k + K`` along
each axis).  Norms sum over the stored modes only, without a ``(2pi)^d``
factor, so the L2 norm is the root-mean-square of ``theta``.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.special import logsumexp

# exponent beyond which Gevrey weights are summed in log space
LOG_SPACE_THRESHOLD = 500.0
MEAN_TOL = 1e-13
SYMMETRY_TOL = 1e-10


class FieldError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable mean-free spectral field."""

    d: int
    K: int
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (2 * self.K + 1,) * self.d:
            raise FieldError(f"coeffs shape {c.shape} does not match d={self.d}, K={self.K}")
        centre = (self.K,) * self.d
        scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
        if abs(c[centre]) > MEAN_TOL * scale:
            raise FieldError(f"field is not mean-free (mean mode {c[centre]:.3g}); use project_mean")
        c[centre] = 0.0
        if self.real:
            asym = np.max(np.abs(c - np.conj(_flip(c)))) if c.size else 0.0
            if asym > SYMMETRY_TOL * scale:
                raise FieldError(f"real field violates conjugate symmetry by {asym:.3g}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    # -- constructors --------------------------------------------------------
    @classmethod
    def zeros(cls, d: int, K: int) -> "SpectralField":
        return cls(d, K, np.zeros((2 * K + 1,) * d, dtype=complex))

    @classmethod
    def from_modes(cls, d: int, K: int, modes: Mapping[tuple[int, ...], complex],
                   real: bool = True) -> "SpectralField":
        c = np.zeros((2 * K + 1,) * d, dtype=complex)
        for k, v in modes.items():
            if len(k) != d or max(abs(x) for x in k) > K:
                raise FieldError(f"mode {k} outside the d={d}, K={K} cube")
            c[tuple(x + K for x in k)] = v
        return cls(d, K, c, real=real)

    @classmethod
    def sine_product(cls, d: int, K: int, freqs: Sequence[int], amplitude: float = 1.0) -> "SpectralField":
        """``amplitude * prod_i sin(freqs[i] x_i)``; every frequency must be nonzero."""
        if len(freqs) != d or any(f == 0 for f in freqs):
            raise FieldError("sine_product needs d nonzero frequencies")
        c = np.ones((1,) * d, dtype=complex) * amplitude
        for axis, f in enumerate(freqs):
            v = np.zeros(2 * K + 1, dtype=complex)
            v[K + f] += 0.5 / 1j
            v[K - f] -= 0.5 / 1j
            shape = [1] * d
            shape[axis] = 2 * K + 1
            c = c * v.reshape(shape)
        return cls(d, K, c)

    @classmethod
    def project_mean(cls, d: int, K: int, coeffs: np.ndarray, real: bool = True) -> "SpectralField":
        """Mean-free projection: drop the ``k = 0`` mode."""
        c = np.array(coeffs, dtype=complex)
        c[(K,) * d] = 0.0
        return cls(d, K, c, real=real)

    # -- lattice helpers -----------------------------------------------------
    def wavenumbers(self) -> np.ndarray:
        return wavenumber_grid(self.d, self.K)

    def abs_k(self) -> np.ndarray:
        return np.sqrt(np.sum(self.wavenumbers().astype(float) ** 2, axis=0))

    def __getitem__(self, k: tuple[int, ...]) -> complex:
        return complex(self.coeffs[tuple(x + self.K for x in k)])

    # -- arithmetic ----------------------------------------------------------
    def _like(self, coeffs: np.ndarray, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.d, self.K, coeffs, self.real if real is None else real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_compatible(self, other)
        return self._like(self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_compatible(self, other)
        return self._like(self.coeffs - other.coeffs, self.real and other.real)

    def __mul__(self, c: complex) -> "SpectralField":
        c = complex(c)
        return self._like(self.coeffs * c, self.real and c.imag == 0)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * -1.0

    def resized(self, K: int) -> "SpectralField":
        """Same field on a cube of radius ``K`` (zero padding or truncation)."""
        return SpectralField(self.d, K, resize_cube(self.coeffs, self.K, K), self.real)

    def conjugate_asymmetry(self) -> float:
        return float(np.max(np.abs(self.coeffs - np.conj(_flip(self.coeffs)))))

    # -- serialisation -------------------------------------------------------
    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"k{i + 1}" for i in range(self.d)] + ["re", "im"])
        k = self.wavenumbers().reshape(self.d, -1)
        c = self.coeffs.ravel()
        for idx in np.flatnonzero(c):
            w.writerow([*(int(x) for x in k[:, idx]), f"{c[idx].real:.17g}", f"{c[idx].imag:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str, K: int | None = None, real: bool = True) -> "SpectralField":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader)
        d = len(header) - 2
        modes = {}
        for row in reader:
            k = tuple(int(x) for x in row[:d])
            modes[k] = complex(float(row[d]), float(row[d + 1]))
        if K is None:
            K = max((max(abs(x) for x in k) for k in modes), default=1)
        return cls.from_modes(d, K, modes, real=real)


def _flip(c: np.ndarray) -> np.ndarray:
    return c[(slice(None, None, -1),) * c.ndim]


def _check_compatible(f: SpectralField, g: SpectralField) -> None:
    if f.d != g.d or f.K != g.K:
        raise FieldError(f"incompatible fields (d={f.d},K={f.K}) vs (d={g.d},K={g.K})")


def wavenumber_grid(d: int, K: int) -> np.ndarray:
    """Integer wave vectors of the cube, shape ``(d, 2K+1, ..., 2K+1)``."""
    return np.stack(np.meshgrid(*([np.arange(-K, K + 1)] * d), indexing="ij"))


def resize_cube(c: np.ndarray, K_old: int, K_new: int) -> np.ndarray:
    d = c.ndim
    out = np.zeros((2 * K_new + 1,) * d, dtype=c.dtype)
    m = min(K_old, K_new)
    src = tuple(slice(K_old - m, K_old + m + 1) for _ in range(d))
    dst = tuple(slice(K_new - m, K_new + m + 1) for _ in range(d))
    out[dst] = c[src]
    return out


# -- norms ---------------------------------------------------------------------

@dataclass(frozen=True)
class GevreyParams:
    s: float = 1.0
    tau: float = 0.1
    r: float = 4.0

    def __post_init__(self):
        if not self.s >= 1:
            raise ValueError(f"Gevrey index s={self.s} must be >= 1")
        if not self.tau > 0:
            raise ValueError(f"Gevrey radius tau={self.tau} must be > 0")
        if not self.r > 3:
            raise ValueError(f"Sobolev weight r={self.r} must be > 3")


def log_gevrey_terms(abs_k: np.ndarray, amp2: np.ndarray, p: GevreyParams) -> np.ndarray:
    """Per-mode ``log(|k|^2r e^{2 tau |k|^{1/s}} |c|^2)``; ``-inf`` where ``c = 0``."""
    with np.errstate(divide="ignore"):
        return 2 * p.r * np.log(abs_k) + 2 * p.tau * abs_k ** (1 / p.s) + np.log(amp2)


def log_gevrey_norm(f: SpectralField, p: GevreyParams) -> float:
    amp2 = np.abs(f.coeffs) ** 2
    mask = amp2 > 0
    if not mask.any():
        return -math.inf
    terms = log_gevrey_terms(f.abs_k()[mask], amp2[mask], p)
    return 0.5 * float(logsumexp(terms))


def gevrey_norm(f: SpectralField, p: GevreyParams) -> float:
    """``sqrt(sum_{k != 0} |k|^{2r} e^{2 tau |k|^{1/s}} |c(k)|^2)``; ``inf`` on overflow."""
    kabs = f.abs_k()
    amp2 = np.abs(f.coeffs) ** 2
    mask = amp2 > 0
    if not mask.any():
        return 0.0
    expo = p.tau * kabs[mask] ** (1 / p.s)
    if np.max(expo) <= LOG_SPACE_THRESHOLD:
        w = kabs[mask] ** (2 * p.r) * np.exp(2 * expo)
        return float(math.sqrt(np.sum(w * amp2[mask])))
    log_norm = 0.5 * float(logsumexp(log_gevrey_terms(kabs[mask], amp2[mask], p)))
    return math.exp(log_norm) if log_norm < math.log(np.finfo(float).max) else math.inf


def sobolev_norm(f: SpectralField, q: float) -> float:
    """Inhomogeneous ``H^q`` norm ``(sum (1+|k|^2)^q |c(k)|^2)^{1/2}``."""
    kk = f.abs_k() ** 2
    return float(math.sqrt(np.sum((1 + kk) ** q * np.abs(f.coeffs) ** 2)))


def l2_norm(f: SpectralField) -> float:
    return float(math.sqrt(np.sum(np.abs(f.coeffs) ** 2)))


def inner(f: SpectralField, g: SpectralField) -> complex:
    """``sum_k f(k) conj(g(k))`` (the L2 pairing normalised by ``(2pi)^d``)."""
    _check_compatible(f, g)
    return complex(np.sum(f.coeffs * np.conj(g.coeffs)))


@dataclass(frozen=True)
class RadiusSchedule:
    """Linearly shrinking analyticity radius ``tau(t) = tau0 - 2 C K0 t``."""

    tau0: float
    C: float
    K0: float

    def __post_init__(self):
        if not (self.tau0 > 0 and self.C > 0 and self.K0 > 0):
            raise ValueError("tau0, C and K0 must all be positive")

    @property
    def t_star(self) -> float:
        return self.tau0 / (2 * self.C * self.K0)

    def tau(self, t: float) -> float:
        return self.tau0 - 2 * self.C * self.K0 * t


def radius_schedule(tau0: float, C: float = 1.0, K0: float = 1.0) -> RadiusSchedule:
    return RadiusSchedule(tau0, C, K0)


# -- transforms ----------------------------------------------------------------

def _fft_index(K: int, N: int) -> np.ndarray:
    return np.arange(-K, K + 1) % N


def cube_to_grid(coeffs: np.ndarray, K: int, N: int, workers: int | None = None) -> np.ndarray:
    """Physical samples on the uniform ``N^d`` grid from a centred coefficient cube."""
    d = coeffs.ndim
    big = np.zeros((N,) * d, dtype=complex)
    idx = _fft_index(K, N)
    big[np.ix_(*([idx] * d))] = coeffs
    return sfft.ifftn(big, norm="forward", workers=workers)


def grid_to_cube(samples: np.ndarray, K: int, workers: int | None = None) -> np.ndarray:
    N = samples.shape[0]
    d = samples.ndim
    full = sfft.fftn(samples, norm="forward", workers=workers)
    idx = _fft_index(K, N)
    return full[np.ix_(*([idx] * d))]


def to_physical(f: SpectralField, N: int | None = None) -> np.ndarray:
    """Sample ``f`` on the grid ``x_j = 2 pi j / N`` (real array for real fields)."""
    N = 2 * f.K + 2 if N is None else N
    if N < 2 * f.K + 2:
        raise FieldError(f"grid N={N} too small for K={f.K} (need N >= {2 * f.K + 2})")
    g = cube_to_grid(f.coeffs, f.K, N)
    return g.real.copy() if f.real else g


def from_physical(samples: np.ndarray, K: int, project_mean: bool = False) -> SpectralField:
    """Coefficients with ``|k|_inf <= K`` of uniformly sampled data."""
    samples = np.asarray(samples)
    N = samples.shape[0]
    if any(n != N for n in samples.shape):
        raise FieldError("grid must have the same size along every axis")
    if N < 2 * K + 2:
        raise FieldError(f"grid N={N} too small for K={K} (need N >= {2 * K + 2})")
    c = grid_to_cube(samples, K)
    real = not np.iscomplexobj(samples)
    if real:
        c = 0.5 * (c + np.conj(_flip(c)))
    d = samples.ndim
    if project_mean:
        return SpectralField.project_mean(d, K, c, real=real)
    return SpectralField(d, K, c, real=real)


def physical_grid(d: int, N: int) -> list[np.ndarray]:
    x = 2 * np.pi * np.arange(N) / N
    return np.meshgrid(*([x] * d), indexing="ij")


def random_analytic_field(d: int, K: int, decay: float = 1.0, amplitude: float = 1.0,
                          seed: int | None = None) -> SpectralField:
    """Random real field with ``|c(k)|`` proportional to ``exp(-decay |k|)``.

    ``amplitude`` sets the L2 norm.  The seed defaults to ``ASL_SEED`` (or 0).
    """
    if seed is None:
        seed = int(os.environ.get("ASL_SEED", "0"))
    rng = np.random.default_rng(seed)
    shape = (2 * K + 1,) * d
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kabs = np.sqrt(np.sum(wavenumber_grid(d, K).astype(float) ** 2, axis=0))
    c = z * np.exp(-decay * kabs)
    c = 0.5 * (c + np.conj(_flip(c)))
    c[(K,) * d] = 0.0
    c *= amplitude / math.sqrt(np.sum(np.abs(c) ** 2))
    return SpectralField(d, K, c)
