"""Spherical-harmonic transforms on a Gauss-Legendre grid and the exterior DtN map.

Harmonics are the orthonormal complex ``Y_n^m`` with the Condon-Shortley
phase (the convention of :func:`scipy.special.sph_harm_y`).  Coefficients are
taken on the unit sphere and stored as a dense ``(L+1, 2L+1)`` array indexed
``[n, m + L]``; entries with ``|m| > n`` are zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

TAIL_WARN = 0.01


class BandLimitWarning(UserWarning):
    """More than 1% of the energy sits in the top quarter of the band."""


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre nodes in ``cos(theta)`` times ``2L+2`` uniform azimuths.

    Nodes are flattened theta-major, so ``values.reshape(n_theta, n_phi)``
    recovers the tensor layout.
    """

    R: float
    L: int

    def __post_init__(self):
        if self.R <= 0 or self.L < 0:
            raise ValueError("SphereGrid needs R > 0 and L >= 0")

    @cached_property
    def _gl(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.L + 1)
        return x[::-1].copy(), w[::-1].copy()

    @property
    def n_theta(self) -> int:
        return self.L + 1

    @property
    def n_phi(self) -> int:
        return 2 * self.L + 2

    @property
    def cos_theta(self) -> np.ndarray:
        return self._gl[0]

    @property
    def theta(self) -> np.ndarray:
        return np.arccos(self.cos_theta)

    @property
    def phi(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi

    @cached_property
    def directions(self) -> np.ndarray:
        ct = self.cos_theta[:, None]
        st = np.sqrt(1.0 - ct**2)
        ph = self.phi[None, :]
        d = np.stack(np.broadcast_arrays(st * np.cos(ph), st * np.sin(ph), ct), axis=-1)
        return d.reshape(-1, 3)

    @property
    def nodes(self) -> np.ndarray:
        return self.R * self.directions

    @cached_property
    def unit_weights(self) -> np.ndarray:
        w = self._gl[1][:, None] * np.full(self.n_phi, 2.0 * np.pi / self.n_phi)[None, :]
        return w.ravel()

    @property
    def weights(self) -> np.ndarray:
        return self.R**2 * self.unit_weights


@dataclass(frozen=True)
class HarmonicCoefficients:
    L: int
    a: np.ndarray

    def __post_init__(self):
        if self.a.shape != (self.L + 1, 2 * self.L + 1):
            raise ValueError(f"coefficient array must be {(self.L + 1, 2 * self.L + 1)}")

    def __getitem__(self, nm: tuple[int, int]) -> complex:
        n, m = nm
        if abs(m) > n or n > self.L:
            return 0.0j
        return complex(self.a[n, m + self.L])

    def degree_energy(self) -> np.ndarray:
        return np.sum(np.abs(self.a) ** 2, axis=1)

    def tail_fraction(self) -> float:
        e = self.degree_energy()
        total = e.sum()
        if total == 0.0:
            return 0.0
        return float(e[int(np.floor(0.75 * self.L)) + 1:].sum() / total)

    def scaled(self, per_degree: np.ndarray) -> "HarmonicCoefficients":
        return HarmonicCoefficients(self.L, self.a * np.asarray(per_degree)[:, None])


@lru_cache(maxsize=32)
def _legendre_cached(L: int, x_bytes: bytes) -> np.ndarray:
    return legendre_table(L, np.frombuffer(x_bytes))


def legendre_table(L: int, x: np.ndarray) -> np.ndarray:
    """Normalised ``P_n^m(x)`` for ``0 <= m <= n <= L``; shape ``(L+1, L+1, len(x))`` as ``[n, m]``.

    ``Y_n^m(theta, phi) = P[n, m](cos theta) * exp(i m phi)`` for ``m >= 0``.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.maximum(0.0, 1.0 - x**2))
    P = np.zeros((L + 1, L + 1, x.size))
    pmm = np.full(x.size, 1.0 / np.sqrt(4.0 * np.pi))
    for m in range(L + 1):
        if m > 0:
            pmm = -np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
        P[m, m] = pmm
        if m + 1 <= L:
            P[m + 1, m] = np.sqrt(2.0 * m + 3.0) * x * pmm
        for n in range(m + 2, L + 1):
            a = np.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
            b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
            P[n, m] = a * (x * P[n - 1, m] - b * P[n - 2, m])
    return P


def _table(grid: SphereGrid, L: int) -> np.ndarray:
    return _legendre_cached(L, np.ascontiguousarray(grid.cos_theta).tobytes())


def _signed_table(P: np.ndarray) -> np.ndarray:
    """Extend ``[n, m>=0]`` to ``[n, m+L]`` using ``P_n^{-m} = (-1)^m P_n^m``."""
    L = P.shape[0] - 1
    m = np.arange(-L, L + 1)
    sign = np.where(m < 0, (-1.0) ** np.abs(m), 1.0)
    return P[:, np.abs(m), :] * sign[None, :, None]


def analyze(values, grid: SphereGrid, L: int | None = None) -> HarmonicCoefficients:
    """Forward transform of nodal values; exact when ``values`` has degree ``<= grid.L``."""
    L = grid.L if L is None else int(L)
    if L > grid.L:
        raise ValueError(f"band limit {L} exceeds grid band limit {grid.L}")
    v = np.asarray(values).reshape(grid.n_theta, grid.n_phi)
    F = np.fft.fft(v, axis=1) * (2.0 * np.pi / grid.n_phi)
    m = np.arange(-L, L + 1)
    Fm = F[:, m % grid.n_phi]
    P = _signed_table(_table(grid, L))
    w = grid._gl[1]
    a = np.einsum("nmt,t,tm->nm", P, w, Fm)
    a[np.abs(m)[None, :] > np.arange(L + 1)[:, None]] = 0.0
    return HarmonicCoefficients(L, a)


def synthesize(coeffs: HarmonicCoefficients, grid: SphereGrid) -> np.ndarray:
    """Nodal values on ``grid`` (any band limit) from coefficients."""
    L = coeffs.L
    if grid.n_phi <= 2 * L:
        raise ValueError("grid too coarse in azimuth for these coefficients")
    x = grid.cos_theta
    P = _signed_table(_legendre_cached(L, np.ascontiguousarray(x).tobytes()))
    G = np.einsum("nmt,nm->tm", P, coeffs.a)
    spec = np.zeros((grid.n_theta, grid.n_phi), dtype=complex)
    m = np.arange(-L, L + 1)
    spec[:, m % grid.n_phi] = G
    return (np.fft.ifft(spec, axis=1) * grid.n_phi).ravel()


def resample(values, grid: SphereGrid, target: SphereGrid) -> np.ndarray:
    return synthesize(analyze(values, grid), target)


def spherical_hankel_all(nmax: int, z):
    """``h_n^(1)(z)`` and derivatives for ``n = 0..nmax`` (upward recurrence)."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("spherical_hankel needs z > 0")
    h = np.empty((nmax + 1,) + z.shape, dtype=complex)
    e = np.exp(1j * z)
    h[0] = -1j * e / z
    if nmax >= 1:
        h[1] = -e * (z + 1j) / z**2
    for n in range(1, nmax):
        h[n + 1] = (2 * n + 1) / z * h[n] - h[n - 1]
    dh = np.empty_like(h)
    dh[0] = -h[1] if nmax >= 1 else (1j - 1.0 / z) * h[0]
    for n in range(1, nmax + 1):
        dh[n] = h[n - 1] - (n + 1) / z * h[n]
    return h, dh


def spherical_hankel(n: int, z):
    """``(h_n^(1)(z), h_n^(1)'(z))``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    h, dh = spherical_hankel_all(int(n), z)
    return h[n], dh[n]


def dtn_eigenvalues(kappa: float, R: float, L: int) -> np.ndarray:
    """``kappa h_n'(kappa R) / h_n(kappa R)`` for ``n = 0..L``.

    Uses the ratio ``q_n = h_n / h_(n-1)`` which obeys
    ``q_(n+1) = (2n+1)/z - 1/q_n`` and never overflows.
    """
    z = kappa * R
    if z <= 0:
        raise ValueError("kappa * R must be positive")
    lam = np.empty(L + 1, dtype=complex)
    lam[0] = 1j - 1.0 / z
    q = 1.0 / z - 1j
    for n in range(1, L + 1):
        lam[n] = 1.0 / q - (n + 1) / z
        q = (2 * n + 1) / z - 1.0 / q
    return kappa * lam


def dtn_apply(values, kappa: float, grid: SphereGrid, L: int | None = None) -> np.ndarray:
    """Exterior Neumann trace of the radiating field with Dirichlet data ``values``."""
    coeffs = analyze(values, grid, L)
    if coeffs.tail_fraction() > TAIL_WARN:
        warnings.warn(f"band limit {coeffs.L} too low: tail energy {coeffs.tail_fraction():.2%}",
                      BandLimitWarning, stacklevel=2)
    return synthesize(coeffs.scaled(dtn_eigenvalues(kappa, grid.R, coeffs.L)), grid)
