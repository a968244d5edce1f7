"""Closed-form Helmholtz kernels used for corner probing.

The unnormalised outgoing kernel is ``G(x) = exp(i*kappa*|x|) / |x|``.  The
probe is the third derivative of ``G`` along the (frame) x3 axis.  For a radial
function ``g(rho)`` and ``c = x3 / rho``::

    d^3/dx3^3 g = c^3 * a(rho) + 3 c * b(rho)
    a = g''' - 3 g''/rho + 3 g'/rho^2
    b = g''/rho - g'/rho^2

so every Cartesian quantity below is assembled from the radial derivatives
``g^(n)`` of ``exp(i*kappa*rho)/rho``, which have the finite closed form::

    g^(n) = exp(i*kappa*rho) * sum_m C(n, m) (i*kappa)^(n-m) (-1)^m m! rho^(-m-1)

The real probe is ``phi = -Re(d3_g)``.  Its imaginary counterpart
``-Im(d3_g) = -d^3/dx3^3 [sin(kappa*rho)/rho]`` is an entire function and
carries no singularity at the origin, see ``smooth_d3``.
"""

from __future__ import annotations

from math import comb, factorial

import numpy as np

SINGULAR_RADIUS = 1e-14


class SingularityError(ValueError):
    """Raised when a kernel is evaluated at (or extremely close to) its pole."""


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 3:
        raise ValueError(f"expected trailing dimension 3, got shape {pts.shape}")
    return pts


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not kappa > 0.0:
        raise ValueError(f"wavenumber must be positive, got {kappa}")
    return kappa


def _radius(pts: np.ndarray) -> np.ndarray:
    rho = np.linalg.norm(pts, axis=-1)
    if np.any(rho < SINGULAR_RADIUS):
        raise SingularityError("kernel evaluated within 1e-14 of its singular point")
    return rho


def radial_derivatives(kappa: float, rho, order: int = 4) -> list[np.ndarray]:
    """Return ``[g, g', ..., g^(order)]`` for ``g = exp(i kappa rho)/rho``."""
    rho = np.asarray(rho, dtype=float)
    phase = np.exp(1j * kappa * rho)
    inv = 1.0 / rho
    out = []
    for n in range(order + 1):
        acc = np.zeros_like(phase)
        for m in range(n + 1):
            coef = comb(n, m) * (1j * kappa) ** (n - m) * (-1) ** m * factorial(m)
            acc = acc + coef * inv ** (m + 1)
        out.append(phase * acc)
    return out


def radial_parts(kappa: float, rho, with_derivative: bool = False):
    """Radial factors ``a, b`` of the x3 third derivative (and ``a', b'``)."""
    g = radial_derivatives(kappa, rho, 4 if with_derivative else 3)
    inv = 1.0 / np.asarray(rho, dtype=float)
    a = g[3] - 3.0 * g[2] * inv + 3.0 * g[1] * inv**2
    b = g[2] * inv - g[1] * inv**2
    if not with_derivative:
        return a, b
    da = g[4] - 3.0 * g[3] * inv + 6.0 * g[2] * inv**2 - 6.0 * g[1] * inv**3
    db = g[3] * inv - 2.0 * g[2] * inv**2 + 2.0 * g[1] * inv**3
    return a, b, da, db


def fundamental(kappa: float, x) -> np.ndarray:
    """``exp(i kappa |x|)/|x|`` (4*pi times the physical outgoing kernel)."""
    kappa = _check_kappa(kappa)
    rho = _radius(_as_points(x))
    return np.exp(1j * kappa * rho) / rho


def d3_g(kappa: float, x) -> np.ndarray:
    """Exact third x3-derivative of :func:`fundamental`."""
    kappa = _check_kappa(kappa)
    pts = _as_points(x)
    rho = _radius(pts)
    c = pts[..., 2] / rho
    a, b = radial_parts(kappa, rho)
    return c**3 * a + 3.0 * c * b


def grad_d3_g(kappa: float, x) -> np.ndarray:
    """Gradient of :func:`d3_g`, shape ``(..., 3)``, complex."""
    kappa = _check_kappa(kappa)
    pts = _as_points(x)
    rho = _radius(pts)
    xhat = pts / rho[..., None]
    c = xhat[..., 2]
    a, b, da, db = radial_parts(kappa, rho, with_derivative=True)
    tangential = (3.0 * c**2 * a + 3.0 * b) / rho
    radial = c**3 * da + 3.0 * c * db
    e3 = np.zeros_like(xhat)
    e3[..., 2] = 1.0
    return tangential[..., None] * (e3 - c[..., None] * xhat) + radial[..., None] * xhat


def phi(kappa: float, x) -> np.ndarray:
    """Real singular probe ``-Re(d3_g)``; blows up like ``|x|^-4`` at the origin."""
    return -d3_g(kappa, x).real


def grad_phi(kappa: float, x) -> np.ndarray:
    return -grad_d3_g(kappa, x).real


def smooth_d3(kappa: float, x) -> np.ndarray:
    """``Im(d3_g)``: third x3-derivative of ``sin(kappa rho)/rho``.

    Entire in ``x``.  Near the origin the closed form cancels catastrophically,
    so for ``kappa*rho < 0.05`` the Taylor series
    ``sin(k rho)/rho = sum_j (-1)^j k^(2j+1) rho^(2j) / (2j+1)!`` is
    differentiated term by term instead.
    """
    kappa = _check_kappa(kappa)
    pts = _as_points(x)
    rho = np.linalg.norm(pts, axis=-1)
    out = np.empty(rho.shape, dtype=float)
    small = kappa * rho < 0.05
    if np.any(~small):
        c = pts[~small][..., 2] / rho[~small]
        a, b = radial_parts(kappa, rho[~small])
        out[~small] = (c**3 * a + 3.0 * c * b).imag
    if np.any(small):
        out[small] = _smooth_d3_series(kappa, pts[small])
    return out


def _smooth_d3_series(kappa: float, pts: np.ndarray) -> np.ndarray:
    # d^3/dx3^3 rho^(2j) = 4j(j-1)(2j-1)... computed from rho^(2j) = s^j, s = |x|^2:
    # d3 s^j = j(j-1)(j-2) 8 x3^3 s^(j-3) + 12 j(j-1) x3 s^(j-2)
    s = np.einsum("...i,...i->...", pts, pts)
    x3 = pts[..., 2]
    total = np.zeros_like(s)
    for j in range(1, 10):
        coef = (-1) ** j * kappa ** (2 * j + 1) / factorial(2 * j + 1)
        term = 12.0 * j * (j - 1) * x3 * s ** max(j - 2, 0) if j >= 2 else 0.0 * s
        if j >= 3:
            term = term + 8.0 * j * (j - 1) * (j - 2) * x3**3 * s ** (j - 3)
        total = total + coef * term
    return total


def rotate_difference(rotation: np.ndarray, x, y) -> np.ndarray:
    """Frame coordinates of ``x - y`` (translation cancels in the difference)."""
    diff = _as_points(x) - _as_points(y)
    return diff @ np.asarray(rotation, dtype=float).T


def phi_pair(kappa: float, rotation: np.ndarray, x, y) -> np.ndarray:
    """``phi`` of the frame-rotated difference ``R (x - y)``."""
    z = rotate_difference(rotation, x, y)
    if np.any(np.linalg.norm(z, axis=-1) < SINGULAR_RADIUS):
        raise SingularityError("probe evaluated at coincident points")
    return phi(kappa, z)


def grad_x_phi_pair(kappa: float, rotation: np.ndarray, x, y) -> np.ndarray:
    """Gradient of :func:`phi_pair` with respect to ``x`` (world coordinates)."""
    rot = np.asarray(rotation, dtype=float)
    z = rotate_difference(rot, x, y)
    if np.any(np.linalg.norm(z, axis=-1) < SINGULAR_RADIUS):
        raise SingularityError("probe evaluated at coincident points")
    return grad_phi(kappa, z) @ rot


def d3_g_pair(kappa: float, rotation: np.ndarray, x, y) -> np.ndarray:
    """Complex ``d3_g`` of the frame-rotated difference."""
    return d3_g(kappa, rotate_difference(rotation, x, y))
