"""Probe functionals: boundary pairing, volume and cone moments, aperture constants.

Throughout, ``Phi_k(x, y) = phi(kappa, Q (x - y))`` where ``Q`` is the probe
frame rotation, so the probe singularity sits at ``y`` and its axis is the
cone axis of the probed vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre

from . import kernels
from .dtn import SphereGrid, analyze, dtn_eigenvalues, synthesize
from .forward import BoundaryField
from .geometry import ConvexPolyhedron, GeometryError, ProbeFrame, VertexCone, _aperture
from .quadrature import QuadratureSpec, adaptive_integrate

BOUNDARY_TOL = 1e-12
MAX_FINE_BAND = 400


# ---------------------------------------------------------------------------
# boundary functional
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryValue:
    """Complex value of the boundary pairing; ``imag`` is a noise diagnostic for real data."""

    value: complex

    @property
    def real(self) -> float:
        return float(self.value.real)

    @property
    def imag(self) -> float:
        return float(self.value.imag)

    def __complex__(self) -> complex:
        return complex(self.value)


def fine_band_limit(L: int, ratio: float, tol: float = BOUNDARY_TOL) -> int:
    """Band limit that integrates ``band-L data x probe`` to ``tol``.

    The probe's harmonic coefficients decay like ``ratio**n`` with
    ``ratio = min(|y|/R, R/|y|)``, so modes above ``2 L_f + 1 - L`` alias
    below ``tol`` once ``L_f`` reaches the value returned here.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("probe point must not lie on the measurement sphere")
    need = np.log(1.0 / tol) / abs(np.log(ratio))
    return int(min(MAX_FINE_BAND, max(L, np.ceil((L + need) / 2.0))))


def probe_traces(kappa: float, frame: ProbeFrame, y, grid: SphereGrid) -> tuple[np.ndarray, np.ndarray]:
    """``Phi_k(x, y)`` and its normal derivative at the nodes ``x`` of ``grid``."""
    x = grid.nodes
    val = kernels.phi_pair(kappa, frame.rotation, x, y)
    grad = kernels.grad_x_phi_pair(kappa, frame.rotation, x, y)
    return val, np.einsum("ij,ij->i", grad, grid.directions)


def _fine_grid(field: BoundaryField, y, tol: float) -> SphereGrid:
    ny = float(np.linalg.norm(y))
    R = field.grid.R
    if abs(ny - R) <= 1e-12 * R:
        raise ValueError("probe point lies on the measurement sphere")
    return SphereGrid(R, fine_band_limit(field.grid.L, min(ny / R, R / ny), tol))


def boundary_functional(field: BoundaryField, kappa: float, frame: ProbeFrame, y,
                        allow_interior: bool = False, tol: float = BOUNDARY_TOL,
                        neumann: str = "field") -> BoundaryValue:
    """``int_{|x|=R} [du/dnu Phi_k(x, y) - dPhi_k/dnu(x, y) u] ds``.

    The traces are resampled to a finer Gauss-Legendre grid so the pairing
    stays accurate when ``y`` approaches the sphere.  ``neumann="dtn"``
    derives the Neumann trace from the Dirichlet data instead of using the
    stored one.  Interior points are refused unless ``allow_interior``.
    """
    y = np.asarray(y, float)
    if np.linalg.norm(y) < field.grid.R and not allow_interior:
        raise ValueError("boundary_functional needs |y| > R (pass allow_interior for corner probing)")
    fine = _fine_grid(field, y, tol)
    a = analyze(field.u, field.grid)
    u = synthesize(a, fine)
    if neumann == "dtn":
        dnu = synthesize(a.scaled(dtn_eigenvalues(kappa, field.grid.R, a.L)), fine)
    elif neumann == "field":
        dnu = synthesize(analyze(field.dnu, field.grid), fine)
    else:
        raise ValueError(f"unknown neumann mode {neumann!r}")
    val, dval = probe_traces(kappa, frame, y, fine)
    return BoundaryValue(complex(np.sum(fine.weights * (dnu * val - dval * u))))


# ---------------------------------------------------------------------------
# volume moments
# ---------------------------------------------------------------------------

def probe_kernel(kappa: float, frame: ProbeFrame) -> Callable[[np.ndarray], np.ndarray]:
    rot = frame.rotation
    return lambda d: kernels.phi(kappa, d @ rot.T)


def volume_moment(cell: ConvexPolyhedron, kappa: float, frame: ProbeFrame, y,
                  quad: QuadratureSpec = QuadratureSpec()) -> float:
    """``int_cell Phi_k(x, y) dx`` by graded adaptive tetrahedral quadrature."""
    y = np.asarray(y, float)
    if cell.contains(y, tol=1e-12):
        raise ValueError("volume_moment: singular point lies in the cell")
    return float(adaptive_integrate(cell.tetra_array(), y, probe_kernel(kappa, frame), quad))


def smooth_moment(points: np.ndarray, weights: np.ndarray, kappa: float, frame: ProbeFrame, y) -> complex:
    """``sum_q w_q Im(d3 G)(Q (x_q - y))`` for a point-source cloud (entire integrand)."""
    z = kernels.rotate_difference(frame.rotation, points, np.asarray(y, float))
    return complex(np.sum(weights * kernels.smooth_d3(kappa, z)))


# ---------------------------------------------------------------------------
# cone moments
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def radial_profile(kappa: float, alpha, r: float, radius: float, n_gauss: int = 24) -> np.ndarray:
    """``H(alpha, r) = int over rho in [r, radius] of the theta-integrated probe``.

    With the singular point at the origin and the cone apex at ``(0,0,r)``,
    a sphere of radius ``rho`` meets the cone in the cap
    ``theta <= alpha - arcsin(r sin(alpha) / rho)``; the theta integral of
    ``-(c^3 a + 3 c b) sin(theta)`` over the cap is closed-form.  The rho
    integral uses Gauss panels on dyadic intervals.
    """
    alpha = np.atleast_1d(np.asarray(alpha, float))
    edges = [r]
    while edges[-1] * 2.0 < radius:
        edges.append(edges[-1] * 2.0)
    edges.append(radius)
    t, w = _gauss(n_gauss)
    rho = np.concatenate([lo + (hi - lo) * t for lo, hi in zip(edges[:-1], edges[1:])])
    wr = np.concatenate([(hi - lo) * w for lo, hi in zip(edges[:-1], edges[1:])])
    a, b = kernels.radial_parts(kappa, rho)
    s = r * np.sin(alpha)[:, None] / rho[None, :]
    cb = np.cos(alpha)[:, None] * np.sqrt(1.0 - s**2) + np.sin(alpha)[:, None] * s
    inner = a.real * (1.0 - cb**4) / 4.0 + 1.5 * b.real * (1.0 - cb**2)
    return -(inner * (rho**2 * wr)[None, :]).sum(axis=1)


def aperture_moment(kappa: float, aperture: Callable[[np.ndarray], np.ndarray], r: float, radius: float,
                    breaks: Sequence[float] = (), n_phi: int = 24, n_gauss: int = 24) -> float:
    """``int_0^{2 pi} H(alpha(phi), r) dphi`` with Gauss panels split at the kinks of ``alpha``."""
    breaks = np.unique(np.mod(np.asarray(breaks, float), 2.0 * np.pi))
    if len(breaks) == 0:
        m = 4 * n_phi
        phi = 2.0 * np.pi * np.arange(m) / m
        wphi = np.full(m, 2.0 * np.pi / m)
    else:
        knots = np.append(breaks, breaks[0] + 2.0 * np.pi)
        t, w = _gauss(n_phi)
        phi = np.concatenate([lo + (hi - lo) * t for lo, hi in zip(knots[:-1], knots[1:])])
        wphi = np.concatenate([(hi - lo) * w for lo, hi in zip(knots[:-1], knots[1:])])
    H = radial_profile(kappa, aperture(phi), r, radius, n_gauss)
    return float(np.sum(wphi * H))


def cone_moment(cone: VertexCone, kappa: float, r: float, radius: float | None = None) -> float:
    """``M(r)``: integral of ``Phi`` over ``B_radius(0)`` intersected with the cone shifted to ``(0,0,r)``.

    ``radius`` defaults to the cone's truncation radius ``r0``.
    """
    if not 0.0 < r < cone.r0 / 4.0:
        raise ValueError(f"cone_moment needs 0 < r < r0/4 = {cone.r0 / 4.0}")
    radius = cone.r0 if radius is None else float(radius)
    return aperture_moment(kappa, cone.aperture, r, radius, cone.edge_azimuths())


def theta_antiderivative(alpha):
    """``F(alpha) = int_0^alpha sin t cos t (6 cos^2 t - 9 sin^2 t) dt = (3/4) sin^2(5 cos^2 - 1)``.

    ``F`` is positive only below ``arccos(1/sqrt(5))`` and ``F(pi/2) = -3/4``.
    """
    alpha = np.asarray(alpha, float)
    if np.any((alpha < 0) | (alpha > np.pi / 2 + 1e-15)):
        raise ValueError("alpha must lie in [0, pi/2]")
    s2 = np.sin(alpha) ** 2
    out = 0.75 * s2 * (5.0 * (1.0 - s2) - 1.0)
    return float(out) if out.ndim == 0 else out


def c0_lower_bound(alpha1: float, alpha2: float) -> float:
    """``pi * min(F(alpha1/2), F(alpha2))`` clipped at zero.

    The factor ``pi = 2 pi * int_2^inf rho^-2 drho``.  The bound certifies
    nothing (returns 0) once ``alpha2 >= arccos(1/sqrt(5))`` where ``F``
    changes sign.
    """
    if not 0.0 < alpha1 <= alpha2 < np.pi / 2:
        raise ValueError("need 0 < alpha1 <= alpha2 < pi/2")
    return max(0.0, np.pi * min(theta_antiderivative(alpha1 / 2.0), theta_antiderivative(alpha2)))


# ---------------------------------------------------------------------------
# S_k
# ---------------------------------------------------------------------------

def s_k(field: BoundaryField, cells: Sequence[ConvexPolyhedron], amplitudes: Sequence[complex], k: int,
        kappa: float, frame: ProbeFrame, y, quad: QuadratureSpec = QuadratureSpec(),
        oracle_amplitudes: Sequence[complex] | None = None) -> complex:
    """``S_k(y) = int over the unrecovered cells of f Phi_k(., y)``.

    For ``|y| > R`` this is the boundary pairing minus the moments of the
    first ``k`` (recovered) cells.  Inside ``B_R`` the pairing alone does not
    equal the volume integral; there the value is only available in oracle
    mode (true amplitudes of the remaining cells), see
    :func:`cornerprobe.recon.residual_functional` for the data-driven route.
    """
    y = np.asarray(y, float)
    known = sum(complex(amplitudes[j]) * volume_moment(cells[j], kappa, frame, y, quad) for j in range(k))
    if np.linalg.norm(y) > field.grid.R:
        return complex(boundary_functional(field, kappa, frame, y)) - known
    if oracle_amplitudes is None:
        raise ValueError("interior S_k needs oracle amplitudes; use recon.residual_functional")
    return sum(complex(oracle_amplitudes[j]) * volume_moment(cells[j], kappa, frame, y, quad)
               for j in range(k, len(cells))) + 0j


def corner_aperture(poly: ConvexPolyhedron, vertex_index: int, frame: ProbeFrame):
    """Exact aperture function of a polyhedral corner about an arbitrary admissible frame."""
    inc = poly.incident_faces(vertex_index)
    normals = np.array([poly.faces[i].normal for i in inc])
    if np.min(-normals @ frame.axis) <= 0:
        raise GeometryError("frame axis leaves the tangent cone")
    p = poly.vertices[vertex_index]
    edges = np.array([poly.vertices[q] - p for q in poly.neighbours(vertex_index)]) @ frame.rotation.T
    breaks = np.mod(np.arctan2(edges[:, 1], edges[:, 0]), 2.0 * np.pi)
    return (lambda phi: _aperture(frame.rotation, normals, phi)), breaks
