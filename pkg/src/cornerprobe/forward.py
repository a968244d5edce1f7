"""Radiating volume potential of a piecewise-constant source and its sphere traces.

The physical field solves ``(Delta + kappa^2) u = f`` with the outgoing
condition, so ``u = -f * exp(i kappa |.|) / (4 pi |.|)``.  Each cell is
replaced by a cloud of weighted point sources from a graded tetrahedral
rule; every source is an exact outgoing Helmholtz solution outside its
location, so DtN consistency of the simulated traces does not depend on the
quadrature accuracy.
"""

from __future__ import annotations

import os
import struct
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

# The system TBB is too old for numba; pick the bundled layer before numba looks.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba  # noqa: E402
import numpy as np  # noqa: E402

from .dtn import BandLimitWarning, SphereGrid, analyze, dtn_apply
from .geometry import ConvexPolyhedron, Scene
from .quadrature import QuadratureSpec, refine_until, rule_points, tet_max_edge

MAGIC = b"CPBF"
FORMAT_VERSION = 1
NEUMANN_SIMULATED = 1
NEUMANN_DTN = 2


class FieldFormatError(ValueError):
    """A boundary-field file is truncated or not in the expected container format."""


def default_band_limit(kappa: float, R: float) -> int:
    return max(16, int(np.ceil(2.0 * kappa * R)) + 8)


# ---------------------------------------------------------------------------
# point-source clouds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceCloud:
    """Weighted point sources ``sum_q w_q delta(x - x_q)`` standing in for ``f``."""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def empty(cls) -> "SourceCloud":
        return cls(np.zeros((0, 3)), np.zeros(0, dtype=complex))

    def __add__(self, other: "SourceCloud") -> "SourceCloud":
        return SourceCloud(np.vstack([self.points, other.points]),
                           np.concatenate([self.weights, other.weights]))

    def __len__(self) -> int:
        return len(self.weights)


GapFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def sphere_gap(R: float) -> GapFn:
    """Distance from tetra bounding spheres to ``{|y| >= R}``."""
    return lambda centre, radius: R - np.linalg.norm(centre, axis=-1) - radius


def points_gap(targets) -> GapFn:
    targets = np.atleast_2d(np.asarray(targets, float))

    def gap(centre, radius):
        best = np.full(len(centre), np.inf)
        for start in range(0, len(targets), 256):
            t = targets[start:start + 256]
            d = np.linalg.norm(centre[:, None, :] - t[None, :, :], axis=-1).min(axis=1)
            best = np.minimum(best, d)
        return best - radius
    return gap


def cell_cloud(poly: ConvexPolyhedron, amplitude: complex, kappa: float, gap: GapFn,
               spec: QuadratureSpec = QuadratureSpec()) -> SourceCloud:
    """Graded tetrahedral rule: edge ``<= min(kappa_h / kappa, gap / eta)``."""

    def needs_split(tets):
        centre = tets.mean(axis=1)
        radius = np.linalg.norm(tets - centre[:, None, :], axis=-1).max(axis=1)
        g = gap(centre, radius)
        if np.any(g + 2.0 * radius <= 0):
            raise ValueError("evaluation point lies inside a source cell")
        limit = np.minimum(spec.kappa_h / kappa, np.maximum(g, 0.0) / spec.eta)
        return tet_max_edge(tets) > limit

    tets = refine_until(poly.tetra_array(), needs_split, spec.max_tets)
    pts, wts = rule_points(tets, spec.order)
    return SourceCloud(pts, complex(amplitude) * wts)


def scene_cloud(scene: Scene, gap: GapFn, spec: QuadratureSpec = QuadratureSpec()) -> SourceCloud:
    cloud = SourceCloud.empty()
    for cell in scene.cells:
        if cell.amplitude != 0:
            cloud = cloud + cell_cloud(cell.poly, cell.amplitude, scene.kappa, gap, spec)
    return cloud


@numba.njit(parallel=True, cache=True, fastmath=False)
def _potential_kernel(targets, src, wr, wi, kappa, want_grad):
    nt = targets.shape[0]
    ns = src.shape[0]
    out = np.zeros((nt, 4), dtype=np.complex128)
    for i in numba.prange(nt):
        y0, y1, y2 = targets[i, 0], targets[i, 1], targets[i, 2]
        acc = 0j
        g0 = 0j
        g1 = 0j
        g2 = 0j
        for q in range(ns):
            d0 = y0 - src[q, 0]
            d1 = y1 - src[q, 1]
            d2 = y2 - src[q, 2]
            rho = np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            kr = kappa * rho
            e = complex(np.cos(kr), np.sin(kr)) * complex(wr[q], wi[q]) / rho
            acc += e
            if want_grad:
                s = e * complex(-1.0 / rho, kappa) / rho
                g0 += s * d0
                g1 += s * d1
                g2 += s * d2
        out[i, 0] = acc
        out[i, 1] = g0
        out[i, 2] = g1
        out[i, 3] = g2
    return out


def cloud_field(cloud: SourceCloud, kappa: float, targets, gradient: bool = False):
    """``u(y) = -(1/4 pi) sum_q w_q exp(i kappa |y - x_q|) / |y - x_q|`` (and ``grad u``)."""
    y = np.atleast_2d(np.asarray(targets, float))
    if len(cloud) == 0:
        u = np.zeros(len(y), dtype=complex)
        return (u, np.zeros((len(y), 3), dtype=complex)) if gradient else u
    out = _potential_kernel(np.ascontiguousarray(y), np.ascontiguousarray(cloud.points),
                            np.ascontiguousarray(cloud.weights.real),
                            np.ascontiguousarray(cloud.weights.imag), float(kappa), gradient)
    out *= -1.0 / (4.0 * np.pi)
    if gradient:
        return out[:, 0], out[:, 1:]
    return out[:, 0]


def _check_outside(scene: Scene, y: np.ndarray) -> None:
    for j, cell in enumerate(scene.cells):
        if np.any(cell.poly.contains(y)):
            raise ValueError(f"evaluation point inside cell {j}")


def volume_potential(scene: Scene, y, quad: QuadratureSpec = QuadratureSpec()):
    """Field ``u`` at one or more points outside every cell."""
    y = np.asarray(y, float)
    pts = np.atleast_2d(y)
    _check_outside(scene, pts)
    u = cloud_field(scene_cloud(scene, points_gap(pts), quad), scene.kappa, pts)
    return u[0] if y.ndim == 1 else u


def grad_volume_potential(scene: Scene, y, quad: QuadratureSpec = QuadratureSpec()):
    y = np.asarray(y, float)
    pts = np.atleast_2d(y)
    _check_outside(scene, pts)
    _, g = cloud_field(scene_cloud(scene, points_gap(pts), quad), scene.kappa, pts, gradient=True)
    return g[0] if y.ndim == 1 else g


# ---------------------------------------------------------------------------
# boundary data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Dirichlet and Neumann traces of ``u`` on the nodes of ``grid``."""

    grid: SphereGrid
    kappa: float
    u: np.ndarray
    dnu: np.ndarray
    neumann: int = NEUMANN_SIMULATED

    def __post_init__(self):
        for name in ("u", "dnu"):
            arr = np.asarray(getattr(self, name), dtype=complex).ravel()
            if arr.shape != (self.grid.size,):
                raise ValueError(f"{name} has {arr.size} values, grid has {self.grid.size} nodes")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            object.__setattr__(self, name, arr)

    @property
    def R(self) -> float:
        return self.grid.R

    def __add__(self, other: "BoundaryField") -> "BoundaryField":
        return replace(self, u=self.u + other.u, dnu=self.dnu + other.dnu)

    def __sub__(self, other: "BoundaryField") -> "BoundaryField":
        return replace(self, u=self.u - other.u, dnu=self.dnu - other.dnu)

    def scaled(self, t: complex) -> "BoundaryField":
        return replace(self, u=t * self.u, dnu=t * self.dnu)

    def with_dtn_neumann(self) -> "BoundaryField":
        return replace(self, dnu=dtn_apply(self.u, self.kappa, self.grid), neumann=NEUMANN_DTN)


def simulate_boundary(scene: Scene, grid: SphereGrid, quad: QuadratureSpec = QuadratureSpec(),
                      cloud: SourceCloud | None = None) -> BoundaryField:
    """Nodal ``u`` and ``du/dnu`` on the sphere of radius ``grid.R``."""
    if cloud is None:
        cloud = scene_cloud(scene, sphere_gap(grid.R), quad)
    u, g = cloud_field(cloud, scene.kappa, grid.nodes, gradient=True)
    dnu = np.einsum("ij,ij->i", g, grid.directions)
    return BoundaryField(grid, scene.kappa, u, dnu, NEUMANN_SIMULATED)


@dataclass(frozen=True)
class H1Norm:
    value: float
    tail_fraction: float

    @property
    def band_limited(self) -> bool:
        return self.tail_fraction <= 0.01

    def __float__(self) -> float:
        return self.value


def h1_norm(field: BoundaryField) -> H1Norm:
    """``||u||_{H^1(dB_R)}`` from harmonic coefficients on the unit sphere.

    ``||u||^2 = R^2 sum (1 + n(n+1)/R^2) |a_n^m|^2``; the tail fraction flags
    data that is not resolved by the grid.
    """
    c = analyze(field.u, field.grid)
    n = np.arange(c.L + 1)
    R = field.grid.R
    e = c.degree_energy()
    return H1Norm(float(np.sqrt(R**2 * np.sum((1.0 + n * (n + 1) / R**2) * e))), c.tail_fraction())


def add_noise(field: BoundaryField, level: float, seed: int | None = 0) -> BoundaryField:
    """Complex Gaussian noise on ``u`` with std ``level * rms(u)``; Neumann data from the DtN map."""
    if level < 0:
        raise ValueError("noise level must be non-negative")
    rng = np.random.default_rng(seed)
    rms = np.sqrt(np.mean(np.abs(field.u) ** 2))
    noise = (rng.standard_normal(field.u.size) + 1j * rng.standard_normal(field.u.size)) / np.sqrt(2.0)
    u = field.u + level * rms * noise if level > 0 else field.u.copy()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandLimitWarning)
        dnu = dtn_apply(u, field.kappa, field.grid)
    return replace(field, u=u, dnu=dnu, neumann=NEUMANN_DTN)


# ---------------------------------------------------------------------------
# closed-form ball source
# ---------------------------------------------------------------------------

def ball_field(kappa: float, a: float, c: complex, y) -> np.ndarray:
    """Field of ``f = c * chi(|x| < a)`` at ``|y| >= a``."""
    y = np.asarray(y, float)
    r = np.linalg.norm(y, axis=-1)
    ka = kappa * a
    return -c * (np.sin(ka) - ka * np.cos(ka)) / kappa**3 * np.exp(1j * kappa * r) / r


def ball_grad(kappa: float, a: float, c: complex, y) -> np.ndarray:
    y = np.asarray(y, float)
    r = np.linalg.norm(y, axis=-1)
    return (ball_field(kappa, a, c, y) * (1j * kappa - 1.0 / r))[..., None] * y / r[..., None]


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIddqqq")


def save_field(field: BoundaryField, path) -> None:
    """Binary container: header (magic, version, kappa, R, L, nodes, flags) then float64 arrays."""
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, field.kappa, g.R, g.L, g.size, field.neumann))
        for arr in (g.nodes, g.weights, field.u.view(float), field.dnu.view(float)):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_field(path) -> BoundaryField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FieldFormatError(f"{path}: truncated header")
    magic, version, kappa, R, L, n, flags = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise FieldFormatError(f"{path}: not a boundary-field container")
    grid = SphereGrid(R, int(L))
    if grid.size != n:
        raise FieldFormatError(f"{path}: node count {n} inconsistent with L={L}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 8 * n:
        raise FieldFormatError(f"{path}: expected {8 * n} float64 values, found {body.size}")
    nodes, weights = body[:3 * n].reshape(n, 3), body[3 * n:4 * n]
    if not (np.allclose(nodes, grid.nodes, atol=1e-12) and np.allclose(weights, grid.weights, rtol=1e-12)):
        raise FieldFormatError(f"{path}: stored nodes do not match a Gauss-Legendre grid")
    u = body[4 * n:6 * n].copy().view(complex)
    dnu = body[6 * n:].copy().view(complex)
    return BoundaryField(grid, kappa, u, dnu, int(flags))


def export_csv(field: BoundaryField, path, header: Sequence[str] = ()) -> None:
    g = field.grid
    cols = np.column_stack([g.nodes, g.weights, field.u.real, field.u.imag, field.dnu.real, field.dnu.imag])
    lines = list(header) + [f"# kappa={field.kappa!r} R={g.R!r} L={g.L} neumann="
                            f"{'simulated' if field.neumann == NEUMANN_SIMULATED else 'dtn'}",
                            "x,y,z,weight,u_re,u_im,dnu_re,dnu_im"]
    body = "\n".join(",".join(f"{v:.17g}" for v in row) for row in cols)
    Path(path).write_text("\n".join(lines) + "\n" + body + "\n")
