"""Convex polyhedral cells, vertex cones, probe frames and the scene container."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull

GEOM_TOL = 1e-12
VERTEX_TOL = 1e-10
N_PHI = 256


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Face:
    normal: np.ndarray
    offset: float
    vertices: tuple[int, ...]


@dataclass(frozen=True)
class Tetrahedron:
    corners: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.corners, dtype=float).reshape(4, 3)
        if np.linalg.det(c[1:] - c[0]) < 0:
            c = c[[0, 2, 1, 3]]
        object.__setattr__(self, "corners", c)

    @property
    def volume(self) -> float:
        return float(np.linalg.det(self.corners[1:] - self.corners[0]) / 6.0)


def _newell_normal(pts: np.ndarray) -> np.ndarray:
    nxt = np.roll(pts, -1, axis=0)
    n = np.array([
        np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
        np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
        np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
    ])
    norm = np.linalg.norm(n)
    if norm < GEOM_TOL:
        raise GeometryError("degenerate face")
    return n / norm


@dataclass(frozen=True, eq=False)
class ConvexPolyhedron:
    """Bounded convex polyhedron stored as vertices plus outward faces."""

    vertices: np.ndarray
    faces: tuple[Face, ...]

    @classmethod
    def from_faces(cls, vertices, faces: Sequence[Sequence[int]]) -> "ConvexPolyhedron":
        verts = np.asarray(vertices, dtype=float).reshape(-1, 3)
        interior = verts.mean(axis=0)
        out = []
        for cycle in faces:
            cycle = tuple(int(i) for i in cycle)
            if len(cycle) < 3:
                raise GeometryError(f"face {cycle} has fewer than three vertices")
            pts = verts[list(cycle)]
            n = _newell_normal(pts)
            d = float(n @ pts.mean(axis=0))
            if n @ interior > d:
                n, d, cycle = -n, -d, cycle[::-1]
            if np.max(np.abs(pts @ n - d)) > 1e-9 * max(1.0, np.abs(pts).max()):
                raise GeometryError(f"face {cycle} is not planar")
            out.append(Face(n, d, cycle))
        poly = cls(verts, tuple(out))
        poly._check()
        return poly

    @classmethod
    def from_points(cls, points) -> "ConvexPolyhedron":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        try:
            hull = ConvexHull(pts)
        except Exception as exc:
            raise GeometryError(f"degenerate point set: {exc}") from exc
        keep = np.array(sorted(hull.vertices))
        remap = {int(old): new for new, old in enumerate(keep)}
        verts = pts[keep]
        groups: list[list] = []
        for eq, simplex in zip(hull.equations, hull.simplices):
            for g in groups:
                if np.allclose(g[0], eq, atol=1e-9):
                    g[1].update(int(i) for i in simplex)
                    break
            else:
                groups.append([eq, set(int(i) for i in simplex)])
        faces = []
        for eq, idx in groups:
            idx = [remap[i] for i in idx if i in remap]
            n = eq[:3] / np.linalg.norm(eq[:3])
            p = verts[idx]
            c = p.mean(axis=0)
            u = p[0] - c
            u /= np.linalg.norm(u)
            v = np.cross(n, u)
            ang = np.arctan2((p - c) @ v, (p - c) @ u)
            faces.append([idx[i] for i in np.argsort(ang)])
        return cls.from_faces(verts, faces)

    @classmethod
    def box(cls, lo, hi) -> "ConvexPolyhedron":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        corners = [[hi[0] if i & 1 else lo[0], hi[1] if i & 2 else lo[1], hi[2] if i & 4 else lo[2]]
                   for i in range(8)]
        faces = [(0, 2, 6, 4), (1, 5, 7, 3), (0, 4, 5, 1), (2, 3, 7, 6), (0, 1, 3, 2), (4, 6, 7, 5)]
        return cls.from_faces(corners, faces)

    @classmethod
    def tetrahedron(cls, a, b, c, d) -> "ConvexPolyhedron":
        return cls.from_faces([a, b, c, d], [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])

    def _check(self) -> None:
        normals, offsets = self.halfspaces
        slack = self.vertices @ normals.T - offsets
        if slack.max() > VERTEX_TOL:
            raise GeometryError("polyhedron is not convex: a vertex violates a face inequality")
        counts = (np.abs(slack) <= VERTEX_TOL).sum(axis=1)
        if counts.min() < 3:
            raise GeometryError("a listed vertex lies on fewer than three face planes")
        if self.volume <= GEOM_TOL:
            raise GeometryError("degenerate (flat) polyhedron")

    @property
    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([f.normal for f in self.faces]),
                np.array([f.offset for f in self.faces]))

    def tetra_array(self) -> np.ndarray:
        """``(M, 4, 3)`` tetrahedra: a fan from the vertex mean over each face fan.

        A simplex is returned as itself.
        """
        if len(self.vertices) == 4:
            return self.vertices[None].copy()
        centre = self.vertices.mean(axis=0)
        tets = []
        for f in self.faces:
            cyc = f.vertices
            for i in range(1, len(cyc) - 1):
                tets.append([centre, self.vertices[cyc[0]], self.vertices[cyc[i]], self.vertices[cyc[i + 1]]])
        tets = np.array(tets)
        vols = np.linalg.det(tets[:, 1:] - tets[:, :1]) / 6.0
        if np.abs(vols).sum() <= GEOM_TOL:
            raise GeometryError("degenerate (flat) polyhedron")
        return tets[np.abs(vols) > 1e-15 * np.abs(vols).max()]

    def tetrahedralize(self) -> list[Tetrahedron]:
        return [Tetrahedron(t) for t in self.tetra_array()]

    @property
    def volume(self) -> float:
        tets = self.tetra_array()
        return float(np.abs(np.linalg.det(tets[:, 1:] - tets[:, :1])).sum() / 6.0)

    def surface_volume(self) -> float:
        """Volume from the divergence theorem, ``(1/3) sum_F (n.x_F) area_F``."""
        total = 0.0
        for f in self.faces:
            pts = self.vertices[list(f.vertices)]
            area_vec = 0.5 * np.sum(np.cross(pts, np.roll(pts, -1, axis=0)), axis=0)
            total += f.offset * (area_vec @ f.normal) / 3.0
        return total

    @property
    def centroid(self) -> np.ndarray:
        tets = self.tetra_array()
        vols = np.abs(np.linalg.det(tets[:, 1:] - tets[:, :1]))
        return (tets.mean(axis=1) * vols[:, None]).sum(axis=0) / vols.sum()

    @property
    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.linalg.norm(d, axis=-1).max())

    def contains(self, p, tol: float = GEOM_TOL):
        """Closed containment test; vectorised over a trailing ``(..., 3)`` array."""
        normals, offsets = self.halfspaces
        p = np.asarray(p, dtype=float)
        return np.all(p @ normals.T - offsets <= tol, axis=-1)

    def incident_faces(self, vertex_index: int) -> list[int]:
        return [i for i, f in enumerate(self.faces) if vertex_index in f.vertices]

    def neighbours(self, vertex_index: int) -> list[int]:
        out = set()
        for f in self.faces:
            cyc = f.vertices
            if vertex_index in cyc:
                k = cyc.index(vertex_index)
                out.add(cyc[k - 1])
                out.add(cyc[(k + 1) % len(cyc)])
        return sorted(out)

    def edges(self) -> list[tuple[int, int]]:
        out = set()
        for f in self.faces:
            cyc = f.vertices
            for i in range(len(cyc)):
                a, b = cyc[i], cyc[(i + 1) % len(cyc)]
                out.add((min(a, b), max(a, b)))
        return sorted(out)

    def distance_to(self, p) -> float:
        """Euclidean distance from a point to the closed polyhedron."""
        p = np.asarray(p, dtype=float)
        if self.contains(p):
            return 0.0
        best = np.min(np.linalg.norm(self.vertices - p, axis=1))
        for a, b in self.edges():
            va, vb = self.vertices[a], self.vertices[b]
            e = vb - va
            t = np.clip((p - va) @ e / (e @ e), 0.0, 1.0)
            best = min(best, np.linalg.norm(va + t * e - p))
        for f in self.faces:
            q = p - (p @ f.normal - f.offset) * f.normal
            pts = self.vertices[list(f.vertices)]
            inside = True
            for i in range(len(pts)):
                edge = pts[(i + 1) % len(pts)] - pts[i]
                if np.cross(edge, q - pts[i]) @ f.normal < -1e-14:
                    inside = False
                    break
            if inside:
                best = min(best, abs(p @ f.normal - f.offset))
        return float(best)

    def segment_hits(self, a, b, tol: float = GEOM_TOL) -> bool:
        """True if the closed segment ``[a, b]`` meets the polyhedron (Cyrus-Beck)."""
        a, b = np.asarray(a, float), np.asarray(b, float)
        normals, offsets = self.halfspaces
        t0, t1 = 0.0, 1.0
        d = b - a
        for n, off in zip(normals, offsets):
            num = off + tol - n @ a
            den = n @ d
            if abs(den) < 1e-300:
                if num < 0:
                    return False
                continue
            t = num / den
            if den > 0:
                t1 = min(t1, t)
            else:
                t0 = max(t0, t)
            if t0 > t1:
                return False
        return True

    def transformed(self, rotation, translation=(0.0, 0.0, 0.0)) -> "ConvexPolyhedron":
        rot = np.asarray(rotation, float)
        verts = self.vertices @ rot.T + np.asarray(translation, float)
        return ConvexPolyhedron.from_faces(verts, [f.vertices for f in self.faces])


def interiors_overlap(a: ConvexPolyhedron, b: ConvexPolyhedron, tol: float = 1e-10) -> bool:
    """LP test: is there a point strictly inside both (depth > ``tol``)?"""
    na, da = a.halfspaces
    nb, db = b.halfspaces
    normals = np.vstack([na, nb])
    offsets = np.concatenate([da, db])
    A = np.hstack([normals, np.ones((len(normals), 1))])
    res = linprog(c=[0, 0, 0, -1], A_ub=A, b_ub=offsets,
                  bounds=[(None, None)] * 3 + [(None, 1.0)], method="highs")
    return bool(res.status == 0 and -res.fun > tol)


# ---------------------------------------------------------------------------
# frames and cones
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProbeFrame:
    """Rigid map ``x -> rotation @ (x - apex)`` sending the cone axis to ``+e3``."""

    rotation: np.ndarray
    apex: np.ndarray

    def to_frame(self, x) -> np.ndarray:
        return (np.asarray(x, float) - self.apex) @ self.rotation.T

    def from_frame(self, z) -> np.ndarray:
        return np.asarray(z, float) @ self.rotation + self.apex

    @property
    def axis(self) -> np.ndarray:
        return self.rotation[2].copy()

    def probe_point(self, r: float) -> np.ndarray:
        """World coordinates of the point at distance ``r`` below the apex."""
        return self.apex - r * self.axis


def rotation_to_e3(axis) -> np.ndarray:
    """Rotation taking the unit vector ``axis`` to ``+e3`` (minimal for the upper hemisphere)."""
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    if a[2] < 0:
        # half-turn about e1 first keeps the Rodrigues formula away from 1 + c = 0
        flip = np.diag([1.0, -1.0, -1.0])
        return rotation_to_e3(flip @ a) @ flip
    c = float(a[2])
    v = np.array([a[1], -a[0], 0.0])  # a x e3
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    rot = np.eye(3) + vx + vx @ vx / (1.0 + c)
    u, _, vt = np.linalg.svd(rot)
    return u @ vt


def make_frame(apex, axis) -> ProbeFrame:
    return ProbeFrame(rotation_to_e3(axis), np.asarray(apex, float).copy())


@dataclass(frozen=True, eq=False)
class VertexCone:
    """Tangent cone of a convex polyhedron at one vertex.

    ``alpha`` samples the aperture on a uniform grid of ``N_PHI`` azimuths in
    the probe frame; ``face_normals`` keeps the incident face normals (world
    coordinates) so the aperture can also be evaluated exactly.
    """

    apex: np.ndarray
    axis: np.ndarray
    alpha_min: float
    alpha_max: float
    alpha: np.ndarray
    r0: float
    face_normals: np.ndarray
    edge_directions: np.ndarray = field(default=None)

    @property
    def frame(self) -> ProbeFrame:
        return make_frame(self.apex, self.axis)

    @property
    def phi_grid(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(len(self.alpha)) / len(self.alpha)

    def aperture(self, phi) -> np.ndarray:
        """Exact aperture at frame azimuth ``phi`` (radians)."""
        if self.face_normals is None:
            return self.interpolated_aperture(np.atleast_1d(phi))
        return _aperture(self.frame.rotation, self.face_normals, phi)

    def interpolated_aperture(self, phi) -> np.ndarray:
        grid = self.phi_grid
        return np.interp(np.mod(phi, 2 * np.pi), np.append(grid, 2 * np.pi),
                         np.append(self.alpha, self.alpha[0]))

    def edge_azimuths(self) -> np.ndarray:
        """Frame azimuths of the cone's edges (kinks of the aperture function)."""
        if self.edge_directions is None or len(self.edge_directions) == 0:
            return np.array([])
        d = self.edge_directions @ self.frame.rotation.T
        return np.sort(np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi))

    def contains(self, p) -> np.ndarray:
        """Is ``p`` inside the (untruncated) cone, via the interpolated aperture?"""
        z = self.frame.to_frame(p)
        rho = np.linalg.norm(z, axis=-1)
        theta = np.arccos(np.clip(z[..., 2] / np.where(rho > 0, rho, 1.0), -1, 1))
        ph = np.arctan2(z[..., 1], z[..., 0])
        return theta <= self.interpolated_aperture(ph)


def _aperture(rotation: np.ndarray, normals: np.ndarray, phi) -> np.ndarray:
    phi = np.atleast_1d(np.asarray(phi, float))
    e1, e2, a = rotation
    d = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    nd = d @ normals.T
    na = normals @ a
    with np.errstate(divide="ignore", invalid="ignore"):
        ang = np.where(nd > 0, np.arctan2(-na[None, :], nd), np.pi / 2)
    return np.min(np.minimum(ang, np.pi / 2), axis=1)


def chebyshev_axis(normals: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit direction maximising ``min_f (-n_f . a)`` and the attained margin."""
    start = -normals.sum(axis=0)
    if np.linalg.norm(start) < 1e-12:
        start = -normals[0]
    start = start / np.linalg.norm(start)
    x0 = np.append(start, np.min(-normals @ start))
    cons = [
        {"type": "ineq", "fun": lambda v: -normals @ v[:3] - v[3],
         "jac": lambda v: np.hstack([-normals, -np.ones((len(normals), 1))])},
        {"type": "ineq", "fun": lambda v: 1.0 - v[:3] @ v[:3],
         "jac": lambda v: np.append(-2.0 * v[:3], 0.0)},
    ]
    res = minimize(lambda v: -v[3], x0, jac=lambda v: np.array([0, 0, 0, -1.0]),
                   constraints=cons, method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    a = res.x[:3] / np.linalg.norm(res.x[:3])
    return a, float(np.min(-normals @ a))


def corner_is_local(poly: ConvexPolyhedron, vertex_index: int, r0: float) -> bool:
    """Does ``B_r0(P)`` meet the polyhedron only through the tangent cone at ``P``?

    Checks every non-incident face plane against the maximum of its normal over
    the tangent cone truncated at radius ``r0``.
    """
    p = poly.vertices[vertex_index]
    inc = poly.incident_faces(vertex_index)
    normals = np.array([poly.faces[i].normal for i in inc])
    edges = np.array([poly.vertices[q] - p for q in poly.neighbours(vertex_index)])
    edges = edges / np.linalg.norm(edges, axis=1)[:, None]
    for i, f in enumerate(poly.faces):
        if i in inc:
            continue
        n = f.normal
        best = max(0.0, float(np.max(edges @ n)))
        if np.all(normals @ n <= 1e-14):
            best = 1.0
        for j in inc:
            m = poly.faces[j].normal
            proj = n - (n @ m) * m
            norm = np.linalg.norm(proj)
            if norm < 1e-14:
                continue
            u = proj / norm
            if np.all(np.delete(normals, inc.index(j), axis=0) @ u <= 1e-12):
                best = max(best, norm)
        if n @ p + r0 * best > f.offset + GEOM_TOL:
            return False
    return True


def vertex_cone(poly: ConvexPolyhedron, vertex_index: int, r0: float, axis=None,
                n_phi: int = N_PHI) -> VertexCone:
    """Tangent cone at a vertex with its aperture sampled on ``n_phi`` azimuths."""
    p = poly.vertices[vertex_index]
    others = np.delete(poly.vertices, vertex_index, axis=0)
    if len(others) and np.min(np.linalg.norm(others - p, axis=1)) <= r0:
        raise GeometryError(f"r0-ball about vertex {vertex_index} contains another vertex")
    inc = poly.incident_faces(vertex_index)
    normals = np.array([poly.faces[i].normal for i in inc])
    if axis is None:
        a, margin = chebyshev_axis(normals)
    else:
        a = np.asarray(axis, float) / np.linalg.norm(axis)
        margin = float(np.min(-normals @ a))
    if margin <= 1e-9:
        raise GeometryError(f"facet-like vertex {vertex_index}: aperture reaches pi/2")
    frame = make_frame(p, a)
    alpha = _aperture(frame.rotation, normals, 2 * np.pi * np.arange(n_phi) / n_phi)
    if alpha.max() >= np.pi / 2 - 1e-12 or alpha.min() <= 0:
        raise GeometryError(f"facet-like vertex {vertex_index}: aperture reaches pi/2")
    edges = np.array([poly.vertices[q] - p for q in poly.neighbours(vertex_index)])
    return VertexCone(apex=p.copy(), axis=a, alpha_min=float(alpha.min()), alpha_max=float(alpha.max()),
                      alpha=alpha, r0=float(r0), face_normals=normals, edge_directions=edges)


def constant_cone(alpha: float, r0: float, apex=(0.0, 0.0, 0.0), axis=(0.0, 0.0, 1.0),
                  n_phi: int = N_PHI) -> VertexCone:
    """Circular cone of fixed aperture (a validation shape, not a polyhedral corner)."""
    if not 0.0 < alpha <= np.pi / 2:
        raise GeometryError("aperture must lie in (0, pi/2]")
    a = np.asarray(axis, float) / np.linalg.norm(axis)
    samples = np.full(n_phi, float(alpha))
    return VertexCone(apex=np.asarray(apex, float), axis=a, alpha_min=float(alpha), alpha_max=float(alpha),
                      alpha=samples, r0=float(r0), face_normals=None, edge_directions=None)


def probe_frame(cone: VertexCone) -> ProbeFrame:
    return cone.frame


# ---------------------------------------------------------------------------
# scene
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cell:
    poly: ConvexPolyhedron
    amplitude: complex
    probe_vertex: Optional[int] = None
    name: str = ""


@dataclass(frozen=True, eq=False)
class Scene:
    kappa: float
    R: float
    r0: float
    cells: tuple[Cell, ...]
    A: float = np.inf
    E: float = np.inf

    def __post_init__(self):
        if not self.kappa > 0:
            raise GeometryError("kappa must be positive")
        if not (self.R > 0 and self.r0 > 0):
            raise GeometryError("R and r0 must be positive")
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.cells], dtype=complex)

    def with_amplitudes(self, amplitudes) -> "Scene":
        cells = tuple(replace(c, amplitude=complex(a)) for c, a in zip(self.cells, amplitudes))
        return replace(self, cells=cells)

    def cone(self, j: int) -> VertexCone:
        cell = self.cells[j]
        if cell.probe_vertex is None:
            raise GeometryError(f"cell {j} has no designated probe vertex")
        return vertex_cone(cell.poly, cell.probe_vertex, self.r0)

    def ordered(self) -> tuple["Scene", list[int]]:
        """Reorder cells into an admissible probing order (see :func:`order_cells`)."""
        perm, verts = order_cells(self.cells, self.r0)
        cells = tuple(replace(self.cells[i], probe_vertex=v) for i, v in zip(perm, verts))
        return replace(self, cells=cells), perm


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        return "\n".join(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks)


def _probe_vertex_ok(cells: Sequence[Cell], j: int, v: int, later: Sequence[int], r0: float) -> str:
    """Empty string when vertex ``v`` of cell ``j`` is an admissible probe corner."""
    poly = cells[j].poly
    p = poly.vertices[v]
    try:
        cone = vertex_cone(poly, v, r0)
    except GeometryError as exc:
        return str(exc)
    if not corner_is_local(poly, v, r0):
        return f"r0-ball about vertex {v} reaches a non-incident face"
    for k in later:
        d = cells[k].poly.distance_to(p)
        if d < 3 * r0:
            return f"cell {k} lies within 3*r0 of vertex {v} (distance {d:.4g})"
    tip = p - 0.25 * r0 * cone.axis
    for k, c in enumerate(cells):
        if k != j and c.poly.segment_hits(p, tip):
            return f"probe segment below vertex {v} meets cell {k}"
    return ""


def validate_assumptions(scene: Scene) -> ValidationReport:
    cells = scene.cells
    checks = []
    bad = [(i, j) for i in range(len(cells)) for j in range(i + 1, len(cells))
           if interiors_overlap(cells[i].poly, cells[j].poly)]
    checks.append(Check("disjoint", not bad, f"overlapping pairs: {bad}" if bad else "cells pairwise disjoint"))

    reach = max((np.linalg.norm(c.poly.vertices, axis=1).max() for c in cells), default=0.0)
    checks.append(Check("separation", reach <= scene.R - scene.r0 + GEOM_TOL,
                        f"max |x| over cells = {reach:.6g}, R - r0 = {scene.R - scene.r0:.6g}"))

    for j, cell in enumerate(cells):
        if cell.probe_vertex is None:
            checks.append(Check(f"corner[{j}]", False, "no probe vertex designated (run order_cells)"))
            continue
        msg = _probe_vertex_ok(cells, j, cell.probe_vertex, range(j + 1, len(cells)), scene.r0)
        checks.append(Check(f"corner[{j}]", not msg, msg or f"vertex {cell.probe_vertex} admissible"))

    vol = sum(c.poly.volume for c in cells)
    checks.append(Check("volume_bound", vol <= scene.A, f"|Omega| = {vol:.6g}, A = {scene.A:.6g}"))
    amp = max((abs(c.amplitude) for c in cells), default=0.0)
    checks.append(Check("amplitude_bound", amp <= scene.E, f"max |c_j| = {amp:.6g}, E = {scene.E:.6g}"))
    return ValidationReport(checks)


def order_cells(cells: Sequence[Cell], r0: float) -> tuple[list[int], list[int]]:
    """Greedy probing order: repeatedly take the lowest-index cell owning an admissible corner.

    A corner is admissible when its cone is strictly convex, local within
    ``r0``, clear of every remaining cell by ``3*r0`` and its probe segment
    meets no other cell.  A designated ``probe_vertex`` restricts the search.
    """
    if not cells:
        raise GeometryError("order_cells needs at least one cell")
    remaining = list(range(len(cells)))
    perm, verts = [], []
    while remaining:
        chosen = None
        for j in remaining:
            rest = [k for k in remaining if k != j]
            cands = ([cells[j].probe_vertex] if cells[j].probe_vertex is not None
                     else range(len(cells[j].poly.vertices)))
            for v in cands:
                if not _probe_vertex_ok(cells, j, v, rest, r0):
                    chosen = (j, v)
                    break
            if chosen:
                break
        if chosen is None:
            raise GeometryError(f"no admissible probing order: cells {remaining} block each other")
        perm.append(chosen[0])
        verts.append(chosen[1])
        remaining.remove(chosen[0])
    return perm, verts


def icosphere(radius: float, level: int, centre=(0.0, 0.0, 0.0)) -> ConvexPolyhedron:
    """Convex hull of a subdivided icosahedron with vertices on the sphere."""
    t = (1 + 5 ** 0.5) / 2
    verts = [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0], [0, -1, t], [0, 1, t],
             [0, -1, -t], [0, 1, -t], [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache = {}
        new = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    pts = radius * np.array(verts) + np.asarray(centre, float)
    return ConvexPolyhedron.from_faces(pts, faces)
