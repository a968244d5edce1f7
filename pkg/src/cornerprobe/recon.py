"""Layer-stripping reconstruction of the cell amplitudes by corner probing.

Probe points ``y_r = P - r * axis`` lie inside ``B_R``.  There the boundary
pairing ``B(y)`` no longer equals ``int f Phi_k(., y)``: Green's identity over
``B_R`` also picks up ``u`` paired with ``(Delta + kappa^2) Phi_k = 4 pi d^3 delta``,
which gives

    int_Omega f Phi_k(., y) = B(y) - 4 pi d^3 u(y).

For a unit-amplitude cell ``D_j``, ``-4 pi d^3 u_j(y) = V_j(y) - i W_j(y)`` with
``V_j = int_{D_j} Phi_k`` and ``W_j = int_{D_j} Im d^3 G`` (smooth).  The value
``d^3 u(y_r)`` is interior information that the Dirichlet data determine only
through unique continuation.  Here it is continued by fitting the data in the
span of the known per-cell fields (the geometry is given); the fitted
weights ``b_j`` then supply the correction.  This is a documented substitute
for continuation, see ``CONTINUATION_NOTE``.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import yaml

from .dtn import BandLimitWarning, SphereGrid, analyze, dtn_eigenvalues, synthesize
from .forward import BoundaryField, SourceCloud, add_noise, cell_cloud, cloud_field, h1_norm, sphere_gap
from .geometry import ConvexPolyhedron, GeometryError, ProbeFrame, Scene, validate_assumptions, vertex_cone
from .probe import (
    aperture_moment,
    c0_lower_bound,
    corner_aperture,
    fine_band_limit,
    probe_kernel,
    probe_traces,
    smooth_moment,
    volume_moment,
)
from .quadrature import QuadratureSpec, adaptive_integrate, refine

VERSION = "0.1.0"
CONTINUATION_NOTE = (
    "interior probe values use span continuation: d^3 u(y_r) is taken from a weighted "
    "least-squares fit of the Dirichlet data by the per-cell unit fields; this replaces "
    "unique continuation and is not a data-only estimate"
)
CORNER_RADIUS_FRACTION = 0.75


class ReconstructionError(RuntimeError):
    def __init__(self, message: str, report: "ReconstructionReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ProbeSchedule:
    """Probe radii as fractions of ``r0`` (decreasing) and the regression model.

    ``moment="cell"`` divides by the whole-cell moment ``int_{D} Phi_k(., y_r)``;
    ``moment="corner"`` by the ball-clipped corner moment, leaving the rest of
    the cell in the fitted offset.
    """

    fractions: tuple[float, ...] = (1 / 8, 1 / 16, 1 / 32)
    mode: str = "two-term"
    moment: str = "cell"

    def __post_init__(self):
        f = np.asarray(self.fractions, float)
        if self.mode not in ("single", "two-term"):
            raise ValueError(f"unknown regression mode {self.mode!r}")
        if self.moment not in ("cell", "corner"):
            raise ValueError(f"unknown moment {self.moment!r}")
        if len(f) == 0 or np.any(f <= 0) or np.any(f >= 0.25):
            raise ValueError("probe radii must lie in (0, r0/4)")
        if self.mode == "two-term" and len(f) < 2:
            raise ValueError("two-term fit needs at least two radii")
        if len(f) > 1:
            ratio = f[:-1] / f[1:]
            if np.any(ratio < 1.5 - 1e-12) or np.any(ratio > 4 + 1e-12):
                raise ValueError("consecutive radii must shrink by a ratio in [1.5, 4]")

    def radii(self, r0: float) -> np.ndarray:
        return r0 * np.asarray(self.fractions, float)


# ---------------------------------------------------------------------------
# corner moments
# ---------------------------------------------------------------------------

def _offset(frame: ProbeFrame, y_r) -> float:
    z = frame.to_frame(y_r)
    r = -z[2]
    if r <= 0 or np.hypot(z[0], z[1]) > 1e-9 * max(1.0, r):
        raise ValueError("probe point must lie on the axis below the apex")
    return float(r)


def corner_moment(poly: ConvexPolyhedron, vertex_index: int, kappa: float, frame: ProbeFrame, y_r,
                  radius: float) -> float:
    """``int over B_radius(y_r) of the probed cell of Phi_k(., y_r)``.

    Exact for a corner whose tangent cone describes the cell inside
    ``B_radius(y_r)``: integrates the closed-form cap integral along rays
    using the exact aperture, with azimuthal panels split at the edges.
    """
    if not np.allclose(frame.apex, poly.vertices[vertex_index]):
        raise ValueError("frame apex is not the probed vertex")
    r = _offset(frame, y_r)
    if r >= radius:
        raise ValueError("probe offset exceeds the corner radius")
    aperture, breaks = corner_aperture(poly, vertex_index, frame)
    return aperture_moment(kappa, aperture, r, radius, breaks)


def clipped_corner_moment(poly: ConvexPolyhedron, kappa: float, frame: ProbeFrame, y_r, radius: float,
                          depth: int = 5, quad: QuadratureSpec = QuadratureSpec(rtol=1e-7, atol=1e-9)) -> float:
    """Reference route: cell tetrahedra refined across ``|x - y_r| = radius`` and kept by centroid."""
    y_r = np.asarray(y_r, float)
    tets = poly.tetra_array()
    kept = []
    for _ in range(depth):
        d = np.linalg.norm(tets - y_r, axis=-1)
        inside, outside = (d <= radius).all(axis=1), (d >= radius).all(axis=1)
        kept.append(tets[inside])
        tets = refine(tets[~inside & ~outside])
    centroid = np.linalg.norm(tets.mean(axis=1) - y_r, axis=-1)
    kept.append(tets[centroid <= radius])
    return float(adaptive_integrate(np.concatenate(kept), y_r, probe_kernel(kappa, frame), quad))


# ---------------------------------------------------------------------------
# data-independent plan
# ---------------------------------------------------------------------------

@dataclass
class StepPlan:
    """Everything about probing cell ``index`` that does not depend on the data."""

    index: int
    vertex: int
    frame: ProbeFrame
    radii: np.ndarray
    points: np.ndarray
    corner: np.ndarray
    V: np.ndarray
    W: np.ndarray
    fine: SphereGrid
    traces: list
    floor: float


@dataclass
class ReconstructionPlan:
    scene: Scene
    grid: SphereGrid
    schedule: ProbeSchedule
    clouds: list
    unit_fields: np.ndarray
    steps: list[StepPlan]


def _unit_clouds(scene: Scene, quad: QuadratureSpec) -> list[SourceCloud]:
    return [cell_cloud(c.poly, 1.0, scene.kappa, sphere_gap(scene.R), quad) for c in scene.cells]


def plan_reconstruction(scene: Scene, grid: SphereGrid, schedule: ProbeSchedule = ProbeSchedule(),
                        quad: QuadratureSpec = QuadratureSpec(), tol: float = 1e-12) -> ReconstructionPlan:
    if any(c.probe_vertex is None for c in scene.cells):
        raise GeometryError("every cell needs a probe vertex (see Scene.ordered)")
    kappa = scene.kappa
    clouds = _unit_clouds(scene, quad)
    unit = np.column_stack([cloud_field(cl, kappa, grid.nodes) for cl in clouds]) if clouds else \
        np.zeros((grid.size, 0), complex)
    radius = CORNER_RADIUS_FRACTION * scene.r0
    steps = []
    for k, cell in enumerate(scene.cells):
        cone = vertex_cone(cell.poly, cell.probe_vertex, scene.r0)
        frame = cone.frame
        radii = schedule.radii(scene.r0)
        pts = np.array([frame.probe_point(r) for r in radii])
        corner = np.array([corner_moment(cell.poly, cell.probe_vertex, kappa, frame, y, radius) for y in pts])
        V = np.array([[volume_moment(c.poly, kappa, frame, y, quad) for c in scene.cells] for y in pts])
        W = np.array([[smooth_moment(cl.points, cl.weights.real, kappa, frame, y) for cl in clouds] for y in pts])
        ratio = np.max(np.linalg.norm(pts, axis=1)) / scene.R
        fine = SphereGrid(scene.R, fine_band_limit(grid.L, ratio, tol))
        traces = [probe_traces(kappa, frame, y, fine) for y in pts]
        floor = 0.1 * c0_lower_bound(cone.alpha_min, cone.alpha_max)
        steps.append(StepPlan(k, cell.probe_vertex, frame, radii, pts, corner, V, W.astype(complex),
                              fine, traces, floor))
    return ReconstructionPlan(scene, grid, schedule, clouds, unit, steps)


# ---------------------------------------------------------------------------
# data-dependent pieces
# ---------------------------------------------------------------------------

def span_continuation(field: BoundaryField, unit_fields: np.ndarray) -> np.ndarray:
    """Weights ``b`` minimising ``||u - sum_j b_j u_j||`` in the sphere's L2 norm."""
    if unit_fields.shape[1] == 0:
        return np.zeros(0, complex)
    sw = np.sqrt(field.grid.weights)
    b, *_ = np.linalg.lstsq(sw[:, None] * unit_fields, sw * field.u, rcond=None)
    return b


def _boundary_values(field: BoundaryField, step: StepPlan) -> np.ndarray:
    a = analyze(field.u, field.grid)
    lam = dtn_eigenvalues(field.kappa, field.grid.R, a.L)
    u = synthesize(a, step.fine)
    dnu = synthesize(a.scaled(lam), step.fine)
    w = step.fine.weights
    return np.array([np.sum(w * (dnu * val - dval * u)) for val, dval in step.traces])


def residual_values(field: BoundaryField, plan: ReconstructionPlan, k: int, known: Sequence[complex],
                    continuation: np.ndarray | None = None) -> np.ndarray:
    """``S_k(y_r)`` at every scheduled radius of step ``k``.

    ``S_k = B + sum_j b_j (V_j - i W_j) - sum_{j<k} c_j V_j``, where ``b`` is
    the span continuation of the data unless ``continuation`` supplies it.
    """
    step = plan.steps[k]
    b = span_continuation(field, plan.unit_fields) if continuation is None else np.asarray(continuation)
    B = _boundary_values(field, step)
    corr = (step.V - 1j * step.W) @ b if len(b) else 0.0
    known = np.asarray(known, complex)[:k]
    return B + corr - (step.V[:, :k] @ known if k else 0.0)


def residual_functional(field: BoundaryField, scene: Scene, k: int, known: Sequence[complex], y_r,
                        frame: ProbeFrame, quad: QuadratureSpec = QuadratureSpec(),
                        continuation: np.ndarray | None = None, tol: float = 1e-12) -> complex:
    """Data-driven ``S_k(y_r)`` at one probe point (stand-alone version of :func:`residual_values`)."""
    kappa = scene.kappa
    y_r = np.asarray(y_r, float)
    for j, c in enumerate(scene.cells):
        if c.poly.contains(y_r):
            raise ValueError(f"probe point lies inside cell {j}")
    clouds = _unit_clouds(scene, quad)
    if continuation is None:
        unit = np.column_stack([cloud_field(cl, kappa, field.grid.nodes) for cl in clouds])
        continuation = span_continuation(field, unit)
    V = np.array([volume_moment(c.poly, kappa, frame, y_r, quad) for c in scene.cells])
    W = np.array([smooth_moment(cl.points, cl.weights.real, kappa, frame, y_r) for cl in clouds])
    R = field.grid.R
    ny = np.linalg.norm(y_r)
    fine = SphereGrid(R, fine_band_limit(field.grid.L, min(ny / R, R / ny), tol))
    step = StepPlan(k, -1, frame, np.array([0.0]), y_r[None], np.zeros(1), V[None], W[None], fine,
                    [probe_traces(kappa, frame, y_r, fine)], 0.0)
    B = _boundary_values(field, step)[0]
    known = np.asarray(known, complex)[:k]
    return complex(B + (V - 1j * W) @ np.asarray(continuation) - V[:k] @ known)


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

@dataclass
class CellEstimate:
    index: int
    vertex: int
    amplitude: complex
    radii: list[float]
    moments: list[float]
    values: list[complex]
    offset: complex
    fit_residual: float
    reference: complex | None = None

    @property
    def error(self) -> float | None:
        if self.reference is None:
            return None
        return abs(self.amplitude - self.reference)


def fit_amplitude(values: np.ndarray, moments: np.ndarray, mode: str = "two-term") -> tuple[complex, complex, float]:
    """Fit ``S(r_i) = c M(r_i) + b`` (two-term) or ``S = c M`` at the smallest radius (single).

    Returns ``(c, b, relative residual)``.
    """
    M = np.asarray(moments, float)
    S = np.asarray(values, complex)
    if mode == "single":
        return complex(S[-1] / M[-1]), 0j, 0.0
    A = np.column_stack([M, np.ones_like(M)])
    if np.ptp(M) <= 1e-6 * np.abs(M).max():
        raise ReconstructionError("corner not resolving: moment curve is flat")
    coef, *_ = np.linalg.lstsq(A.astype(complex), S, rcond=None)
    res = S - A @ coef
    scale = np.linalg.norm(S)
    return complex(coef[0]), complex(coef[1]), float(np.linalg.norm(res) / scale) if scale > 0 else 0.0


def estimate_amplitude(field: BoundaryField, plan: ReconstructionPlan, k: int, known: Sequence[complex],
                       continuation: np.ndarray | None = None) -> CellEstimate:
    step = plan.steps[k]
    S = residual_values(field, plan, k, known, continuation)
    if np.any(step.corner * step.radii <= step.floor):
        raise ReconstructionError("corner not resolving: moment below the certified floor")
    M = step.V[:, k] if plan.schedule.moment == "cell" else step.corner
    c, b, res = fit_amplitude(S, M, plan.schedule.mode)
    return CellEstimate(step.index, step.vertex, c, step.radii.tolist(), M.tolist(), S.tolist(), b, res)


@dataclass
class ReconstructionReport:
    cells: list[CellEstimate]
    eps: float
    tail_fraction: float
    schedule: ProbeSchedule
    notes: list[str] = field(default_factory=lambda: [CONTINUATION_NOTE])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.cells], complex)

    def relative_errors(self) -> np.ndarray | None:
        if any(c.reference is None for c in self.cells):
            return None
        return np.array([abs(c.amplitude - c.reference) / abs(c.reference) if c.reference else abs(c.amplitude)
                         for c in self.cells])

    def to_text(self) -> str:
        def cplx(z):
            return None if z is None else [float(np.real(z)), float(np.imag(z))]
        doc = {
            "version": VERSION,
            "notes": self.notes,
            "eps": float(self.eps),
            "tail_fraction": float(self.tail_fraction),
            "schedule": {"fractions": [float(f) for f in self.schedule.fractions], "mode": self.schedule.mode,
                         "moment": self.schedule.moment},
            "cells": [{
                "index": c.index, "vertex": c.vertex, "amplitude": cplx(c.amplitude),
                "radii": [float(r) for r in c.radii], "moments": [float(m) for m in c.moments],
                "values": [cplx(v) for v in c.values], "offset": cplx(c.offset),
                "fit_residual": float(c.fit_residual), "reference": cplx(c.reference),
                "error": None if c.error is None else float(c.error),
            } for c in self.cells],
        }
        return f"# corner-probe v{VERSION}\n" + yaml.safe_dump(doc, sort_keys=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# corner-probe v{VERSION}\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        w = csv.writer(buf, lineterminator="\n")
        ref = all(c.reference is not None for c in self.cells)
        head = ["cell", "vertex", "c_re", "c_im", "offset_re", "offset_im", "fit_residual"]
        w.writerow(head + (["ref_re", "ref_im", "abs_error", "rel_error"] if ref else []))
        for c in self.cells:
            row = [c.index, c.vertex, repr(c.amplitude.real), repr(c.amplitude.imag),
                   repr(c.offset.real), repr(c.offset.imag), repr(c.fit_residual)]
            if ref:
                rel = c.error / abs(c.reference) if c.reference else c.error
                row += [repr(c.reference.real), repr(c.reference.imag), repr(c.error), repr(rel)]
            w.writerow(row)
        return buf.getvalue()


def reconstruct(plan: ReconstructionPlan, field: BoundaryField, reference: Sequence[complex] | None = None,
                continuation: np.ndarray | None = None) -> ReconstructionReport:
    """Recover ``c_1, ..., c_N`` in the plan's order, feeding each estimate forward.

    Only the Dirichlet data are used: the Neumann trace is rebuilt with the
    DtN map.
    """
    if field.grid.L != plan.grid.L or abs(field.grid.R - plan.grid.R) > 1e-12 * plan.grid.R:
        raise ValueError("data grid does not match the reconstruction plan")
    if abs(field.kappa - plan.scene.kappa) > 1e-12 * plan.scene.kappa:
        raise ValueError("data wavenumber does not match the scene")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandLimitWarning)
        norm = h1_norm(field)
    report = ReconstructionReport([], norm.value, norm.tail_fraction, plan.schedule)
    known: list[complex] = []
    for k in range(len(plan.steps)):
        try:
            est = estimate_amplitude(field, plan, k, known, continuation)
        except ReconstructionError as exc:
            raise ReconstructionError(f"step {k}: {exc}", report) from exc
        if reference is not None:
            est.reference = complex(reference[k])
        report.cells.append(est)
        known.append(est.amplitude)
    return report


def reconstruct_scene(scene: Scene, field: BoundaryField, schedule: ProbeSchedule = ProbeSchedule(),
                      quad: QuadratureSpec = QuadratureSpec(), reference: Sequence[complex] | None = None):
    """Validate, order and reconstruct; returns the report and the probing permutation."""
    if any(c.probe_vertex is None for c in scene.cells):
        scene, perm = scene.ordered()
    else:
        perm = list(range(len(scene.cells)))
    report = validate_assumptions(scene)
    if not report.ok:
        raise GeometryError("scene violates the probing assumptions:\n" + str(report))
    plan = plan_reconstruction(scene, field.grid, schedule, quad)
    ref = None if reference is None else [reference[i] for i in perm]
    return reconstruct(plan, field, ref), perm


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    level: float
    seed: int
    eps: float
    error: float
    rel_error: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    slope: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# corner-probe v{VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "seed", "eps", "max_abs_error", "max_rel_error"])
        for r in self.rows:
            w.writerow([repr(r.level), r.seed, repr(r.eps), repr(r.error), repr(r.rel_error)])
        w.writerow(["slope", "", "", repr(self.slope), ""])
        return buf.getvalue()


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def stability_sweep(plan: ReconstructionPlan, clean: BoundaryField, levels: Sequence[float],
                    seeds: Sequence[int]) -> SweepResult:
    """Reconstruction error against the data perturbation ``||noisy - clean||_{H^1}``."""
    levels = [float(v) for v in levels]
    if not levels:
        raise ValueError("need at least one noise level")
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ValueError("noise levels must be sorted ascending")
    truth = plan.scene.amplitudes
    rows = []
    for level in levels:
        for seed in (seeds if level > 0 else seeds[:1]):
            noisy = add_noise(clean, level, seed)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BandLimitWarning)
                eps = h1_norm(noisy - clean).value
            est = reconstruct(plan, noisy).amplitudes
            err = np.abs(est - truth)
            rows.append(SweepRow(level, int(seed), eps, float(err.max()),
                                 float(np.max(err / np.maximum(np.abs(truth), 1e-300)))))
    noisy_rows = [r for r in rows if r.level > 0]
    slope = loglog_slope([r.eps for r in noisy_rows], [r.error for r in noisy_rows])
    return SweepResult(rows, slope)
