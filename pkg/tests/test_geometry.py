import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from cornerprobe.geometry import (
    Cell,
    ConvexPolyhedron,
    GeometryError,
    Scene,
    chebyshev_axis,
    constant_cone,
    icosphere,
    interiors_overlap,
    make_frame,
    order_cells,
    probe_frame,
    rotation_to_e3,
    validate_assumptions,
    vertex_cone,
)

UNIT_CUBE = ConvexPolyhedron.box([0, 0, 0], [1, 1, 1])
REGULAR_TETRA = ConvexPolyhedron.tetrahedron([1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1])

cloud = arrays(np.float64, (8, 3), elements=st.floats(-1.0, 1.0, allow_nan=False))


def _hull_or_none(pts):
    try:
        return ConvexPolyhedron.from_points(pts)
    except (GeometryError, ValueError):
        return None


def test_contains_cube():
    assert UNIT_CUBE.contains([0.5, 0.5, 0.5])
    assert not UNIT_CUBE.contains([2.0, 0.0, 0.0])
    assert UNIT_CUBE.contains([1.0, 0.5, 0.5])
    pts = np.array([[0.5, 0.5, 0.5], [1 + 1e-9, 0.5, 0.5]])
    assert list(UNIT_CUBE.contains(pts)) == [True, False]


def test_tetrahedralize_cube_and_simplex():
    assert_allclose(sum(t.volume for t in UNIT_CUBE.tetrahedralize()), 1.0, atol=1e-12)
    tets = ConvexPolyhedron.tetrahedron([0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]).tetrahedralize()
    assert len(tets) == 1
    assert_allclose(tets[0].volume, 1 / 6, rtol=1e-14)


def test_flat_polyhedron_rejected():
    with pytest.raises(GeometryError):
        ConvexPolyhedron.from_points([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])


def test_invariants_every_vertex_on_three_planes():
    for poly in (UNIT_CUBE, REGULAR_TETRA, icosphere(0.5, 1)):
        for i, v in enumerate(poly.vertices):
            assert len(poly.incident_faces(i)) >= 3
            assert np.all(poly.halfspaces[0] @ v - poly.halfspaces[1] <= 1e-10)


def test_random_hull_volume_against_rejection_sampling():
    rng = np.random.default_rng(0)
    poly = ConvexPolyhedron.from_points(rng.uniform(-1, 1, size=(8, 3)))
    lo, hi = poly.vertices.min(0), poly.vertices.max(0)
    n = 400_000
    pts = rng.uniform(lo, hi, size=(n, 3))
    frac = np.mean(poly.contains(pts))
    mc = frac * np.prod(hi - lo)
    assert abs(mc - poly.volume) <= 0.01 * poly.volume


@settings(max_examples=40, deadline=None)
@given(cloud)
def test_tetra_volume_matches_divergence_theorem(pts):
    poly = _hull_or_none(pts)
    if poly is None or poly.volume < 1e-3:
        return
    assert_allclose(poly.volume, poly.surface_volume(), rtol=1e-10)
    assert np.all(poly.contains(poly.centroid))


def test_cube_corner_cone():
    cone = vertex_cone(UNIT_CUBE, 0, 0.5)
    assert_allclose(UNIT_CUBE.vertices[0], [0, 0, 0])
    assert_allclose(cone.axis, np.ones(3) / np.sqrt(3), atol=1e-7)
    assert_allclose(cone.alpha_min, np.arcsin(1 / np.sqrt(3)), atol=1e-6)
    assert_allclose(cone.alpha_max, np.arccos(1 / np.sqrt(3)), atol=1e-6)


def test_orthant_probed_along_edge_rejected():
    with pytest.raises(GeometryError, match="facet-like"):
        vertex_cone(UNIT_CUBE, 0, 0.5, axis=[0.0, 0.0, 1.0])


def test_regular_tetra_apertures_inside_open_interval():
    cone = vertex_cone(REGULAR_TETRA, 0, 0.5)
    assert np.all(cone.alpha > 0) and np.all(cone.alpha < np.pi / 2)
    # ray casting oracle: along each sampled azimuth the boundary ray just
    # inside the aperture stays in the polyhedron and just outside leaves it
    f = cone.frame
    for ph, a in zip(cone.phi_grid[::16], cone.alpha[::16]):
        for da, inside in ((-1e-4, True), (1e-4, False)):
            d = np.array([np.sin(a + da) * np.cos(ph), np.sin(a + da) * np.sin(ph), np.cos(a + da)])
            assert REGULAR_TETRA.contains(f.from_frame(0.1 * d)) == inside


def test_aperture_matches_containment_in_ball():
    poly = REGULAR_TETRA
    r0 = 0.5
    cone = vertex_cone(poly, 0, r0)
    rng = np.random.default_rng(3)
    d = rng.normal(size=(1000, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    p = cone.apex + d * r0 * rng.uniform(0, 1, size=(1000, 1)) ** (1 / 3)
    z = cone.frame.to_frame(p)
    theta = np.arccos(z[:, 2] / np.linalg.norm(z, axis=1))
    margin = np.abs(theta - cone.aperture(np.arctan2(z[:, 1], z[:, 0])))
    agree = poly.contains(p) == cone.contains(p)
    # disagreements only within the phi-grid interpolation band
    assert np.all(agree | (margin < 2e-3))
    assert np.mean(agree) > 0.99


def test_chebyshev_axis_symmetric_corner():
    axis, margin = chebyshev_axis(-np.eye(3))
    assert_allclose(axis, np.ones(3) / np.sqrt(3), atol=1e-7)
    assert_allclose(margin, 1 / np.sqrt(3), atol=1e-9)


def test_probe_frame_cases():
    f = probe_frame(constant_cone(0.8, 1.0))
    assert_allclose(f.rotation, np.eye(3), atol=1e-15)
    f = make_frame([1.0, 0.0, 0.0], [0.0, 0.0, -1.0])
    assert_allclose(f.to_frame([1.0, 0.0, 0.0]), 0.0, atol=1e-15)
    assert_allclose(f.rotation @ [0.0, 0.0, -1.0], [0.0, 0.0, 1.0], atol=1e-15)
    assert_allclose(f.probe_point(0.25), [1.0, 0.0, 0.25])


@settings(max_examples=25)
@given(arrays(np.float64, 3, elements=st.floats(-1, 1)).filter(lambda a: np.linalg.norm(a) > 1e-3),
       arrays(np.float64, 3, elements=st.floats(-2, 2)))
def test_frame_round_trip_and_isometry(axis, apex):
    f = make_frame(apex, axis)
    assert_allclose(f.rotation @ f.rotation.T, np.eye(3), atol=1e-12)
    assert_allclose(np.linalg.det(f.rotation), 1.0, atol=1e-12)
    pts = np.random.default_rng(0).normal(size=(100, 3))
    assert_allclose(f.from_frame(f.to_frame(pts)), pts, atol=1e-12)
    z = f.to_frame(pts)
    assert_allclose(np.linalg.norm(z[1:] - z[:-1], axis=1), np.linalg.norm(pts[1:] - pts[:-1], axis=1), atol=1e-12)
    assert_allclose(rotation_to_e3(axis) @ (axis / np.linalg.norm(axis)), [0, 0, 1], atol=1e-12)


@pytest.mark.parametrize("axis", [[0, 1.6e-9, 1], [0, 1.6e-9, -1], [0, 0, 1], [0, 0, -1], [1e-12, 0, -1]])
def test_rotation_to_e3_near_poles(axis):
    a = np.asarray(axis, float) / np.linalg.norm(axis)
    q = rotation_to_e3(a)
    assert_allclose(q @ a, [0, 0, 1], atol=1e-15)
    assert_allclose(q @ q.T, np.eye(3), atol=1e-15)


def test_validate_single_tetra_passes():
    cell = Cell(REGULAR_TETRA.transformed(0.1 * np.eye(3)), 1.0, probe_vertex=0)
    report = validate_assumptions(Scene(2.0, 1.0, 0.02, (cell,)))
    assert report.ok, str(report)
    names = [c.name for c in report.checks]
    assert names == ["disjoint", "separation", "corner[0]", "volume_bound", "amplitude_bound"]


def test_validate_overlap_fails():
    a = Cell(ConvexPolyhedron.box([0, 0, 0], [0.2, 0.2, 0.2]), 1.0, 0)
    b = Cell(ConvexPolyhedron.box([0.1, 0.1, 0.1], [0.3, 0.3, 0.3]), 1.0, 0)
    report = validate_assumptions(Scene(2.0, 1.0, 0.01, (a, b)))
    assert [c.name for c in report.failed()][0] == "disjoint"


def test_validate_three_r0_ball_fails():
    a = Cell(ConvexPolyhedron.box([-0.3, -0.1, -0.1], [-0.1, 0.1, 0.1]), 1.0, 1)
    b = Cell(ConvexPolyhedron.box([0.1, -0.1, -0.1], [0.3, 0.1, 0.1]), 1.0, 0)
    gap = 0.2
    ok = validate_assumptions(Scene(2.0, 1.0, 0.3 * gap, (a, b)))
    bad = validate_assumptions(Scene(2.0, 1.0, 0.6 * gap, (a, b)))
    # every vertex of cell a is at least the gap from cell b, so 3 r0 > gap must fail
    assert ok.ok, str(ok)
    assert "corner[0]" in [c.name for c in bad.failed()]


def test_validate_bounds():
    cell = Cell(ConvexPolyhedron.box([0, 0, 0], [0.2, 0.2, 0.2]), 3.0, 0)
    report = validate_assumptions(Scene(2.0, 1.0, 0.02, (cell,), A=1e-3, E=2.0))
    assert {c.name for c in report.failed()} == {"volume_bound", "amplitude_bound"}
    far = Cell(ConvexPolyhedron.box([0.8, 0, 0], [0.95, 0.1, 0.1]), 1.0, 0)
    assert "separation" in [c.name for c in validate_assumptions(Scene(2.0, 1.0, 0.1, (far,))).failed()]


def test_interiors_overlap_touching_faces():
    a = ConvexPolyhedron.box([0, 0, 0], [1, 1, 1])
    b = ConvexPolyhedron.box([1, 0, 0], [2, 1, 1])
    c = ConvexPolyhedron.box([0.5, 0.5, 0.5], [2, 2, 2])
    assert not interiors_overlap(a, b)
    assert interiors_overlap(a, c)


def test_order_single_cell_identity():
    perm, verts = order_cells([Cell(UNIT_CUBE.transformed(0.2 * np.eye(3)), 1.0)], 0.02)
    assert perm == [0] and verts == [0]


def test_order_puts_unblocked_cell_first():
    # A is a slab hugging the top of B: every vertex of A is within 3 r0 of
    # B, while B's bottom corners are far from A.
    r0 = 0.05
    a = Cell(ConvexPolyhedron.box([-0.25, -0.25, -0.08], [0.25, 0.25, -0.02]), 1.0, name="A")
    b = Cell(ConvexPolyhedron.box([-0.2, -0.2, -0.5], [0.2, 0.2, -0.1]), 1.0, name="B")
    perm, verts = order_cells([a, b], r0)
    assert perm == [1, 0]
    ordered = Scene(2.0, 1.0, r0, (Cell(b.poly, 1.0, verts[0]), Cell(a.poly, 1.0, verts[1])))
    assert validate_assumptions(ordered).ok
    with pytest.raises(GeometryError):
        validate_assumptions_or_raise(Scene(2.0, 1.0, r0, (Cell(a.poly, 1.0, 0), Cell(b.poly, 1.0, 0))))


def validate_assumptions_or_raise(scene):
    report = validate_assumptions(scene)
    if not report.ok:
        raise GeometryError(str(report))


def test_order_well_separated_chain_is_identity():
    from cornerprobe.scenes import three_cell_scene
    scene = three_cell_scene()
    perm, verts = order_cells(scene.cells, scene.r0)
    assert perm == [0, 1, 2]
    ordered, _ = scene.ordered()
    assert validate_assumptions(ordered).ok


def test_order_fails_when_blocked():
    a = Cell(ConvexPolyhedron.box([0, 0, 0], [0.1, 0.1, 0.1]), 1.0)
    b = Cell(ConvexPolyhedron.box([0.11, 0, 0], [0.2, 0.1, 0.1]), 1.0)
    with pytest.raises(GeometryError, match="block"):
        order_cells([a, b], 0.05)


def test_icosphere_volume_converges():
    vols = [icosphere(1.0, k).volume for k in (1, 2, 3)]
    err = [4 / 3 * np.pi - v for v in vols]
    assert all(e > 0 for e in err)
    assert err[1] / err[2] > 3.5
