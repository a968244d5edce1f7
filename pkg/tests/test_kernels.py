import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cornerprobe.geometry import rotation_to_e3
from cornerprobe.kernels import (
    SingularityError,
    d3_g,
    fundamental,
    grad_d3_g,
    grad_phi,
    grad_x_phi_pair,
    phi,
    phi_pair,
    smooth_d3,
)

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "d3g_sympy.json").read_text())

coord = st.floats(-2.0, 2.0, allow_nan=False)
point = st.tuples(coord, coord, coord).filter(lambda p: np.linalg.norm(p) > 0.05)


def random_points(n, lo, hi, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.uniform(lo, hi, size=(n, 1))


def test_fundamental_values():
    assert_allclose(fundamental(np.pi, [1.0, 0.0, 0.0]), -1.0 + 0j, atol=1e-15)
    assert_allclose(fundamental(1.0, [0.0, 0.0, 2.0]), np.exp(2j) / 2, rtol=1e-15)
    x = random_points(20, 0.1, 3.0, 0)
    assert_allclose(np.abs(fundamental(1.7, x)), 1.0 / np.linalg.norm(x, axis=1), rtol=1e-14)


def test_singularity_guard():
    with pytest.raises(SingularityError):
        d3_g(1.0, [0.0, 0.0, 1e-15])
    with pytest.raises(SingularityError):
        phi_pair(1.0, np.eye(3), [0.2, 0.1, 0.0], [0.2, 0.1, 0.0])
    with pytest.raises(ValueError):
        phi(0.0, [1.0, 0.0, 0.0])


@pytest.mark.parametrize("row", FIXTURE, ids=lambda r: f"k{r['kappa']}-{r['x']}")
def test_d3_g_matches_sympy(row):
    want = complex(*row["d3"])
    assert_allclose(d3_g(row["kappa"], row["x"]), want, rtol=1e-12)
    grad = np.array([complex(*g) for g in row["grad"]])
    assert_allclose(grad_d3_g(row["kappa"], row["x"]), grad, rtol=1e-11, atol=1e-12 * np.abs(grad).max())


def test_d3_g_sixth_order_finite_difference():
    x = np.array([0.3, -0.2, 0.5])
    h = 1e-2
    # sixth-order central stencil for the third derivative
    offsets = np.array([-4, -3, -2, -1, 1, 2, 3, 4])
    weights = np.array([-7, 72, -338, 488, -488, 338, -72, 7]) / 240.0
    pts = x + np.outer(offsets * h, [0.0, 0.0, 1.0])
    fd = weights @ fundamental(1.0, pts) / h**3
    assert_allclose(d3_g(1.0, x), fd, rtol=1e-6)


def test_odd_derivative_vanishes_on_plane():
    assert d3_g(2.3, [1.0, 1.0, 0.0]) == 0
    assert phi(2.3, [0.4, -1.2, 0.0]) == 0.0


@given(point, st.floats(0.1, 5.0))
def test_phi_is_odd(p, kappa):
    p = np.array(p)
    assert phi(kappa, -p) == -phi(kappa, p)


def test_asymptotic_law():
    d = np.array([0.3, -0.4, 0.8])
    leading = d[2] * (-9 * d[0] ** 2 - 9 * d[1] ** 2 + 6 * d[2] ** 2) / np.linalg.norm(d) ** 7
    gaps = []
    for t in (1e-2, 1e-3, 1e-4):
        gaps.append(abs(phi(1.0, t * d) * t**4 - leading))
    # O(t) remainder: each decade of t shrinks the gap by about ten
    assert gaps[1] < 0.2 * gaps[0] and gaps[2] < 0.2 * gaps[1]
    assert gaps[0] < 0.1 * abs(leading)


def test_asymptotic_ratio_tends_to_one():
    x = 1e-4 * np.array([0.5, 0.2, 0.7])
    ratio = phi(2.0, x) * np.linalg.norm(x) ** 7 / (x[2] * (-9 * x[0] ** 2 - 9 * x[1] ** 2 + 6 * x[2] ** 2))
    assert_allclose(ratio, 1.0, rtol=1e-6)


def _laplacian_fd(f, x, h):
    # fourth-order five-point stencil per axis
    c = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * h * h)
    total = np.zeros(len(x))
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        total += sum(ci * f(x + (i - 2) * e) for i, ci in enumerate(c))
    return total


def test_phi_solves_helmholtz():
    kappa = 2.0
    x = random_points(100, 0.5, 2.0, 1)
    h = 2e-3
    resid = _laplacian_fd(lambda p: phi(kappa, p), x, h) + kappa**2 * phi(kappa, x)
    scale = np.max(np.abs(phi(kappa, x)))
    assert np.max(np.abs(resid)) <= 1e-4 * scale


def test_smooth_part_is_entire():
    # -Im d3_g has no pole: it stays finite and continuous through the origin
    kappa = 2.0
    x = np.array([[0.0, 0.0, 1e-9], [0.01, 0.02, 0.03], [0.3, 0.2, -0.4]])
    assert_allclose(smooth_d3(kappa, x[1:]), np.imag(d3_g(kappa, x[1:])), rtol=1e-9)
    assert np.isfinite(smooth_d3(kappa, x[:1])).all()
    near = smooth_d3(kappa, np.array([[0.0, 0.0, 0.049 / kappa], [0.0, 0.0, 0.051 / kappa]]))
    assert_allclose(near[0], near[1], rtol=0.1)


def test_grad_phi_finite_differences():
    kappa = 1.3
    x = random_points(100, 0.8, 1.2, 2)
    h = 1e-5
    fd = np.stack([(phi(kappa, x + h * e) - phi(kappa, x - h * e)) / (2 * h) for e in np.eye(3)], axis=1)
    g = grad_phi(kappa, x)
    assert np.max(np.abs(g - fd)) <= 1e-5 * np.max(np.abs(g))


def test_phi_pair_identity_frame_and_antisymmetry():
    x = random_points(50, 0.2, 1.0, 3)
    y = random_points(50, 0.2, 1.0, 4)
    assert_allclose(phi_pair(2.0, np.eye(3), x, y), phi(2.0, x - y), rtol=1e-15)
    assert_allclose(phi_pair(2.0, np.eye(3), y, x), -phi_pair(2.0, np.eye(3), x, y), rtol=1e-15)


def test_phi_pair_rotated_frame():
    rng = np.random.default_rng(5)
    x = random_points(100, 0.2, 1.0, 6)
    y = random_points(100, 0.2, 1.0, 7)
    u = rng.normal(size=3)
    rot = rotation_to_e3(u)
    assert_allclose(rot @ (u / np.linalg.norm(u)), [0, 0, 1], atol=1e-12)
    want = np.array([phi(1.5, rot @ (a - b)) for a, b in zip(x, y)])
    assert_allclose(phi_pair(1.5, rot, x, y), want, rtol=1e-12)


def test_grad_x_phi_pair():
    rng = np.random.default_rng(8)
    rot = rotation_to_e3(rng.normal(size=3))
    y = random_points(100, 0.0, 0.5, 9)
    x = y + random_points(100, 0.9, 1.1, 10)
    kappa = 2.0
    h = 1e-5
    g = grad_x_phi_pair(kappa, rot, x, y)
    fd = np.stack([(phi_pair(kappa, rot, x + h * e, y) - phi_pair(kappa, rot, x - h * e, y)) / (2 * h)
                   for e in np.eye(3)], axis=1)
    assert np.max(np.abs(g - fd) / np.abs(g).max(axis=1, keepdims=True)) <= 1e-5
    # translation invariance: the y-gradient is the negative of the x-gradient
    gy = np.stack([(phi_pair(kappa, rot, x, y + h * e) - phi_pair(kappa, rot, x, y - h * e)) / (2 * h)
                   for e in np.eye(3)], axis=1)
    assert_allclose(gy, -g, atol=1e-5 * np.abs(g).max())


def test_gradient_nonzero_where_phi_vanishes():
    x = np.array([0.6, -0.3, 0.0])
    assert phi(1.0, x) == 0.0
    g = grad_phi(1.0, x)
    h = 1e-6
    fd = (phi(1.0, x + [0, 0, h]) - phi(1.0, x - [0, 0, h])) / (2 * h)
    assert abs(g[2]) > 1.0
    assert_allclose(g[2], fd, rtol=1e-6)


@settings(max_examples=30)
@given(point, point, st.floats(0.2, 4.0))
def test_pair_depends_on_difference(a, b, kappa):
    a, b = np.array(a), np.array(b)
    if np.linalg.norm(a - b) < 0.05:
        return
    shift = np.array([0.3, -0.1, 0.2])
    assert_allclose(phi_pair(kappa, np.eye(3), a + shift, b + shift), phi_pair(kappa, np.eye(3), a, b),
                    rtol=1e-9, atol=1e-12)
