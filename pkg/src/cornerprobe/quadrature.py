"""Tetrahedral quadrature: conical-product rules, red refinement, adaptivity."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi


class QuadratureBudgetError(RuntimeError):
    """Adaptive quadrature ran out of budget; ``estimate`` holds the partial sum."""

    def __init__(self, message: str, estimate, n_tets: int):
        super().__init__(message)
        self.estimate = estimate
        self.n_tets = n_tets


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings shared by the forward solver and the probe integrals.

    ``order`` is the number of Gauss points per collapsed direction (the rule
    is exact for polynomials of degree ``2*order - 1``).  Source tetrahedra are
    refined until ``max_edge <= min(kappa_h / kappa, distance / eta)`` where
    ``distance`` bounds the gap to the evaluation set.  Singular moments use
    the ``adaptive_order``/``adaptive_order + 1`` pair on a mesh graded to
    ``max_edge <= distance / near_eta``.
    """

    order: int = 3
    eta: float = 1.0
    kappa_h: float = 1.0
    adaptive_order: int = 4
    near_eta: float = 1.0
    atol: float = 1e-10
    rtol: float = 1e-7
    max_tets: int = 400_000


@lru_cache(maxsize=None)
def tetra_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Stroud conical-product rule on the unit simplex.

    Returns barycentric coordinates ``(n**3, 4)`` and weights summing to one.
    """
    if n < 1:
        raise ValueError("rule order must be >= 1")
    out = []
    for alpha in (2.0, 1.0, 0.0):
        x, w = roots_jacobi(n, alpha, 0.0)
        t = 0.5 * (1.0 + x)
        out.append((t, w / 2.0 ** (alpha + 1.0)))
    (t1, w1), (t2, w2), (t3, w3) = out
    a, b, c = np.meshgrid(t1, t2, t3, indexing="ij")
    wa, wb, wc = np.meshgrid(w1, w2, w3, indexing="ij")
    x = a
    y = (1.0 - a) * b
    z = (1.0 - a) * (1.0 - b) * c
    w = (wa * wb * wc).ravel()
    bary = np.stack([1.0 - x - y - z, x, y, z], axis=-1).reshape(-1, 4)
    return bary, w / w.sum()


def tet_volumes(tets: np.ndarray) -> np.ndarray:
    """Unsigned volumes of ``(M, 4, 3)`` tetrahedra."""
    e = tets[:, 1:, :] - tets[:, :1, :]
    return np.abs(np.linalg.det(e)) / 6.0


def tet_max_edge(tets: np.ndarray) -> np.ndarray:
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    edges = np.stack([np.linalg.norm(tets[:, i] - tets[:, j], axis=-1) for i, j in pairs])
    return edges.max(axis=0)


def refine(tets: np.ndarray) -> np.ndarray:
    """Bey's red refinement: each tetrahedron into eight children."""
    x0, x1, x2, x3 = (tets[:, i] for i in range(4))
    m01, m02, m03 = (x0 + x1) / 2, (x0 + x2) / 2, (x0 + x3) / 2
    m12, m13, m23 = (x1 + x2) / 2, (x1 + x3) / 2, (x2 + x3) / 2
    children = [
        (x0, m01, m02, m03),
        (m01, x1, m12, m13),
        (m02, m12, x2, m23),
        (m03, m13, m23, x3),
        (m01, m02, m03, m13),
        (m01, m02, m12, m13),
        (m02, m03, m13, m23),
        (m02, m12, m13, m23),
    ]
    out = np.stack([np.stack(c, axis=1) for c in children], axis=1)
    return out.reshape(-1, 4, 3)


def rule_points(tets: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes ``(M*q, 3)`` and weights ``(M*q,)`` on a batch of tets."""
    bary, w = tetra_rule(n)
    pts = np.einsum("qk,mkd->mqd", bary, tets)
    wts = tet_volumes(tets)[:, None] * w[None, :]
    return pts.reshape(-1, 3), wts.ravel()


def refine_until(tets: np.ndarray, needs_split: Callable[[np.ndarray], np.ndarray],
                 max_tets: int = 2_000_000) -> np.ndarray:
    """Refine selectively until ``needs_split`` is false everywhere."""
    done = []
    work = tets
    while len(work):
        mask = needs_split(work)
        done.append(work[~mask])
        work = refine(work[mask]) if mask.any() else work[:0]
        if sum(len(d) for d in done) + len(work) > max_tets:
            raise QuadratureBudgetError("refinement exceeded tetra budget", None,
                                        sum(len(d) for d in done) + len(work))
    return np.concatenate(done) if done else tets[:0]


def _bounding(tets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centre = tets.mean(axis=1)
    radius = np.linalg.norm(tets - centre[:, None, :], axis=-1).max(axis=1)
    return centre, radius


def adaptive_integrate(tets: np.ndarray, y: np.ndarray, kernel: Callable[[np.ndarray], np.ndarray],
                       spec: QuadratureSpec = QuadratureSpec()):
    """Integrate ``kernel(x - y)`` over a union of tetrahedra not containing ``y``.

    Tetrahedra are split until ``max_edge <= dist/near_eta`` (distance from the
    bounding sphere to ``y``), then accepted when the order ``n`` and ``n+1``
    rules agree to ``max(atol * vol/V, rtol * Q|.|)``, where ``Q|.|`` is the
    rule applied to the kernel's modulus.  Rejected tetrahedra with the
    smallest error estimates are also accepted while their summed estimate
    fits in ``rtol/2`` times a one-pass pilot value of the integral.
    """
    y = np.asarray(y, dtype=float)
    pilot = _adaptive(tets, y, kernel, spec, graded_only=True)
    return _adaptive(tets, y, kernel, spec, budget=0.5 * spec.rtol * abs(pilot))


def _adaptive(tets, y, kernel, spec: QuadratureSpec, budget: float = 0.0, graded_only: bool = False):
    total_volume = tet_volumes(tets).sum()
    work = tets
    total = 0.0
    evaluated = 0
    n = spec.adaptive_order
    bary_lo, w_lo = tetra_rule(n)
    bary_hi, w_hi = tetra_rule(n + 1)
    while len(work):
        centre, radius = _bounding(work)
        gap = np.linalg.norm(centre - y, axis=-1) - radius
        split = tet_max_edge(work) * spec.near_eta > gap
        candidates = work[~split]
        split_more = candidates[:0]
        if len(candidates):
            vol = tet_volumes(candidates)
            k_hi = kernel(np.einsum("qk,mkd->mqd", bary_hi, candidates) - y)
            hi = np.einsum("q,mq->m", w_hi, k_hi) * vol
            if graded_only:
                total = total + hi.sum()
            else:
                lo = np.einsum("q,mq->m", w_lo, kernel(np.einsum("qk,mkd->mqd", bary_lo, candidates) - y)) * vol
                mass = np.einsum("q,mq->m", w_hi, np.abs(k_hi)) * vol
                err = np.abs(hi - lo)
                ok = err <= np.maximum(spec.atol * vol / total_volume, spec.rtol * mass)
                bad = np.flatnonzero(~ok)
                if budget > 0 and len(bad):
                    bad = bad[np.argsort(err[bad])]
                    take = bad[np.cumsum(err[bad]) <= budget]
                    ok[take] = True
                    budget -= err[take].sum()
                total = total + hi[ok].sum()
                split_more = candidates[~ok]
        evaluated += len(candidates)
        work = np.concatenate([work[split], split_more])
        if len(work):
            if evaluated + 8 * len(work) > spec.max_tets:
                raise QuadratureBudgetError(
                    f"adaptive quadrature exhausted budget of {spec.max_tets} tetrahedra",
                    total, evaluated)
            work = refine(work)
    return total
