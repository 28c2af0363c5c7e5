"""Quadrature on the reference triangle and the unit segment.

Triangle rules are tensorized Gauss rules under the collapsed-coordinate
(Duffy) map, so any exactness degree is available from a simple
construction.  Composite geometrically graded rules handle integrands
with an inverse-square-root blowup at a vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: reference triangle is conv{(0,0), (1,0), (0,1)}; its measure
REF_AREA = 0.5


@dataclass(frozen=True)
class QuadRule:
    """Points and positive weights; exact for polynomials up to ``degree``.

    Triangle rules store barycentric points of shape (n, 3) and weights
    summing to 1/2; segment rules store points in [0, 1] of shape (n,)
    and weights summing to 1.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)


def segment_rule(degree):
    """Gauss-Legendre rule on [0, 1] exact up to the given degree."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadRule((x + 1.0) / 2.0, w / 2.0, degree)


def triangle_rule(degree):
    """Duffy-mapped tensor Gauss rule on the reference triangle.

    The map (u, v) -> (u(1-v), v) carries [0,1]^2 onto the triangle with
    Jacobian (1-v), so the v-direction needs one extra degree.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    ru = segment_rule(degree)
    rv = segment_rule(degree + 1)
    u, v = np.meshgrid(ru.points, rv.points, indexing="ij")
    wu, wv = np.meshgrid(ru.weights, rv.weights, indexing="ij")
    x = (u * (1.0 - v)).ravel()
    y = v.ravel()
    w = (wu * wv * (1.0 - v)).ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    return QuadRule(bary, w, degree)


def _subcell_rule(base, corners):
    """Map a reference-triangle rule onto a sub-triangle given in barycentric corners."""
    pts = base.points @ corners
    ref = corners[:, 1:]  # barycentric -> reference coordinates of the corners
    u, v = ref[1] - ref[0], ref[2] - ref[0]
    scale = abs(u[0] * v[1] - u[1] * v[0])  # area ratio vs reference
    return pts, base.weights * scale


def graded_triangle_rule(degree, singular_vertex, levels, ratio):
    """Composite rule graded geometrically toward one vertex.

    The triangle is partitioned into ``levels`` self-similar shells
    shrinking by ``ratio`` toward ``singular_vertex`` plus an innermost
    scaled copy; every cell carries ``triangle_rule(degree)``.  Suitable
    for integrands behaving like r^(-1/2) at that vertex.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    s = int(singular_vertex)
    if s not in (0, 1, 2):
        raise ValueError("singular_vertex must be 0, 1 or 2")
    o1, o2 = [i for i in range(3) if i != s]

    eye = np.eye(3)
    base = triangle_rule(degree)
    pts_all, w_all = [], []

    def ring_corner(t, o):
        return eye[s] + t * (eye[o] - eye[s])

    for k in range(levels):
        t_out, t_in = ratio**k, ratio ** (k + 1)
        a_out, b_out = ring_corner(t_out, o1), ring_corner(t_out, o2)
        a_in, b_in = ring_corner(t_in, o1), ring_corner(t_in, o2)
        for cell in (np.array([a_out, b_out, a_in]), np.array([b_out, b_in, a_in])):
            p, w = _subcell_rule(base, cell)
            pts_all.append(p)
            w_all.append(w)
    t_in = ratio**levels
    inner = np.array([eye[s], ring_corner(t_in, o1), ring_corner(t_in, o2)])
    p, w = _subcell_rule(base, inner)
    pts_all.append(p)
    w_all.append(w)

    return QuadRule(np.vstack(pts_all), np.concatenate(w_all), degree)
