import math

import numpy as np
import pytest
import sympy
from scipy.integrate import quad

from minresfem.quadrature import graded_triangle_rule, segment_rule, triangle_rule


def tri_integrate(rule, f):
    x, y = rule.points[:, 1], rule.points[:, 2]
    return float(np.dot(rule.weights, f(x, y)))


def test_triangle_degree0_measure():
    r = triangle_rule(0)
    assert tri_integrate(r, lambda x, y: np.ones_like(x)) == pytest.approx(0.5, abs=1e-15)


def test_triangle_xy_against_symbolic():
    x, y = sympy.symbols("x y")
    exact = float(sympy.integrate(x * y, (y, 0, 1 - x), (x, 0, 1)))
    assert exact == pytest.approx(1 / 24)
    r = triangle_rule(2)
    assert tri_integrate(r, lambda a, b: a * b) == pytest.approx(exact, rel=1e-13)


def test_triangle_degree7_against_symbolic():
    x, y = sympy.symbols("x y")
    exact = float(sympy.integrate(x**3 * y**4, (y, 0, 1 - x), (x, 0, 1)))
    r = triangle_rule(7)
    got = tri_integrate(r, lambda a, b: a**3 * b**4)
    assert got == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("degree", range(9))
def test_triangle_monomial_exactness(degree):
    # reference-triangle monomial integral: a! b! / (a+b+2)!
    r = triangle_rule(degree)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
            got = tri_integrate(r, lambda x, y, a=a, b=b: x**a * y**b)
            assert got == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("degree", range(11))
def test_weights_positive_and_normalized(degree):
    tr, sr = triangle_rule(degree), segment_rule(degree)
    assert np.all(tr.weights > 0) and np.all(sr.weights > 0)
    assert tr.weights.sum() == pytest.approx(0.5, rel=1e-14)
    assert sr.weights.sum() == pytest.approx(1.0, rel=1e-14)


def test_segment_linear():
    r = segment_rule(1)
    assert float(r.weights @ r.points) == pytest.approx(0.5, rel=1e-15)


def test_segment_two_point_gauss_cubic():
    r = segment_rule(3)
    assert len(r.points) == 2
    x = sympy.symbols("x")
    exact = float(sympy.integrate(x**3, (x, 0, 1)))
    assert float(r.weights @ r.points**3) == pytest.approx(exact, rel=1e-14)


def test_graded_matches_plain_rule_on_smooth_integrand():
    plain = triangle_rule(5)
    graded = graded_triangle_rule(5, 0, levels=6, ratio=0.5)
    f = lambda x, y: (x + 2 * y) ** 3 + x * y
    assert tri_integrate(graded, f) == pytest.approx(tri_integrate(plain, f), abs=1e-12)


def test_graded_inverse_sqrt_singularity():
    # oracle: reduce int_T r^(-1/2) over the reference triangle (singularity
    # at the origin vertex) to one adaptive 1D integral in the angle
    oracle, err = quad(lambda t: (2 / 3) * (np.cos(t) + np.sin(t)) ** (-1.5), 0, np.pi / 2)
    assert err < 1e-10
    r = graded_triangle_rule(16, 0, levels=20, ratio=0.5)
    got = tri_integrate(r, lambda x, y: 1.0 / np.sqrt(np.hypot(x, y)))
    assert got == pytest.approx(oracle, rel=1e-8)


def test_graded_structure():
    base = triangle_rule(3)
    r = graded_triangle_rule(3, 1, levels=20, ratio=0.5)
    assert len(r.points) >= 20 * len(base.points)
    assert np.all(r.weights > 0)
    assert r.weights.sum() == pytest.approx(0.5, rel=1e-12)


def test_graded_singular_vertex_position():
    # cells must accumulate toward the requested vertex
    for s, corner in [(0, (0.0, 0.0)), (1, (1.0, 0.0)), (2, (0.0, 1.0))]:
        r = graded_triangle_rule(2, s, levels=10, ratio=0.5)
        xy = r.points[:, 1:]
        dist = np.hypot(xy[:, 0] - corner[0], xy[:, 1] - corner[1])
        assert dist.min() < 1e-3


def test_affine_map_consistency():
    # integrate x^2 y over a mapped triangle and compare with symbolic value
    v0, v1, v2 = (1.0, 1.0), (3.0, 2.0), (1.5, 4.0)
    u, w = sympy.symbols("u w")
    xs = v0[0] + u * (v1[0] - v0[0]) + w * (v2[0] - v0[0])
    ys = v0[1] + u * (v1[1] - v0[1]) + w * (v2[1] - v0[1])
    jac = (v1[0] - v0[0]) * (v2[1] - v0[1]) - (v2[0] - v0[0]) * (v1[1] - v0[1])
    exact = float(sympy.integrate(xs**2 * ys * jac, (w, 0, 1 - u), (u, 0, 1)))

    r = triangle_rule(3)
    corners = np.array([v0, v1, v2])
    pts = r.points @ corners
    got = float(np.dot(r.weights * jac, pts[:, 0] ** 2 * pts[:, 1]))
    assert got == pytest.approx(exact, rel=1e-13)


def test_rule_argument_validation():
    with pytest.raises(ValueError):
        triangle_rule(-1)
    with pytest.raises(ValueError):
        segment_rule(-2)
    with pytest.raises(ValueError):
        graded_triangle_rule(2, 0, levels=0, ratio=0.5)
    with pytest.raises(ValueError):
        graded_triangle_rule(2, 0, levels=3, ratio=1.5)
    with pytest.raises(ValueError):
        graded_triangle_rule(2, 4, levels=3, ratio=0.5)
