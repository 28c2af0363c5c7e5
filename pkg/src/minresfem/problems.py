"""Manufactured problems and true-error computation.

Two families: the singular benchmark with solution r^(1/2) sin(theta/2)
on the upper half plane, whose data has zero volume load and zero
Neumann flux, and polynomial problems (x+y)^k whose solution pair lies
in the trial space of degree k on every mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import ProblemData
from .mesh import geometry
from .quadrature import graded_triangle_rule, triangle_rule

#: graded-rule parameters used for integrands with a vertex singularity
GRADED_LEVELS = 20
GRADED_RATIO = 0.5


@dataclass
class ExactSolution:
    """Closed-form solution with flux p = grad u."""

    u: object
    grad_u: object
    p: object
    regularity: str = ""
    singular_at: tuple | None = None


def singular_problem():
    """Dirichlet/Neumann benchmark with u = r^(1/2) sin(theta/2), theta in [0, pi].

    The volume load and the Neumann flux vanish; the Dirichlet trace is
    the restriction of u, identically zero on the bottom-right side.
    """

    def u(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        # r^(1/2) sin(theta/2) = sqrt((r - x)/2) for y >= 0, exact on the positive axis
        return np.sqrt(np.maximum(r - x, 0.0) / 2.0)

    def grad_u(x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        scale = 1.0 / (2.0 * np.sqrt(2.0) * r)
        gx = -np.sqrt(np.maximum(r - x, 0.0)) * scale
        gy = np.sqrt(np.maximum(r + x, 0.0)) * scale
        return np.stack([gx, gy], axis=-1)

    exact = ExactSolution(u=u, grad_u=grad_u, p=grad_u,
                          regularity="H^(3/2-eps), gradient blows up at the origin",
                          singular_at=(0.0, 0.0))
    return ProblemData(g=None, h_D=u, h_N=None, exact=exact)


def polynomial_problem(p):
    """Manufactured solution u = (x+y)^p with flux of degree p-1.

    Both solution components are representable in the degree-p trial
    space on any mesh, so the discrete residual minimum is zero.
    """
    if p < 1:
        raise ValueError("polynomial degree must be >= 1")
    k = int(p)

    def u(x, y):
        return (np.asarray(x, dtype=float) + np.asarray(y, dtype=float)) ** k

    def grad_u(x, y):
        s = k * (np.asarray(x, dtype=float) + np.asarray(y, dtype=float)) ** (k - 1)
        return np.stack([s, s], axis=-1)

    def g(x, y):
        # -laplace u = -2 k (k-1) (x+y)^(k-2)
        base = np.asarray(x, dtype=float) + np.asarray(y, dtype=float)
        if k < 2:
            return np.zeros_like(base)
        return -2.0 * k * (k - 1) * base ** (k - 2)

    def h_N(x, y):
        # outward normal on the Neumann side [-1,0] x {0} is (0, -1)
        return -grad_u(x, y)[..., 1]

    exact = ExactSolution(u=u, grad_u=grad_u, p=grad_u, regularity="polynomial")
    return ProblemData(g=g, h_D=u, h_N=h_N, exact=exact)


def _singular_elements(mesh, exact):
    """Ids and local singular-vertex indices of elements touching the singular point."""
    if exact.singular_at is None:
        return {}
    sx, sy = exact.singular_at
    at = np.flatnonzero((mesh.vertices[:, 0] == sx) & (mesh.vertices[:, 1] == sy))
    if len(at) == 0:
        return {}
    v = at[0]
    out = {}
    for t in np.flatnonzero(np.any(mesh.triangles == v, axis=1)):
        out[int(t)] = int(np.flatnonzero(mesh.triangles[t] == v)[0])
    return out


def _error_density(spaces, parts, exact, elems, rule, geo):
    """Pointwise squared error of (flux, u) vs the exact pair on given elements."""
    mesh = spaces.mesh
    corners = mesh.vertices[mesh.triangles[elems]]
    xy = np.einsum("pk,ekd->epd", rule.points, corners)
    x, y = xy[..., 0], xy[..., 1]

    flux_sp = spaces.X.space("flux0")
    u_sp = spaces.X.space("u")
    vflux, _ = flux_sp.basis.tabulate(rule.points)
    vu, gu = u_sp.basis.tabulate(rule.points)

    pex = exact.p(x, y)
    dens = np.zeros(x.shape)
    for comp, name in enumerate(("flux0", "flux1")):
        c = spaces.X.space(name).local_coeffs(parts[name], elems)
        dens += (np.einsum("el,pl->ep", c, vflux) - pex[..., comp]) ** 2
    cu = u_sp.local_coeffs(parts["u"], elems)
    dens += (np.einsum("el,pl->ep", cu, vu) - exact.u(x, y)) ** 2
    gph = np.einsum("el,plk,ekd->epd", cu, gu, geo.inv[elems])
    dens += np.sum((gph - exact.grad_u(x, y)) ** 2, axis=-1)
    return dens


def true_error(result, exact, spaces, mesh):
    """Trial-norm distance of the solved pair from the exact solution."""
    return x_norm_error(result.u, exact, spaces, mesh)


def x_norm_error(u_coeffs, exact, spaces, mesh):
    """Trial-norm distance of a coefficient vector in X from the exact pair.

    Uses geometrically graded quadrature on elements whose closure
    contains the singular point and a standard high-order rule elsewhere.
    """
    if mesh is not spaces.mesh:
        raise ValueError("mesh does not match the space triple")
    parts = spaces.X.split(u_coeffs)
    geo = geometry(mesh)
    degree = 2 * spaces.p + 16
    singular = _singular_elements(mesh, exact)
    err_sq = 0.0

    regular = np.array([t for t in range(mesh.num_triangles) if t not in singular],
                       dtype=np.int64)
    rule = triangle_rule(degree)
    for lo in range(0, len(regular), 8192):
        idx = regular[lo:lo + 8192]
        dens = _error_density(spaces, parts, exact, idx, rule, geo)
        err_sq += float(np.sum(geo.det[idx] * (dens @ rule.weights)))

    for t, local_vertex in singular.items():
        grule = graded_triangle_rule(degree, local_vertex, GRADED_LEVELS, GRADED_RATIO)
        dens = _error_density(spaces, parts, exact, np.array([t]), grule, geo)
        err_sq += float(geo.det[t] * (dens[0] @ grule.weights))

    return float(np.sqrt(max(err_sq, 0.0)))
