"""Finite element spaces: continuous/discontinuous Lagrange and facet spaces.

Nodal Lagrange bases with equispaced nodes throughout; global continuity
is realized by numbering degrees of freedom against mesh entities, with
edge dofs oriented from the lower to the higher vertex id.  The facet
space carries an independent nodal basis per Dirichlet facet.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import FacetLabel, xy_to_bary


class TriangleBasis:
    """Nodal Lagrange basis of given degree on the reference triangle."""

    def __init__(self, degree):
        self.degree = degree
        if degree == 0:
            lattice = [(0, 0, 0)]
            self.nodes = np.array([[1 / 3, 1 / 3, 1 / 3]])
            self.node_tags = [("interior", 0)]
        else:
            lattice = []
            tags = []
            q = degree
            for i1 in range(q + 1):
                for i2 in range(q + 1 - i1):
                    i0 = q - i1 - i2
                    lattice.append((i0, i1, i2))
                    if i1 == q:
                        tags.append(("vertex", 1))
                    elif i2 == q:
                        tags.append(("vertex", 2))
                    elif i0 == q:
                        tags.append(("vertex", 0))
                    elif i2 == 0:
                        tags.append(("edge", (0, 1), i1))
                    elif i0 == 0:
                        tags.append(("edge", (1, 2), i2))
                    elif i1 == 0:
                        tags.append(("edge", (0, 2), i2))
                    else:
                        tags.append(("interior", len([t for t in tags if t[0] == "interior"])))
            self.nodes = np.array(lattice, dtype=float) / degree
            self.node_tags = tags
        self.num_nodes = len(self.nodes)
        q = max(degree, 0)
        self.exponents = [(a, b) for a in range(q + 1) for b in range(q + 1 - a)]
        vand = self._monomials(self.nodes)
        self.coeffs = np.linalg.inv(vand)

    def _monomials(self, bary):
        x, y = bary[:, 1], bary[:, 2]
        return np.column_stack([x**a * y**b for a, b in self.exponents])

    def tabulate(self, bary):
        """Values and reference gradients at barycentric points.

        Returns (vals, grads) of shapes (n, nloc) and (n, nloc, 2).
        """
        bary = np.atleast_2d(bary)
        x, y = bary[:, 1], bary[:, 2]
        vals = self._monomials(bary) @ self.coeffs
        dx = np.column_stack([a * x ** max(a - 1, 0) * y**b for a, b in self.exponents])
        dy = np.column_stack([b * x**a * y ** max(b - 1, 0) for a, b in self.exponents])
        grads = np.stack([dx @ self.coeffs, dy @ self.coeffs], axis=-1)
        return vals, grads


class SegmentBasis:
    """Nodal Lagrange basis of given degree on [0, 1]."""

    def __init__(self, degree):
        self.degree = degree
        self.nodes = np.array([0.5]) if degree == 0 else np.linspace(0.0, 1.0, degree + 1)
        self.num_nodes = len(self.nodes)
        vand = np.vander(self.nodes, degree + 1, increasing=True)
        self.coeffs = np.linalg.inv(vand)

    def tabulate(self, t):
        t = np.atleast_1d(t)
        return np.vander(t, self.degree + 1, increasing=True) @ self.coeffs


@lru_cache(maxsize=None)
def triangle_basis(degree):
    return TriangleBasis(degree)


@lru_cache(maxsize=None)
def segment_basis(degree):
    return SegmentBasis(degree)


class FeSpace:
    """One scalar finite element space on a mesh.

    kind is "cg" (continuous), "dg" (discontinuous) or "facet"
    (piecewise polynomials on the Dirichlet facets, discontinuous across
    facets).  With zero_on_dirichlet=True a cg space is constrained to
    vanish on the closed Dirichlet boundary: all dofs sitting on the
    closure of a Dirichlet facet are removed from the global numbering
    and appear as -1 in the element dof map.
    """

    def __init__(self, mesh, kind, degree, zero_on_dirichlet=False):
        if kind not in ("cg", "dg", "facet"):
            raise ValueError(f"unknown space kind {kind!r}")
        if kind == "cg" and degree < 1:
            raise ValueError("continuous spaces need degree >= 1")
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        if zero_on_dirichlet and kind != "cg":
            raise ValueError("zero-trace constraint applies to cg spaces only")
        self.mesh = mesh
        self.kind = kind
        self.degree = degree
        self.zero_on_dirichlet = zero_on_dirichlet

        if kind == "facet":
            self.basis = segment_basis(degree)
            self.facet_ids = np.asarray(mesh.dirichlet_facet_ids)
            n = degree + 1
            self.facet_dofs = np.arange(len(self.facet_ids) * n, dtype=np.int64).reshape(-1, n)
            self.ndof = self.facet_dofs.size
            return

        self.basis = triangle_basis(degree)
        nt = mesh.num_triangles
        nloc = self.basis.num_nodes
        if kind == "dg":
            self.elem_dofs = np.arange(nt * nloc, dtype=np.int64).reshape(nt, nloc)
            self.ndof = nt * nloc
            return

        constrained_vertices = set()
        constrained_edges = set()
        if zero_on_dirichlet:
            for f in mesh.dirichlet_facet_ids:
                a, b = mesh.facets[f]
                constrained_vertices.update((int(a), int(b)))
                constrained_edges.add(int(f))

        q = degree
        numbering = {}
        self._vertex_dof = {}
        elem_dofs = np.full((nt, nloc), -1, dtype=np.int64)

        def assign(key):
            if key not in numbering:
                numbering[key] = len(numbering)
            return numbering[key]

        for t in range(nt):
            tri = mesh.triangles[t]
            for loc, tag in enumerate(self.basis.node_tags):
                if tag[0] == "vertex":
                    gv = int(tri[tag[1]])
                    if gv in constrained_vertices:
                        continue
                    elem_dofs[t, loc] = assign(("v", gv))
                    self._vertex_dof[gv] = elem_dofs[t, loc]
                elif tag[0] == "edge":
                    (la, lb), s = tag[1], tag[2]
                    ga, gb = int(tri[la]), int(tri[lb])
                    edge = mesh.edge_index[(min(ga, gb), max(ga, gb))]
                    if edge in constrained_edges:
                        continue
                    k = s - 1 if ga < gb else q - 1 - s
                    elem_dofs[t, loc] = assign(("e", edge, k))
                else:
                    elem_dofs[t, loc] = assign(("i", t, tag[1]))
        self.elem_dofs = elem_dofs
        self.ndof = len(numbering)

    def vertex_dof(self, vertex):
        """Global dof of a vertex node (cg only); -1 if constrained."""
        if self.kind != "cg":
            raise ValueError("vertex dofs exist for cg spaces only")
        return self._vertex_dof.get(int(vertex), -1)

    def local_coeffs(self, coeffs, elems=None):
        """Per-element coefficient table with constrained dofs set to zero."""
        dofs = self.elem_dofs if elems is None else self.elem_dofs[elems]
        c = np.asarray(coeffs)[dofs]  # -1 wraps around but is masked out next
        return np.where(dofs >= 0, c, 0.0)

    def eval_on_element(self, coeffs, elem, bary):
        """Function values and physical gradients at barycentric points of one element."""
        if self.kind == "facet":
            raise ValueError("facet spaces are evaluated with eval_on_facet")
        vals, grads = self.basis.tabulate(bary)
        c = self.local_coeffs(coeffs, np.array([elem]))[0]
        corners = self.mesh.vertices[self.mesh.triangles[elem]]
        jac = np.stack([corners[1] - corners[0], corners[2] - corners[0]], axis=-1)
        gphys = np.einsum("plk,kd->pld", grads, np.linalg.inv(jac))
        return vals @ c, np.einsum("pld,l->pd", gphys, c)

    def eval_on_facet(self, coeffs, facet_pos, t):
        """Facet-space values at parameters t in [0,1] of one Dirichlet facet."""
        if self.kind != "facet":
            raise ValueError("eval_on_facet applies to facet spaces only")
        vals = self.basis.tabulate(t)
        return vals @ np.asarray(coeffs)[self.facet_dofs[facet_pos]]


def evaluate(space, coeffs, element, point):
    """Value and physical gradient of an FE function at one barycentric point.

    Raises IndexError for an element id outside the mesh.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if len(coeffs) != space.ndof:
        raise ValueError(f"expected {space.ndof} coefficients, got {len(coeffs)}")
    if not 0 <= element < space.mesh.num_triangles:
        raise IndexError(f"element {element} out of range")
    vals, grad = space.eval_on_element(coeffs, element, np.asarray(point, dtype=float))
    return float(vals[0]), grad[0]


def interpolate(space, fn):
    """Nodal interpolation of fn(elem, xy_points) -> values into a cg/dg space."""
    from .mesh import bary_to_xy

    coeffs = np.zeros(space.ndof)
    for t in range(space.mesh.num_triangles):
        dofs = space.elem_dofs[t]
        xy = bary_to_xy(space.mesh, t, space.basis.nodes)
        vals = np.asarray(fn(t, xy), dtype=float)
        keep = dofs >= 0
        coeffs[dofs[keep]] = vals[keep]
    return coeffs


class ProductSpace:
    """Ordered product of scalar spaces on one mesh, with global dof offsets."""

    def __init__(self, components, family_p=None):
        self.components = list(components)
        mesh = self.components[0][1].mesh
        for _, sp in self.components:
            if sp.mesh is not mesh:
                raise ValueError("product components must share one mesh")
        self.mesh = mesh
        self.family_p = family_p
        self._offsets = {}
        off = 0
        for name, sp in self.components:
            if name in self._offsets:
                raise ValueError(f"duplicate component name {name!r}")
            self._offsets[name] = off
            off += sp.ndof
        self.ndof = off

    @property
    def names(self):
        return [name for name, _ in self.components]

    def space(self, name):
        for n, sp in self.components:
            if n == name:
                return sp
        raise KeyError(name)

    def offset(self, name):
        return self._offsets[name]

    def slice(self, name):
        off = self._offsets[name]
        return slice(off, off + self.space(name).ndof)

    def split(self, vec):
        """Slice a global coefficient vector into per-component vectors."""
        vec = np.asarray(vec)
        return {name: vec[self.slice(name)] for name in self.names}

    def assemble_vector(self, parts):
        vec = np.zeros(self.ndof)
        for name, sub in parts.items():
            vec[self.slice(name)] = sub
        return vec


@dataclass
class SpaceTriple:
    """Trial space X, test space Y and enriched space Xhat for one mesh."""

    mesh: object
    p: int
    X: ProductSpace
    Y: ProductSpace
    Xhat: ProductSpace


def build_space_triple(mesh, p):
    """Spaces of the first-order mild-weak discretization at degree p >= 1.

    X   = (dg p-1)^2 x cg p                      trial: flux pair and potential
    Y   = (dg p-1)^2 x (cg p+1, zero trace on Dirichlet part) x (facet p)
    Xhat= (dg p)^2 x cg p+2                      enriched error space
    """
    if p < 1:
        raise ValueError("the mild-weak discretization requires degree p >= 1")
    dg_pm1 = FeSpace(mesh, "dg", p - 1)
    cg_p = FeSpace(mesh, "cg", p)
    cg_pp1_0 = FeSpace(mesh, "cg", p + 1, zero_on_dirichlet=True)
    facet_p = FeSpace(mesh, "facet", p)
    dg_p = FeSpace(mesh, "dg", p)
    cg_pp2 = FeSpace(mesh, "cg", p + 2)

    X = ProductSpace([("flux0", dg_pm1), ("flux1", dg_pm1), ("u", cg_p)], family_p=p)
    Y = ProductSpace(
        [("v1_0", dg_pm1), ("v1_1", dg_pm1), ("v2", cg_pp1_0), ("v3", facet_p)],
        family_p=p,
    )
    Xhat = ProductSpace([("flux0", dg_p), ("flux1", dg_p), ("u", cg_pp2)], family_p=p)
    return SpaceTriple(mesh=mesh, p=p, X=X, Y=Y, Xhat=Xhat)
