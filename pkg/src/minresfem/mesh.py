"""Conforming triangle meshes with newest-vertex-bisection refinement.

Every triangle stores its newest vertex in slot 0, so the refinement edge
is always the edge opposite slot 0.  Meshes are value objects: refinement
returns a new mesh and never renumbers or removes existing vertices.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np


class FacetLabel(IntEnum):
    """Boundary-part tag of a mesh facet (edge)."""

    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


@dataclass
class Mesh:
    """Conforming triangulation with labeled boundary facets.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, newest vertex first, counterclockwise
    generations : (nt,) int array, bisection generation of each triangle
    facets : (nf, 2) int array of all edges as sorted vertex pairs
    facet_labels : (nf,) int array of FacetLabel values
    facet_tris : (nf, 2) int array of incident triangles, -1 padding
    parent : (nt,) int array mapping each triangle to its ancestor in the
        mesh a refinement call started from (None for directly built meshes)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    generations: np.ndarray
    facets: np.ndarray
    facet_labels: np.ndarray
    facet_tris: np.ndarray
    parent: np.ndarray | None = None
    edge_index: dict = field(repr=False, default_factory=dict)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def num_edges(self):
        return self.facets.shape[0]

    @property
    def boundary_facet_ids(self):
        return np.flatnonzero(self.facet_labels != FacetLabel.INTERIOR)

    @property
    def dirichlet_facet_ids(self):
        return np.flatnonzero(self.facet_labels == FacetLabel.DIRICHLET)

    @property
    def neumann_facet_ids(self):
        return np.flatnonzero(self.facet_labels == FacetLabel.NEUMANN)

    def areas(self):
        """Signed triangle areas (positive for valid meshes)."""
        p = self.vertices[self.triangles]
        u, v = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])

    def facet_lengths(self, facet_ids):
        d = self.vertices[self.facets[facet_ids, 1]] - self.vertices[self.facets[facet_ids, 0]]
        return np.hypot(d[:, 0], d[:, 1])


def make_mesh(vertices, triangles, boundary_labels, generations=None, parent=None):
    """Build a validated Mesh from raw arrays.

    boundary_labels maps each boundary edge, as a sorted vertex-id pair,
    to a FacetLabel (DIRICHLET or NEUMANN).  Interior edges are derived
    from the triangles and must not appear in the map.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    nt = triangles.shape[0]
    if generations is None:
        generations = np.zeros(nt, dtype=np.int64)
    else:
        generations = np.asarray(generations, dtype=np.int64)

    if np.any(triangles[:, 0] == triangles[:, 1]) or np.any(triangles[:, 1] == triangles[:, 2]) \
            or np.any(triangles[:, 0] == triangles[:, 2]):
        raise ValueError("triangle with repeated vertices")

    p = vertices[triangles]
    u, v = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    areas = 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    if np.any(areas <= 0):
        bad = np.flatnonzero(areas <= 0)
        raise ValueError(f"non-positive signed area for triangles {bad.tolist()}")

    edge_tris = defaultdict(list)
    for t in range(nt):
        a, b, c = triangles[t]
        for e in ((a, b), (b, c), (a, c)):
            edge_tris[(min(e), max(e))].append(t)

    facets = np.array(sorted(edge_tris.keys()), dtype=np.int64)
    edge_index = {tuple(e): i for i, e in enumerate(facets)}
    facet_tris = np.full((len(facets), 2), -1, dtype=np.int64)
    facet_labels = np.zeros(len(facets), dtype=np.int64)

    labels = {(min(k), max(k)): FacetLabel(v) for k, v in boundary_labels.items()}
    for key, tris in edge_tris.items():
        i = edge_index[key]
        if len(tris) > 2:
            raise ValueError(f"edge {key} shared by {len(tris)} triangles")
        facet_tris[i, : len(tris)] = tris
        if len(tris) == 1:
            if key not in labels:
                raise ValueError(f"boundary edge {key} has no DIRICHLET/NEUMANN label")
            facet_labels[i] = labels.pop(key)
        elif key in labels:
            raise ValueError(f"interior edge {key} carries a boundary label")
    if labels:
        raise ValueError(f"labels for non-edges: {sorted(labels)}")

    for arr in (vertices, triangles, generations, facets, facet_labels, facet_tris):
        arr.setflags(write=False)
    if parent is not None:
        parent = np.asarray(parent, dtype=np.int64)
        parent.setflags(write=False)
    return Mesh(vertices, triangles, generations, facets, facet_labels,
                facet_tris, parent, edge_index)


def initial_mesh():
    """The 8-triangle start mesh of the rectangle (-1,1) x (0,1).

    Each unit square is cut along both diagonals; the square centers are
    the newest vertices of their four triangles.  The bottom-left side
    [-1,0] x {0} is the Neumann part, the rest of the boundary is Dirichlet.
    """
    vertices = [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0), (1.0, 1.0),
                (0.0, 1.0), (-1.0, 1.0), (-0.5, 0.5), (0.5, 0.5)]
    triangles = [(6, 0, 1), (6, 1, 4), (6, 4, 5), (6, 5, 0),
                 (7, 1, 2), (7, 2, 3), (7, 3, 4), (7, 4, 1)]
    labels = {
        (0, 1): FacetLabel.NEUMANN,
        (1, 2): FacetLabel.DIRICHLET,
        (2, 3): FacetLabel.DIRICHLET,
        (3, 4): FacetLabel.DIRICHLET,
        (4, 5): FacetLabel.DIRICHLET,
        (0, 5): FacetLabel.DIRICHLET,
    }
    return make_mesh(vertices, triangles, labels)


def bisect(mesh, marked):
    """Bisect every marked triangle at least once, with conforming closure.

    The edge opposite the newest vertex is split at its midpoint, which
    becomes the newest vertex of both children.  Incompatible neighbors
    are refined recursively so the result has no hanging vertices.
    Returns a new mesh whose ``parent`` array maps each triangle to the
    triangle of ``mesh`` it descends from.
    """
    marked = set(int(t) for t in marked)
    if not marked:
        return mesh
    nt = mesh.num_triangles
    if any(t < 0 or t >= nt for t in marked):
        raise ValueError("marked set contains invalid triangle ids")

    verts = [tuple(v) for v in mesh.vertices]
    tris = [tuple(t) for t in mesh.triangles]
    gens = list(mesh.generations)
    parent = list(range(nt))
    alive = [True] * nt

    blabel = {}
    for i in mesh.boundary_facet_ids:
        a, b = mesh.facets[i]
        blabel[(int(a), int(b))] = FacetLabel(mesh.facet_labels[i])

    edge_tris = defaultdict(set)

    def tri_edges(t):
        a, b, c = tris[t]
        return ((min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c)))

    for t in range(nt):
        for e in tri_edges(t):
            edge_tris[e].add(t)

    def refinement_edge(t):
        _, b, c = tris[t]
        return (min(b, c), max(b, c))

    midpoints = {}

    def midpoint_vertex(e):
        # keyed by sorted endpoint ids, never by coordinate comparison
        if e not in midpoints:
            (xa, ya), (xb, yb) = verts[e[0]], verts[e[1]]
            verts.append(((xa + xb) / 2.0, (ya + yb) / 2.0))
            m = len(verts) - 1
            midpoints[e] = m
            if e in blabel:
                lab = blabel.pop(e)
                a, b = e
                blabel[(min(a, m), max(a, m))] = lab
                blabel[(min(b, m), max(b, m))] = lab
        return midpoints[e]

    def split(t, m):
        v0, v1, v2 = tris[t]
        for e in tri_edges(t):
            edge_tris[e].discard(t)
        alive[t] = False
        for child in ((m, v0, v1), (m, v2, v0)):
            tris.append(child)
            gens.append(gens[t] + 1)
            parent.append(parent[t])
            c = len(tris) - 1
            alive.append(True)
            for e in tri_edges(c):
                edge_tris[e].add(c)

    def ensure_bisected(t0):
        stack = [t0]
        while stack:
            t = stack[-1]
            if not alive[t]:
                stack.pop()
                continue
            e = refinement_edge(t)
            others = edge_tris[e] - {t}
            nb = next(iter(others)) if others else None
            if nb is not None and refinement_edge(nb) != e:
                stack.append(nb)
                continue
            m = midpoint_vertex(e)
            split(t, m)
            if nb is not None:
                split(nb, m)
            stack.pop()

    for t in sorted(marked):
        if alive[t]:
            ensure_bisected(t)

    keep = [t for t in range(len(tris)) if alive[t]]
    return make_mesh(
        np.array(verts),
        np.array([tris[t] for t in keep]),
        blabel,
        generations=[gens[t] for t in keep],
        parent=[parent[t] for t in keep],
    )


def refine_uniform(mesh):
    """Bisect every triangle twice (two generations per element)."""
    m1 = bisect(mesh, range(mesh.num_triangles))
    m2 = bisect(m1, range(m1.num_triangles))
    composed = m1.parent[m2.parent]
    composed.setflags(write=False)
    return Mesh(m2.vertices, m2.triangles, m2.generations, m2.facets,
                m2.facet_labels, m2.facet_tris, composed, m2.edge_index)


@dataclass
class Geometry:
    """Affine maps of all triangles: x = v0 + J @ (bary[1], bary[2])."""

    jac: np.ndarray      # (nt, 2, 2), columns are edge vectors v1-v0, v2-v0
    det: np.ndarray      # (nt,)
    inv: np.ndarray      # (nt, 2, 2) inverse Jacobians


def geometry(mesh):
    p = mesh.vertices[mesh.triangles]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1]
    inv[:, 0, 1] = -jac[:, 0, 1]
    inv[:, 1, 0] = -jac[:, 1, 0]
    inv[:, 1, 1] = jac[:, 0, 0]
    inv /= det[:, None, None]
    return Geometry(jac, det, inv)


def bary_to_xy(mesh, elem, bary):
    """Map barycentric coordinates (n, 3) on one element to physical (n, 2)."""
    bary = np.atleast_2d(bary)
    corners = mesh.vertices[mesh.triangles[elem]]
    return bary @ corners


def xy_to_bary(mesh, elem, xy):
    """Map physical points (n, 2) to barycentric coordinates on one element."""
    xy = np.atleast_2d(xy)
    corners = mesh.vertices[mesh.triangles[elem]]
    jac = np.stack([corners[1] - corners[0], corners[2] - corners[0]], axis=-1)
    ref = np.linalg.solve(jac, (xy - corners[0]).T).T
    return np.column_stack([1.0 - ref[:, 0] - ref[:, 1], ref[:, 0], ref[:, 1]])


def dump(mesh):
    """Plain-text mesh dump: vertices, triangles (newest first), boundary facets."""
    lines = []
    for x, y in mesh.vertices:
        lines.append(f"v {x!r} {y!r}")
    for i, j, k in mesh.triangles:
        lines.append(f"t {i} {j} {k}")
    for f in mesh.boundary_facet_ids:
        i, j = mesh.facets[f]
        lines.append(f"f {i} {j} {FacetLabel(mesh.facet_labels[f]).name}")
    return "\n".join(lines) + "\n"
