import numpy as np
import pytest

from minresfem.mesh import FacetLabel, make_mesh


def single_triangle_mesh():
    """Reference triangle with all boundary facets labeled Dirichlet."""
    return make_mesh(
        [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
        [(0, 1, 2)],
        {(0, 1): FacetLabel.DIRICHLET, (1, 2): FacetLabel.DIRICHLET,
         (0, 2): FacetLabel.DIRICHLET},
    )


def check_conforming(mesh):
    """Brute-force conformity: facet incidence counts and no hanging vertices."""
    for i in range(mesh.num_edges):
        n_inc = int(np.sum(mesh.facet_tris[i] >= 0))
        if mesh.facet_labels[i] == FacetLabel.INTERIOR:
            assert n_inc == 2, f"interior facet {i} has {n_inc} incident triangles"
        else:
            assert n_inc == 1, f"boundary facet {i} has {n_inc} incident triangles"
    # no vertex may lie strictly inside any edge
    verts = mesh.vertices
    for a, b in mesh.facets:
        pa, pb = verts[a], verts[b]
        d = pb - pa
        length_sq = float(d @ d)
        rel = verts - pa
        t = rel @ d / length_sq
        off = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / np.sqrt(length_sq)
        inside = (off < 1e-12) & (t > 1e-12) & (t < 1 - 1e-12)
        assert not np.any(inside), f"hanging vertex on edge ({a},{b})"


def check_right_isosceles(mesh):
    """Every triangle has angles 45/45/90 with the right angle at the newest vertex."""
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    dots = np.einsum("ij,ij->i", e1, e2)
    scale = np.einsum("ij,ij->i", e1, e1)
    assert np.all(np.abs(dots) <= 1e-14 * scale), "right angle not at newest vertex"
    assert np.allclose(np.einsum("ij,ij->i", e1, e1),
                       np.einsum("ij,ij->i", e2, e2), rtol=1e-13), "legs differ"


def min_angle_deg(mesh):
    """Smallest interior angle over all triangles, in degrees."""
    p = mesh.vertices[mesh.triangles]
    worst = 180.0
    for k in range(3):
        a, b, c = p[:, k], p[:, (k + 1) % 3], p[:, (k + 2) % 3]
        u, v = b - a, c - a
        cosang = np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        worst = min(worst, float(np.degrees(np.arccos(np.clip(cosang, -1, 1))).min()))
    return worst


def interpolate_exact(spaces, exact):
    """Nodal interpolation of an exact (flux, u) pair into the trial space X."""
    from minresfem.spaces import interpolate

    parts = {
        "flux0": interpolate(spaces.X.space("flux0"),
                             lambda e, xy: exact.p(xy[:, 0], xy[:, 1])[..., 0]),
        "flux1": interpolate(spaces.X.space("flux1"),
                             lambda e, xy: exact.p(xy[:, 0], xy[:, 1])[..., 1]),
        "u": interpolate(spaces.X.space("u"), lambda e, xy: exact.u(xy[:, 0], xy[:, 1])),
    }
    return spaces.X.assemble_vector(parts)


def embed_x_into_xhat(spaces, coeffs):
    """Represent an X coefficient vector in the enriched space Xhat exactly."""
    from minresfem.mesh import xy_to_bary
    from minresfem.spaces import interpolate

    parts = spaces.X.split(coeffs)
    out = {}
    for name in ("flux0", "flux1", "u"):
        src, sub = spaces.X.space(name), parts[name]

        def fn(e, xy, src=src, sub=sub):
            vals, _ = src.eval_on_element(sub, e, xy_to_bary(spaces.mesh, e, xy))
            return vals

        out[name] = interpolate(spaces.Xhat.space(name), fn)
    return spaces.Xhat.assemble_vector(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
