import numpy as np
import pytest

from minresfem.mesh import (FacetLabel, bisect, dump, initial_mesh, make_mesh,
                            refine_uniform)

from conftest import check_conforming, check_right_isosceles, min_angle_deg, single_triangle_mesh


def test_initial_mesh_counts():
    m = initial_mesh()
    assert m.num_triangles == 8
    assert m.num_vertices == 8
    # Euler count for a simply connected planar mesh: V + T - 1 = E
    assert m.num_edges == m.num_vertices + m.num_triangles - 1 == 15


def test_initial_mesh_boundary_labels():
    m = initial_mesh()
    assert len(m.neumann_facet_ids) == 1
    assert len(m.dirichlet_facet_ids) == 5
    (f,) = m.neumann_facet_ids
    ends = sorted(map(tuple, m.vertices[m.facets[f]]))
    assert ends == [(-1.0, 0.0), (0.0, 0.0)]


def test_initial_mesh_geometry():
    m = initial_mesh()
    check_conforming(m)
    check_right_isosceles(m)
    # the newest vertex of every triangle is a square center
    centers = {(-0.5, 0.5), (0.5, 0.5)}
    for t in m.triangles:
        assert tuple(m.vertices[t[0]]) in centers
    assert np.allclose(m.areas(), 0.25)


def test_bisect_single_triangle():
    m = single_triangle_mesh()
    m2 = bisect(m, {0})
    assert m2.num_triangles == 2
    assert m2.num_vertices == 4
    assert tuple(m2.vertices[3]) == (0.5, 0.5)  # hypotenuse midpoint
    # both children carry the midpoint as their newest vertex
    assert all(t[0] == 3 for t in m2.triangles)
    assert np.all(m2.generations == 1)
    assert np.all(m2.parent == 0)
    check_conforming(m2)
    check_right_isosceles(m2)


def test_bisect_closure_conforming():
    m = initial_mesh()
    m2 = bisect(m, {3})
    check_conforming(m2)
    check_right_isosceles(m2)
    assert m2.num_triangles > m.num_triangles


def test_bisect_empty_marking_is_identity():
    m = initial_mesh()
    assert bisect(m, set()) is m


def test_bisect_rejects_bad_ids():
    m = initial_mesh()
    with pytest.raises(ValueError):
        bisect(m, {42})


def test_refine_uniform_quarters():
    m = initial_mesh()
    m2 = refine_uniform(m)
    assert m2.num_triangles == 32
    assert np.all(m2.generations == 2)
    assert np.allclose(m2.areas(), 0.0625)
    # parent map covers each coarse triangle exactly four times
    assert sorted(np.bincount(m2.parent).tolist()) == [4] * 8


def test_refine_uniform_preserves_area_and_angles():
    m = refine_uniform(refine_uniform(initial_mesh()))
    assert abs(m.areas().sum() - 2.0) <= 1e-12 * 2.0
    assert abs(min_angle_deg(m) - 45.0) <= 1e-9
    check_conforming(m)
    check_right_isosceles(m)


def test_label_preservation_under_refinement():
    m = initial_mesh()
    for _ in range(3):
        m = bisect(m, {0, m.num_triangles - 1})
        d_len = m.facet_lengths(m.dirichlet_facet_ids).sum()
        n_len = m.facet_lengths(m.neumann_facet_ids).sum()
        assert abs(d_len - 5.0) <= 1e-12 * 5.0
        assert abs(n_len - 1.0) <= 1e-12
        # every Neumann facet midpoint lies on [-1,0] x {0}
        for f in m.neumann_facet_ids:
            mid = m.vertices[m.facets[f]].mean(axis=0)
            assert mid[1] == 0.0 and -1.0 <= mid[0] <= 0.0


def test_bisect_monotone():
    m = initial_mesh()
    m2 = bisect(m, {1})
    assert m2.num_triangles > m.num_triangles
    # existing vertices survive with identical ids and coordinates
    assert np.array_equal(m2.vertices[: m.num_vertices], m.vertices)


def test_random_marking_rounds_stay_conforming():
    rng = np.random.default_rng(7)
    m = initial_mesh()
    for _ in range(10):
        k = rng.integers(1, m.num_triangles + 1)
        marked = rng.choice(m.num_triangles, size=k, replace=False)
        m = bisect(m, marked)
        check_conforming(m)
        check_right_isosceles(m)
        assert abs(min_angle_deg(m) - 45.0) <= 1e-9
    assert abs(m.areas().sum() - 2.0) <= 1e-12 * 2.0


def test_dump_format():
    m = initial_mesh()
    text = dump(m)
    lines = text.strip().split("\n")
    vlines = [l for l in lines if l.startswith("v ")]
    tlines = [l for l in lines if l.startswith("t ")]
    flines = [l for l in lines if l.startswith("f ")]
    assert len(vlines) == 8 and len(tlines) == 8 and len(flines) == 6
    assert sum(l.endswith("NEUMANN") for l in flines) == 1
    # triangle lines carry the newest vertex first
    first = tlines[0].split()
    assert [int(x) for x in first[1:]] == list(m.triangles[0])


def test_make_mesh_validation():
    verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    with pytest.raises(ValueError, match="area"):
        make_mesh(verts, [(0, 2, 1)], {(0, 1): FacetLabel.DIRICHLET,
                                       (1, 2): FacetLabel.DIRICHLET,
                                       (0, 2): FacetLabel.DIRICHLET})
    with pytest.raises(ValueError, match="label"):
        make_mesh(verts, [(0, 1, 2)], {(0, 1): FacetLabel.DIRICHLET})
