import numpy as np
import pytest
from scipy.integrate import quad

from minresfem.forms import ProblemData, assemble_g, assemble_load, assemble_x_gram
from minresfem.mesh import initial_mesh, refine_uniform
from minresfem.problems import polynomial_problem, singular_problem
from minresfem.quadrature import triangle_rule
from minresfem.spaces import FeSpace, ProductSpace, build_space_triple

from conftest import embed_x_into_xhat, interpolate_exact, single_triangle_mesh


def test_gradient_entry_on_reference_triangle():
    # trial hat function 1-x-y against the constant test field (1, 0):
    # -int grad(1-x-y) . (1,0) = +1/2
    mesh = single_triangle_mesh()
    spaces = build_space_triple(mesh, 1)
    C = assemble_g(spaces.X, spaces.Y)
    row = spaces.Y.offset("v1_0")  # single dg0 test dof of the element
    col = spaces.X.offset("u") + spaces.X.space("u").vertex_dof(0)
    assert C[row, col] == pytest.approx(0.5, rel=1e-14)


def test_facet_mass_block_matches_symbolic():
    # P1 trace x P1 facet space on the unit facet (0,0)-(1,0): the nodal
    # mass matrix [[1/3, 1/6], [1/6, 1/3]]
    mesh = single_triangle_mesh()
    spaces = build_space_triple(mesh, 1)
    C = assemble_g(spaces.X, spaces.Y)
    v3 = spaces.Y.space("v3")
    edge = mesh.edge_index[(0, 1)]
    pos = int(np.flatnonzero(v3.facet_ids == edge)[0])
    rows = v3.facet_dofs[pos] + spaces.Y.offset("v3")
    u_sp = spaces.X.space("u")
    cols = np.array([u_sp.vertex_dof(0), u_sp.vertex_dof(1)]) + spaces.X.offset("u")
    block = C[np.ix_(rows, cols)].toarray()
    assert np.allclose(block, [[1 / 3, 1 / 6], [1 / 6, 1 / 3]], atol=1e-14)


def test_zero_trial_vector_maps_to_zero():
    spaces = build_space_triple(initial_mesh(), 2)
    C = assemble_g(spaces.X, spaces.Y)
    assert np.all(C @ np.zeros(spaces.X.ndof) == 0.0)


def test_mesh_mismatch_rejected():
    s1 = build_space_triple(initial_mesh(), 1)
    s2 = build_space_triple(initial_mesh(), 1)
    with pytest.raises(ValueError):
        assemble_g(s1.X, s2.Y)


def test_gram_diagonal_entry_on_reference_triangle():
    # P1 vertex function at (0,0): mass 1/12 plus stiffness 1
    mesh = single_triangle_mesh()
    spaces = build_space_triple(mesh, 1)
    N = assemble_x_gram(spaces.X)
    d = spaces.X.offset("u") + spaces.X.space("u").vertex_dof(0)
    assert N[d, d] == pytest.approx(13 / 12, rel=1e-14)


def test_gram_symmetric_and_positive_definite():
    spaces = build_space_triple(initial_mesh(), 1)
    N = assemble_x_gram(spaces.X)
    assert (N - N.T).nnz == 0
    eigs = np.linalg.eigvalsh(N.toarray())
    assert eigs[0] > 0


def test_gram_quadratic_form_of_constant_is_domain_area():
    spaces = build_space_triple(initial_mesh(), 1)
    N = assemble_x_gram(spaces.X)
    c = np.zeros(spaces.X.ndof)
    c[spaces.X.slice("u")] = 1.0  # P1 partition of unity represents 1 exactly
    assert c @ (N @ c) == pytest.approx(2.0, rel=1e-12)


def test_gram_quadratic_form_against_elementwise_quadrature(rng):
    # independent oracle: evaluate ||q||^2 + ||w||^2_H1 element by element
    mesh = initial_mesh()
    spaces = build_space_triple(mesh, 2)
    N = assemble_x_gram(spaces.X)
    c = rng.standard_normal(spaces.X.ndof)
    parts = spaces.X.split(c)
    rule = triangle_rule(10)
    total = 0.0
    from minresfem.mesh import geometry

    geo = geometry(mesh)
    for e in range(mesh.num_triangles):
        dens = np.zeros(len(rule.weights))
        for name in ("flux0", "flux1"):
            vals, _ = spaces.X.space(name).eval_on_element(parts[name], e, rule.points)
            dens += vals**2
        vals, grads = spaces.X.space("u").eval_on_element(parts["u"], e, rule.points)
        dens += vals**2 + np.sum(grads**2, axis=1)
        total += geo.det[e] * float(dens @ rule.weights)
    assert c @ (N @ c) == pytest.approx(total, rel=1e-12)


def test_load_constant_dirichlet_datum_constant_test():
    # one Dirichlet facet of unit length, constant facet test: entry 1
    mesh = single_triangle_mesh()
    y = ProductSpace([
        ("v1_0", FeSpace(mesh, "dg", 0)),
        ("v1_1", FeSpace(mesh, "dg", 0)),
        ("v2", FeSpace(mesh, "cg", 1, zero_on_dirichlet=True)),
        ("v3", FeSpace(mesh, "facet", 0)),
    ])
    rhs = assemble_load(y, ProblemData(g=None, h_D=lambda x, yy: np.ones_like(x), h_N=None))
    v3 = y.space("v3")
    pos = int(np.flatnonzero(v3.facet_ids == mesh.edge_index[(0, 1)])[0])
    assert rhs[y.offset("v3") + v3.facet_dofs[pos, 0]] == pytest.approx(1.0, rel=1e-14)


def test_singular_problem_load_structure():
    # volume load and Neumann flux vanish, so all v1 and v2 entries are zero
    spaces = build_space_triple(initial_mesh(), 1)
    data = singular_problem()
    assert data.g is None and data.h_N is None
    rhs = assemble_load(spaces.Y, data)
    assert np.all(rhs[spaces.Y.slice("v1_0")] == 0.0)
    assert np.all(rhs[spaces.Y.slice("v1_1")] == 0.0)
    assert np.all(rhs[spaces.Y.slice("v2")] == 0.0)
    assert np.any(rhs[spaces.Y.slice("v3")] != 0.0)


def test_dirichlet_load_against_adaptive_quadrature():
    # entries of the facet on x = -1 vs an adaptive 1D oracle
    mesh = initial_mesh()
    spaces = build_space_triple(mesh, 1)
    data = singular_problem()
    rhs = assemble_load(spaces.Y, data)
    v3 = spaces.Y.space("v3")
    pos = int(np.flatnonzero(v3.facet_ids == mesh.edge_index[(0, 5)])[0])
    got = rhs[spaces.Y.offset("v3") + v3.facet_dofs[pos]]

    def h_d(t):  # trace of the exact solution along (-1, t), t in [0, 1]
        r = np.hypot(1.0, t)
        return np.sqrt((r + 1.0) / 2.0)

    for k, shape in enumerate((lambda t: 1 - t, lambda t: t)):
        oracle, err = quad(lambda t: h_d(t) * shape(t), 0.0, 1.0, epsabs=1e-13)
        assert err < 1e-12
        assert got[k] == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_consistency_of_form_and_load(p):
    # for a representable exact pair the discrete residual vanishes
    for mesh in (initial_mesh(), refine_uniform(initial_mesh())):
        spaces = build_space_triple(mesh, p)
        data = polynomial_problem(p)
        C = assemble_g(spaces.X, spaces.Y)
        f = assemble_load(spaces.Y, data)
        c_exact = interpolate_exact(spaces, data.exact)
        res = f - C @ c_exact
        assert np.max(np.abs(res)) <= 1e-10 * max(1.0, np.max(np.abs(f)))


def test_embedding_into_enriched_space_is_consistent(rng):
    # (G w)(v) must agree whether w is expressed in X or embedded into Xhat
    mesh = initial_mesh()
    spaces = build_space_triple(mesh, 2)
    B = assemble_g(spaces.Xhat, spaces.Y)
    C = assemble_g(spaces.X, spaces.Y)
    c = rng.standard_normal(spaces.X.ndof)
    c_hat = embed_x_into_xhat(spaces, c)
    lhs, rhs = B @ c_hat, C @ c
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))
