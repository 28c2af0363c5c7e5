"""Computable stability diagnostics and a best-approximation oracle.

The practical inf-sup number beta measures, over the trial space, the
discretized dual norm of the form against the test space, where dual
norms on the test side are themselves discretized through the enriched
space.  The companion number mu estimates how well the enriched space
controls those dual norms, using a richer proxy space built on a
once-refined mesh with raised degree.  Everything here is dense
verification machinery for small meshes, not a production path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import splu

from .forms import assemble_g, assemble_x_gram
from .mesh import FacetLabel, bary_to_xy, geometry, refine_uniform, xy_to_bary
from .problems import GRADED_LEVELS, GRADED_RATIO, _singular_elements, x_norm_error
from .quadrature import graded_triangle_rule, segment_rule, triangle_rule
from .spaces import FeSpace, ProductSpace, build_space_triple


class DegenerateTestNormError(RuntimeError):
    """The discretized dual norm vanishes on part of the test space (mu = 0)."""


@dataclass
class InfSupReport:
    beta: float
    mu: float | None
    level: int
    p: int
    dims: tuple


def _check_symmetric(a, what):
    scale = max(1.0, float(np.abs(a).max()))
    asym = float(np.abs(a - a.T).max())
    if asym > 1e-12 * scale:
        raise AssertionError(f"{what} is not symmetric (asymmetry {asym:.3e})")
    return 0.5 * (a + a.T)


def _dual_gram(B, M, chunk=512):
    """Dense S = B M^{-1} B^T, the Gram of the M-dual norm of B's rows."""
    B = sparse.csr_matrix(B)
    lu = splu(sparse.csc_matrix(M))
    ny = B.shape[0]
    S = np.empty((ny, ny))
    Bt = sparse.csc_matrix(B.T)
    for lo in range(0, ny, chunk):
        hi = min(lo + chunk, ny)
        Z = lu.solve(Bt[:, lo:hi].toarray())
        S[:, lo:hi] = B @ Z
    return _check_symmetric(S, "dual Gram matrix")


def _cholesky_or_degenerate(S, what):
    try:
        return linalg.cho_factor(S)
    except linalg.LinAlgError as exc:
        raise DegenerateTestNormError(
            f"{what} is singular: the test space is not controlled by the "
            "enriched space (mu = 0)") from exc


def infsup_from_blocks(M, B, C, N):
    """beta from raw blocks: sqrt of the least eigenvalue of N^-1 C^T S^-1 C.

    M and N are the Gram matrices of the enriched and the trial space, B
    and C the form matrices against them; S = B M^{-1} B^T.
    """
    C = sparse.csr_matrix(C)
    S = _dual_gram(B, M)
    S_chol = _cholesky_or_degenerate(S, "dual Gram matrix")
    W = linalg.cho_solve(S_chol, C.toarray())
    T = _check_symmetric(C.T @ W, "inf-sup eigenproblem matrix")
    Nd = _check_symmetric(np.asarray(sparse.csr_matrix(N).toarray()), "trial Gram matrix")
    w = linalg.eigh(T, Nd, eigvals_only=True)
    return float(np.sqrt(max(w[0], 0.0)))


def practical_infsup(mesh, p):
    """Computable inf-sup number of the space triple on a mesh."""
    spaces = build_space_triple(mesh, p)
    M = assemble_x_gram(spaces.Xhat)
    B = assemble_g(spaces.Xhat, spaces.Y)
    C = assemble_g(spaces.X, spaces.Y)
    N = assemble_x_gram(spaces.X)
    return infsup_from_blocks(M, B, C, N)


def _proxy_space(mesh, p, enrichment):
    fine = refine_uniform(mesh)
    dg = FeSpace(fine, "dg", p + enrichment)
    cg = FeSpace(fine, "cg", p + 2 + enrichment)
    return fine, ProductSpace([("flux0", dg), ("flux1", dg), ("u", cg)],
                              family_p=p + enrichment)


def _coarse_facet_param(coarse_mesh, dirichlet_ids, points):
    """Locate boundary points on a coarse Dirichlet facet; return (facet pos, params)."""
    for pos, f in enumerate(dirichlet_ids):
        a, b = coarse_mesh.facets[f]
        pa = coarse_mesh.vertices[a]
        tang = coarse_mesh.vertices[b] - pa
        len_sq = float(tang @ tang)
        rel = points - pa
        t = rel @ tang / len_sq
        off = np.abs(rel[:, 0] * tang[1] - rel[:, 1] * tang[0]) / np.sqrt(len_sq)
        if np.all(off <= 1e-12) and np.all(t >= -1e-12) and np.all(t <= 1 + 1e-12):
            return pos, np.clip(t, 0.0, 1.0)
    raise ValueError("boundary facet not contained in any coarse Dirichlet facet")


def _assemble_g_fine_trial(fine_trial, coarse_test, fine_mesh, coarse_mesh, degree):
    """Form matrix with the trial space on a refinement of the test space's mesh."""
    ancestor = fine_mesh.parent
    rule = triangle_rule(degree)
    frule = segment_rule(degree)
    geo_f = geometry(fine_mesh)
    geo_c = geometry(coarse_mesh)

    flux_sp = fine_trial.space("flux0")
    u_sp = fine_trial.space("u")
    v1_sp = coarse_test.space("v1_0")
    v2_sp = coarse_test.space("v2")
    v3_sp = coarse_test.space("v3")
    vflux, _ = flux_sp.basis.tabulate(rule.points)
    vu, gu = u_sp.basis.tabulate(rule.points)

    rows, cols, vals = [], [], []

    def scatter(local, r, c):
        rr, cc = np.broadcast_arrays(r[:, None], c[None, :])
        keep = (rr >= 0) & (cc >= 0)
        rows.append(rr[keep])
        cols.append(cc[keep])
        vals.append(local[keep])

    def shifted(dofs, off):
        return np.where(dofs >= 0, dofs + off, -1)

    w = rule.weights
    for fe in range(fine_mesh.num_triangles):
        ce = int(ancestor[fe])
        xy = bary_to_xy(fine_mesh, fe, rule.points)
        cb = xy_to_bary(coarse_mesh, ce, xy)
        vv1, _ = v1_sp.basis.tabulate(cb)
        _, gv2 = v2_sp.basis.tabulate(cb)
        det = geo_f.det[fe]
        gu_phys = np.einsum("plk,kd->pld", gu, geo_f.inv[fe])
        gv2_phys = np.einsum("plk,kd->pld", gv2, geo_c.inv[ce])
        for comp in (0, 1):
            r_v1 = shifted(v1_sp.elem_dofs[ce], coarse_test.offset(f"v1_{comp}"))
            c_flux = shifted(flux_sp.elem_dofs[fe], fine_trial.offset(f"flux{comp}"))
            c_u = shifted(u_sp.elem_dofs[fe], fine_trial.offset("u"))
            scatter(det * np.einsum("p,pi,pj->ij", w, vv1, vflux), r_v1, c_flux)
            scatter(-det * np.einsum("p,pi,pj->ij", w, vv1, gu_phys[:, :, comp]), r_v1, c_u)
            r_v2 = shifted(v2_sp.elem_dofs[ce], coarse_test.offset("v2"))
            scatter(det * np.einsum("p,pi,pj->ij", w, gv2_phys[:, :, comp], vflux),
                    r_v2, c_flux)

    fvals = v3_sp.basis.tabulate(frule.points)
    for f in fine_mesh.dirichlet_facet_ids:
        a, b = fine_mesh.facets[f]
        pa, pb = fine_mesh.vertices[a], fine_mesh.vertices[b]
        pts = pa[None, :] + frule.points[:, None] * (pb - pa)[None, :]
        length = float(np.hypot(*(pb - pa)))
        pos, t_coarse = _coarse_facet_param(coarse_mesh, v3_sp.facet_ids, pts)
        psi = v3_sp.basis.tabulate(t_coarse)
        fe = int(fine_mesh.facet_tris[f, 0])
        tb = xy_to_bary(fine_mesh, fe, pts)
        tr, _ = u_sp.basis.tabulate(tb)
        local = length * np.einsum("p,pi,pj->ij", frule.weights, psi, tr)
        r = v3_sp.facet_dofs[pos] + coarse_test.offset("v3")
        c = shifted(u_sp.elem_dofs[fe], fine_trial.offset("u"))
        scatter(local, r, c)

    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(coarse_test.ndof, fine_trial.ndof)).tocsr()


def mu_estimate(mesh, p, enrichment=2):
    """Dual-norm control of the enriched space against a richer proxy.

    Least singular ratio over the test space of the enriched-space dual
    norm to the dual norm of a proxy space with degree raised by
    ``enrichment`` on the once-uniformly-refined mesh.  Enrichment 0 is
    the degenerate identity proxy and returns 1.  Lies in (0, 1] since
    the proxy contains the enriched space.
    """
    if enrichment < 0:
        raise ValueError("enrichment must be nonnegative")
    spaces = build_space_triple(mesh, p)
    M = assemble_x_gram(spaces.Xhat)
    B = assemble_g(spaces.Xhat, spaces.Y)
    S = _dual_gram(B, M)
    _cholesky_or_degenerate(S, "dual Gram matrix")
    if enrichment == 0:
        S_proxy = S
    else:
        fine, proxy = _proxy_space(mesh, p, enrichment)
        M_proxy = assemble_x_gram(proxy)
        B_proxy = _assemble_g_fine_trial(proxy, spaces.Y, fine, mesh,
                                         2 * (p + enrichment + 3))
        S_proxy = _dual_gram(B_proxy, M_proxy)
    try:
        w = linalg.eigh(S, S_proxy, eigvals_only=True)
    except linalg.LinAlgError as exc:
        raise DegenerateTestNormError(
            "proxy dual Gram matrix is singular (mu = 0)") from exc
    mu = float(np.sqrt(max(w[0], 0.0)))
    # containment of the enriched space in the proxy bounds mu by one
    return min(mu, 1.0)


def best_approximation(exact, spaces, mesh):
    """Trial-norm orthogonal projection of the exact pair onto X.

    Returns the coefficient vector and its trial-norm distance from the
    exact solution, integrated with singularity-graded quadrature where
    needed.
    """
    if mesh is not spaces.mesh:
        raise ValueError("mesh does not match the space triple")
    N = assemble_x_gram(spaces.X)
    geo = geometry(mesh)
    degree = 2 * spaces.p + 16
    singular = _singular_elements(mesh, exact)
    rule = triangle_rule(degree)

    flux_sp = spaces.X.space("flux0")
    u_sp = spaces.X.space("u")
    rhs = np.zeros(spaces.X.ndof)

    def accumulate(elems, qrule):
        vflux, _ = flux_sp.basis.tabulate(qrule.points)
        vu, gu = u_sp.basis.tabulate(qrule.points)
        corners = mesh.vertices[mesh.triangles[elems]]
        xy = np.einsum("pk,ekd->epd", qrule.points, corners)
        x, y = xy[..., 0], xy[..., 1]
        pex = exact.p(x, y)
        uex = exact.u(x, y)
        gex = exact.grad_u(x, y)
        wdet = qrule.weights[None, :] * geo.det[elems, None]
        for comp, name in enumerate(("flux0", "flux1")):
            local = np.einsum("ep,pi->ei", wdet * pex[..., comp], vflux)
            dofs = spaces.X.space(name).elem_dofs[elems]
            np.add.at(rhs, dofs + spaces.X.offset(name), local)
        gphys = np.einsum("plk,ekd->epld", gu, geo.inv[elems])
        local = np.einsum("ep,pi->ei", wdet * uex, vu)
        local += np.einsum("epd,epid->ei", wdet[..., None] * gex, gphys)
        dofs = u_sp.elem_dofs[elems]
        keep = dofs >= 0
        np.add.at(rhs, dofs[keep] + spaces.X.offset("u"), local[keep])

    regular = np.array([t for t in range(mesh.num_triangles) if t not in singular],
                       dtype=np.int64)
    for lo in range(0, len(regular), 8192):
        accumulate(regular[lo:lo + 8192], rule)
    for t, local_vertex in singular.items():
        grule = graded_triangle_rule(degree, local_vertex, GRADED_LEVELS, GRADED_RATIO)
        accumulate(np.array([t]), grule)

    coeffs = splu(sparse.csc_matrix(N)).solve(rhs)
    return coeffs, x_norm_error(coeffs, exact, spaces, mesh)
