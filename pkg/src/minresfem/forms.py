"""Assembly of the mild-weak bilinear form, the trial-space inner product
and the load functional.

The bilinear form pairs a trial pair (flux q, potential w) with a test
triple (q1, v2, v3):

    int (q - grad w) . q1 dx  +  int q . grad v2 dx  +  int_GammaD w v3 ds

The trial inner product is L2 on the flux pair and full H1 on the
potential.  All matrices and the load are assembled with a plus sign;
the sign pattern of the saddle-point system lives in the block builder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .mesh import FacetLabel, geometry, xy_to_bary
from .quadrature import segment_rule, triangle_rule

_CHUNK = 8192
# facet quadrature for data terms (smooth, generally non-polynomial data)
_DATA_FACET_DEGREE = 30


@dataclass
class ProblemData:
    """Data of one boundary value problem.

    g, h_D, h_N are vectorized callables of (x, y) or None for zero;
    exact optionally carries the manufactured solution used for error
    computation.
    """

    g: object = None
    h_D: object = None
    h_N: object = None
    exact: object = None


class _Coo:
    def __init__(self, shape):
        self.shape = shape
        self.rows, self.cols, self.vals = [], [], []

    def add(self, local, rows, cols):
        """Scatter local (ne, ni, nj) against dof maps (ne, ni), (ne, nj)."""
        ne, ni, nj = local.shape
        r = np.broadcast_to(rows[:, :, None], (ne, ni, nj))
        c = np.broadcast_to(cols[:, None, :], (ne, ni, nj))
        keep = (r >= 0) & (c >= 0)
        self.rows.append(r[keep])
        self.cols.append(c[keep])
        self.vals.append(local[keep])

    def tocsr(self):
        if not self.rows:
            return sparse.csr_matrix(self.shape)
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        return sparse.coo_matrix((vals, (rows, cols)), shape=self.shape).tocsr()


def _default_degrees(*pspaces):
    fams = [ps.family_p for ps in pspaces if ps.family_p is not None]
    if fams:
        p = max(fams)
        return 2 * (p + 3), 2 * (p + 2)
    # fallback for hand-built spaces: sum of highest component degrees
    deg = sum(max(sp.degree for _, sp in ps.components) for ps in pspaces)
    return deg + 2, deg + 2


def _chunks(n):
    for lo in range(0, n, _CHUNK):
        yield np.arange(lo, min(lo + _CHUNK, n))


def _mass_blocks(coo, mesh, rule, test_sp, trial_sp, sign, row_off, col_off):
    geo = geometry(mesh)
    vt, _ = test_sp.basis.tabulate(rule.points)
    vs, _ = trial_sp.basis.tabulate(rule.points)
    base = np.einsum("p,pi,pj->ij", rule.weights, vt, vs)
    for idx in _chunks(mesh.num_triangles):
        local = sign * geo.det[idx, None, None] * base
        coo.add(local, _shift(test_sp.elem_dofs[idx], row_off),
                _shift(trial_sp.elem_dofs[idx], col_off))


def _shift(dofs, off):
    # shift valid dofs by the block offset, keeping -1 markers intact
    return np.where(dofs >= 0, dofs + off, -1)


def _val_dgrad_blocks(coo, mesh, rule, test_sp, trial_sp, comp, sign, row_off, col_off):
    """sign * int (d trial / d x_comp) * test."""
    geo = geometry(mesh)
    vt, _ = test_sp.basis.tabulate(rule.points)
    _, gs = trial_sp.basis.tabulate(rule.points)
    t = np.einsum("p,pi,pjk->ijk", rule.weights, vt, gs)
    for idx in _chunks(mesh.num_triangles):
        local = sign * geo.det[idx, None, None] * np.einsum(
            "ijk,ek->eij", t, geo.inv[idx][:, :, comp])
        coo.add(local, _shift(test_sp.elem_dofs[idx], row_off),
                _shift(trial_sp.elem_dofs[idx], col_off))


def _dgrad_val_blocks(coo, mesh, rule, test_sp, trial_sp, comp, sign, row_off, col_off):
    """sign * int trial * (d test / d x_comp)."""
    geo = geometry(mesh)
    _, gt = test_sp.basis.tabulate(rule.points)
    vs, _ = trial_sp.basis.tabulate(rule.points)
    t = np.einsum("p,pik,pj->ikj", rule.weights, gt, vs)
    for idx in _chunks(mesh.num_triangles):
        local = sign * geo.det[idx, None, None] * np.einsum(
            "ikj,ek->eij", t, geo.inv[idx][:, :, comp])
        coo.add(local, _shift(test_sp.elem_dofs[idx], row_off),
                _shift(trial_sp.elem_dofs[idx], col_off))


def _stiffness_blocks(coo, mesh, rule, test_sp, trial_sp, sign, row_off, col_off):
    geo = geometry(mesh)
    _, gt = test_sp.basis.tabulate(rule.points)
    _, gs = trial_sp.basis.tabulate(rule.points)
    t = np.einsum("p,pik,pjl->klij", rule.weights, gt, gs)
    metric = np.einsum("ekd,eld->ekl", geo.inv, geo.inv)
    for idx in _chunks(mesh.num_triangles):
        local = sign * geo.det[idx, None, None] * np.einsum("ekl,klij->eij", metric[idx], t)
        coo.add(local, _shift(test_sp.elem_dofs[idx], row_off),
                _shift(trial_sp.elem_dofs[idx], col_off))


def _facet_points(mesh, facet_id, t):
    a, b = mesh.facets[facet_id]
    pa, pb = mesh.vertices[a], mesh.vertices[b]
    pts = pa[None, :] + t[:, None] * (pb - pa)[None, :]
    return pts, float(np.hypot(*(pb - pa)))


def assemble_g(trial, test, volume_degree=None, facet_degree=None):
    """Matrix of the mild-weak form; rows are test dofs, columns trial dofs.

    trial must expose components (flux0, flux1, u) and test
    (v1_0, v1_1, v2, v3) on the same mesh.
    """
    if trial.mesh is not test.mesh:
        raise ValueError("trial and test spaces live on different meshes")
    mesh = trial.mesh
    vd, fd = _default_degrees(trial, test)
    vol_rule = triangle_rule(volume_degree if volume_degree is not None else vd)
    fac_rule = segment_rule(facet_degree if facet_degree is not None else fd)

    coo = _Coo((test.ndof, trial.ndof))
    u_sp, v2_sp, v3_sp = trial.space("u"), test.space("v2"), test.space("v3")
    for comp in (0, 1):
        flux_sp = trial.space(f"flux{comp}")
        v1_sp = test.space(f"v1_{comp}")
        # int flux_c * v1_c
        _mass_blocks(coo, mesh, vol_rule, v1_sp, flux_sp, 1.0,
                     test.offset(f"v1_{comp}"), trial.offset(f"flux{comp}"))
        # -int (d u / d x_c) * v1_c
        _val_dgrad_blocks(coo, mesh, vol_rule, v1_sp, u_sp, comp, -1.0,
                          test.offset(f"v1_{comp}"), trial.offset("u"))
        # int flux_c * (d v2 / d x_c)
        _dgrad_val_blocks(coo, mesh, vol_rule, v2_sp, flux_sp, comp, 1.0,
                          test.offset("v2"), trial.offset(f"flux{comp}"))

    # int_GammaD u * v3
    fvals = v3_sp.basis.tabulate(fac_rule.points)
    for pos, f in enumerate(v3_sp.facet_ids):
        elem = int(mesh.facet_tris[f, 0])
        pts, length = _facet_points(mesh, f, fac_rule.points)
        bary = xy_to_bary(mesh, elem, pts)
        tvals, _ = u_sp.basis.tabulate(bary)
        local = length * np.einsum("p,pi,pj->ij", fac_rule.weights, fvals, tvals)
        rows = v3_sp.facet_dofs[pos] + test.offset("v3")
        cols = _shift(u_sp.elem_dofs[elem], trial.offset("u"))
        coo.add(local[None, :, :], rows[None, :], cols[None, :])
    return coo.tocsr()


def assemble_x_gram(space, volume_degree=None):
    """Gram matrix of the trial inner product: L2 flux pair plus H1 potential."""
    mesh = space.mesh
    vd, _ = _default_degrees(space)
    rule = triangle_rule(volume_degree if volume_degree is not None else vd)
    coo = _Coo((space.ndof, space.ndof))
    for comp in (0, 1):
        sp = space.space(f"flux{comp}")
        off = space.offset(f"flux{comp}")
        _mass_blocks(coo, mesh, rule, sp, sp, 1.0, off, off)
    u_sp, off = space.space("u"), space.offset("u")
    _mass_blocks(coo, mesh, rule, u_sp, u_sp, 1.0, off, off)
    _stiffness_blocks(coo, mesh, rule, u_sp, u_sp, 1.0, off, off)
    gram = coo.tocsr()
    # enforce exact symmetry (perturbs entries by at most one rounding unit)
    return ((gram + gram.T) * 0.5).tocsr()


def assemble_load(test, data, volume_degree=None, data_facet_degree=None):
    """Load vector over test dofs: g(v2) + int_GammaN h_N v2 + int_GammaD h_D v3."""
    mesh = test.mesh
    vd, _ = _default_degrees(test)
    vol_rule = triangle_rule(volume_degree if volume_degree is not None else vd)
    fdeg = data_facet_degree if data_facet_degree is not None else _DATA_FACET_DEGREE
    fac_rule = segment_rule(fdeg)

    rhs = np.zeros(test.ndof)
    v2_sp, v3_sp = test.space("v2"), test.space("v3")

    if data.g is not None:
        geo = geometry(mesh)
        vt, _ = v2_sp.basis.tabulate(vol_rule.points)
        corners = mesh.vertices[mesh.triangles]
        for idx in _chunks(mesh.num_triangles):
            xy = np.einsum("pk,ekd->epd", vol_rule.points, corners[idx])
            gvals = np.asarray(data.g(xy[:, :, 0], xy[:, :, 1]), dtype=float)
            gvals = np.broadcast_to(gvals, xy.shape[:2])
            local = geo.det[idx, None] * np.einsum("ep,p,pi->ei", gvals, vol_rule.weights, vt)
            dofs = v2_sp.elem_dofs[idx]
            keep = dofs >= 0
            np.add.at(rhs, dofs[keep] + test.offset("v2"), local[keep])

    if data.h_N is not None:
        for f in mesh.neumann_facet_ids:
            elem = int(mesh.facet_tris[f, 0])
            pts, length = _facet_points(mesh, f, fac_rule.points)
            hvals = np.asarray(data.h_N(pts[:, 0], pts[:, 1]), dtype=float)
            hvals = np.broadcast_to(hvals, (len(pts),))
            bary = xy_to_bary(mesh, elem, pts)
            tvals, _ = v2_sp.basis.tabulate(bary)
            local = length * np.einsum("p,p,pi->i", fac_rule.weights, hvals, tvals)
            dofs = v2_sp.elem_dofs[elem]
            keep = dofs >= 0
            np.add.at(rhs, dofs[keep] + test.offset("v2"), local[keep])

    if data.h_D is not None:
        fvals = v3_sp.basis.tabulate(fac_rule.points)
        for pos, f in enumerate(v3_sp.facet_ids):
            pts, length = _facet_points(mesh, f, fac_rule.points)
            hvals = np.asarray(data.h_D(pts[:, 0], pts[:, 1]), dtype=float)
            hvals = np.broadcast_to(hvals, (len(pts),))
            local = length * np.einsum("p,p,pi->i", fac_rule.weights, hvals, fvals)
            rhs[v3_sp.facet_dofs[pos] + test.offset("v3")] += local
    return rhs
