"""Built-in a posteriori error estimation and bulk marking.

The element indicators are local trial-norm contributions of the
computed error representative: the L2 norm of its flux pair plus the
full H1 norm of its potential component on each triangle.  Their root
sum of squares equals the global estimator value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import geometry
from .quadrature import triangle_rule

_CHUNK = 8192


@dataclass
class Indicators:
    """Per-triangle indicator values and their root-sum-square total."""

    eta: np.ndarray
    total: float


def local_indicators(result, spaces, mesh):
    """Elementwise indicators from the error representative of a solve."""
    if mesh is not spaces.mesh:
        raise ValueError("mesh does not match the space triple")
    xhat = spaces.Xhat
    parts = xhat.split(result.theta)
    rule = triangle_rule(2 * (spaces.p + 3))
    geo = geometry(mesh)
    w = rule.weights

    flux_sp = xhat.space("flux0")
    u_sp = xhat.space("u")
    vflux, _ = flux_sp.basis.tabulate(rule.points)
    vu, gu = u_sp.basis.tabulate(rule.points)

    eta_sq = np.zeros(mesh.num_triangles)
    for lo in range(0, mesh.num_triangles, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, mesh.num_triangles))
        dens = np.zeros((len(idx), len(w)))
        for name in ("flux0", "flux1"):
            c = xhat.space(name).local_coeffs(parts[name], idx)
            dens += np.einsum("el,pl->ep", c, vflux) ** 2
        cu = u_sp.local_coeffs(parts["u"], idx)
        dens += np.einsum("el,pl->ep", cu, vu) ** 2
        gphys = np.einsum("el,plk,ekd->epd", cu, gu, geo.inv[idx])
        dens += np.sum(gphys**2, axis=-1)
        eta_sq[idx] = geo.det[idx] * (dens @ w)

    eta_sq = np.maximum(eta_sq, 0.0)
    return Indicators(eta=np.sqrt(eta_sq), total=float(np.sqrt(eta_sq.sum())))


def dorfler_mark(ind, theta):
    """Minimal bulk-marked set: sqrt(sum_M eta^2) >= theta * total.

    Ties are broken toward lower triangle ids, so marking is
    deterministic and monotone in theta.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("marking parameter must lie in (0, 1]")
    eta = ind.eta
    total_sq = float(np.sum(eta**2))
    if total_sq == 0.0:
        return set()
    order = np.lexsort((np.arange(len(eta)), -eta))
    target = theta**2 * total_sq
    marked = set()
    cum = 0.0
    for t in order:
        if eta[t] == 0.0 or cum >= target:
            break
        marked.add(int(t))
        cum += float(eta[t]) ** 2
    return marked
