"""Build and solve the symmetric indefinite 3x3 block system.

Unknown ordering is (theta, lambda, u): the approximate error
representative in the enriched space, the lifted residual in the test
space, and the trial solution.  The assembled global matrix is

    [  M  -B^T   0 ]        [  0 ]
    [ -B    0   -C ]  x  =  [ -f ]
    [  0  -C^T   0 ]        [  0 ]

with M the enriched-space Gram matrix, B and C the form matrices against
the enriched and the trial space, and f the load.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.io import mmwrite
from scipy.sparse.linalg import splu


class SaddleSolveError(RuntimeError):
    """Factorization breakdown; indicates an inf-sup deficient space pair."""


@dataclass
class BlockSystem:
    M: sparse.spmatrix
    B: sparse.spmatrix
    C: sparse.spmatrix
    fvec: np.ndarray
    matrix: sparse.csr_matrix
    rhs: np.ndarray
    dims: tuple  # (dim Xhat, dim Y, dim X)


@dataclass
class SolveResult:
    theta: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    residual: float


def build_block_system(M, B, C, fvec):
    """Assemble the global saddle matrix and right-hand side (0, -f, 0)."""
    M, B, C = sparse.csr_matrix(M), sparse.csr_matrix(B), sparse.csr_matrix(C)
    fvec = np.asarray(fvec, dtype=float)
    nxh, ny, nx = M.shape[0], B.shape[0], C.shape[1]
    if M.shape != (nxh, nxh) or B.shape != (ny, nxh) or C.shape != (ny, nx):
        raise ValueError(f"inconsistent block shapes {M.shape}, {B.shape}, {C.shape}")
    if fvec.shape != (ny,):
        raise ValueError(f"load length {fvec.shape} does not match test dimension {ny}")
    matrix = sparse.bmat(
        [[M, -B.T, None], [-B, None, -C], [None, -C.T, None]], format="csr")
    rhs = np.concatenate([np.zeros(nxh), -fvec, np.zeros(nx)])
    return BlockSystem(M, B, C, fvec, matrix, rhs, (nxh, ny, nx))


def _equilibrated(matrix):
    """Two sweeps of symmetric max-norm scaling; returns (scaled csc, d)."""
    a = matrix.tocsr(copy=True)
    d = np.ones(a.shape[0])
    for _ in range(2):
        row_max = np.abs(a).max(axis=1).toarray().ravel()
        row_max[row_max == 0.0] = 1.0
        s = 1.0 / np.sqrt(row_max)
        a = sparse.diags(s) @ a @ sparse.diags(s)
        d *= s
    return a.tocsc(), d


def solve(system):
    """Direct sparse solve of the block system with a residual guarantee.

    Scales the matrix symmetrically, factorizes with sparse LU and applies
    iterative refinement until the relative residual of the original system
    is at most 1e-10.  A singular factorization is reported as an inf-sup
    failure of the space configuration.
    """
    a, d = _equilibrated(system.matrix)
    try:
        lu = splu(a)
    except RuntimeError as exc:
        raise SaddleSolveError(
            f"saddle matrix factorization failed ({exc}); "
            "the space configuration is inf-sup deficient") from exc

    b = system.rhs
    bnorm = np.linalg.norm(b)
    x = d * lu.solve(b * d)
    res = system.matrix @ x - b
    for _ in range(3):
        rel = np.linalg.norm(res) / bnorm if bnorm > 0 else np.linalg.norm(res)
        if rel <= 1e-12 or not np.isfinite(rel):
            break
        x -= d * lu.solve(res * d)
        res = system.matrix @ x - b
    rel = np.linalg.norm(res) / bnorm if bnorm > 0 else np.linalg.norm(res)
    if not np.isfinite(rel) or rel > 1e-10:
        raise SaddleSolveError(
            f"relative residual {rel:.3e} exceeds 1e-10; "
            "the space configuration is inf-sup deficient or severely ill-conditioned")

    nxh, ny, nx = system.dims
    return SolveResult(theta=x[:nxh], lam=x[nxh:nxh + ny], u=x[nxh + ny:], residual=rel)


def write_matrix_market(system, path):
    """Export the global matrix in symmetric coordinate MatrixMarket form."""
    mmwrite(str(path), sparse.coo_matrix(system.matrix), symmetry="symmetric")
