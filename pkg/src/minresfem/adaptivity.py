"""Solve-estimate-mark-refine loops and per-level records.

Both loops stop after recording the first level whose trial dof count
exceeds the budget; the adaptive loop additionally stops when the
estimator drops below 1e-10 (exact representability) or when marking
returns the empty set.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import saddle
from .estimator import dorfler_mark, local_indicators
from .forms import assemble_g, assemble_load, assemble_x_gram
from .mesh import bisect, initial_mesh, refine_uniform
from .problems import true_error
from .spaces import build_space_triple

#: estimator threshold below which the solution is considered exact
EXACTNESS_TOL = 1e-10


@dataclass
class RunRecord:
    """One level of a refinement run, as reported in the CSV output."""

    level: int
    ndof_x: int
    estimator: float | None
    true_error: float | None = None
    effectivity: float | None = None
    beta: float | None = None
    wall_time: float = 0.0


@dataclass
class LevelState:
    """Full per-level state for callers that need more than the record."""

    level: int
    mesh: object
    spaces: object
    system: object
    result: object
    indicators: object
    record: RunRecord


def solve_on_mesh(problem, mesh, p):
    """Assemble and solve the block system on one mesh."""
    spaces = build_space_triple(mesh, p)
    M = assemble_x_gram(spaces.Xhat)
    B = assemble_g(spaces.Xhat, spaces.Y)
    C = assemble_g(spaces.X, spaces.Y)
    fvec = assemble_load(spaces.Y, problem)
    system = saddle.build_block_system(M, B, C, fvec)
    result = saddle.solve(system)
    return spaces, system, result


def _level_state(problem, mesh, p, level, diagnostics):
    start = time.perf_counter()
    try:
        spaces, system, result = solve_on_mesh(problem, mesh, p)
    except saddle.SaddleSolveError as exc:
        raise saddle.SaddleSolveError(f"level {level}: {exc}") from exc
    ind = local_indicators(result, spaces, mesh)
    err = eff = None
    if problem.exact is not None:
        err = true_error(result, problem.exact, spaces, mesh)
        if err > 0.0:
            eff = ind.total / err
    beta = None
    if diagnostics:
        from .diagnostics import practical_infsup

        beta = practical_infsup(mesh, p)
    record = RunRecord(level=level, ndof_x=spaces.X.ndof, estimator=ind.total,
                       true_error=err, effectivity=eff, beta=beta,
                       wall_time=time.perf_counter() - start)
    return LevelState(level, mesh, spaces, system, result, ind, record)


def adaptive_levels(problem, p, theta, max_dofs, diagnostics=False):
    """Yield LevelState per adaptive level until a stopping rule fires."""
    mesh = initial_mesh()
    level = 0
    while True:
        state = _level_state(problem, mesh, p, level, diagnostics)
        yield state
        if state.record.ndof_x > max_dofs:
            return
        if state.indicators.total <= EXACTNESS_TOL:
            return
        marked = dorfler_mark(state.indicators, theta)
        if not marked:
            return
        mesh = bisect(mesh, marked)
        level += 1


def run_adaptive(problem, p, theta, max_dofs, diagnostics=False):
    """Adaptive run driven by the built-in indicators and bulk marking."""
    return [s.record for s in adaptive_levels(problem, p, theta, max_dofs, diagnostics)]


def uniform_levels(problem, p, levels, diagnostics=False):
    """Yield LevelState for the initial mesh and ``levels`` uniform refinements."""
    mesh = initial_mesh()
    for level in range(levels + 1):
        yield _level_state(problem, mesh, p, level, diagnostics)
        if level < levels:
            mesh = refine_uniform(mesh)


def run_uniform(problem, p, levels, diagnostics=False):
    return [s.record for s in uniform_levels(problem, p, levels, diagnostics)]


def trailing_slope(records, window, field="estimator"):
    """Least-squares slope of log(field) vs log(ndof_x) over the last records."""
    if len(records) < window:
        raise ValueError(f"need at least {window} records, got {len(records)}")
    tail = records[-window:]
    x = np.log([r.ndof_x for r in tail])
    y = np.log([getattr(r, field) for r in tail])
    return float(np.polyfit(x, y, 1)[0])
