"""Residual-minimizing finite elements for Poisson problems with weakly
imposed Dirichlet data.

The discretization minimizes the residual of a first-order reformulation
in a discretized dual norm of the test space, realized as a symmetric
indefinite 3x3 block system whose extra unknown doubles as a built-in
a posteriori error estimator driving adaptive mesh refinement.
"""

from .adaptivity import RunRecord, run_adaptive, run_uniform, solve_on_mesh
from .diagnostics import best_approximation, mu_estimate, practical_infsup
from .estimator import Indicators, dorfler_mark, local_indicators
from .forms import ProblemData, assemble_g, assemble_load, assemble_x_gram
from .mesh import FacetLabel, Mesh, bisect, initial_mesh, make_mesh, refine_uniform
from .problems import ExactSolution, polynomial_problem, singular_problem, true_error
from .quadrature import QuadRule, graded_triangle_rule, segment_rule, triangle_rule
from .saddle import BlockSystem, SaddleSolveError, SolveResult, build_block_system, solve
from .spaces import FeSpace, ProductSpace, SpaceTriple, build_space_triple, evaluate

__version__ = "0.1.0"

__all__ = [
    "BlockSystem", "ExactSolution", "FacetLabel", "FeSpace", "Indicators",
    "Mesh", "ProblemData", "ProductSpace", "QuadRule", "RunRecord",
    "SaddleSolveError", "SolveResult", "SpaceTriple", "assemble_g",
    "assemble_load", "assemble_x_gram", "best_approximation", "bisect",
    "build_block_system", "build_space_triple", "dorfler_mark", "evaluate",
    "graded_triangle_rule", "initial_mesh", "local_indicators", "make_mesh",
    "mu_estimate", "polynomial_problem", "practical_infsup", "refine_uniform",
    "run_adaptive", "run_uniform", "segment_rule", "singular_problem", "solve",
    "solve_on_mesh", "triangle_rule", "true_error",
]
