"""Deep Petrov-Galerkin solvers built on frozen random tanh features.

A trial function is a linear combination of the last-hidden-layer neurons of
a randomly initialised network whose hidden weights never change.  Testing
the weak form against nodal finite-element hat functions, and appending
boundary and initial collocation rows, gives a rectangular linear system that
is solved in the least-squares sense.

Typical use::

    from dpgm import preset, solve, Settings
    sol = solve(preset("example1"), Settings(h=2**-5, dof=200), seed=0)
    sol.errors.e_L2
"""
from .assembly import StackedSystem, stack
from .features import FeatureBasis, NetworkArch, ProbeBasis, build_basis
from .lstsq import LstsqResult, solve_lstsq
from .mesh import BoundaryPartition, StructuredMesh, TestSpace, hdiv_test_basis, scalar_test_basis
from .metrics import ErrorReport, relative_errors, slice_errors_at_T
from .problems import PRESETS, ProblemSpec, custom_problem, preset
from .quadrature import QuadratureRule, cell_rule, gauss_legendre_1d
from .solver import Settings, Solution, solve

__version__ = "0.1.0"

__all__ = [
    "BoundaryPartition",
    "ErrorReport",
    "FeatureBasis",
    "LstsqResult",
    "NetworkArch",
    "PRESETS",
    "ProbeBasis",
    "ProblemSpec",
    "QuadratureRule",
    "Settings",
    "Solution",
    "StackedSystem",
    "StructuredMesh",
    "TestSpace",
    "build_basis",
    "cell_rule",
    "custom_problem",
    "gauss_legendre_1d",
    "hdiv_test_basis",
    "preset",
    "relative_errors",
    "scalar_test_basis",
    "slice_errors_at_T",
    "solve",
    "solve_lstsq",
    "stack",
]
