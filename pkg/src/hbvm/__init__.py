"""Hamiltonian Boundary Value Methods: energy-conserving Runge-Kutta integrators.

Submodules:
    legendre    shifted orthonormal Legendre basis and its integrals
    quadrature  Gauss, Lobatto and interpolatory rules on [0, 1]
    tableau     HBVM(k, s) Butcher tableaux and structural checks
    blended     reduced stage system and the blended iteration
    integrator  time stepping, dense output, trajectories
    problems    benchmark Hamiltonian systems
    harness     experiment drivers and report emission
"""

from .errors import DomainError, PreconditionError, StepFailure
from .harness import ExperimentReport, MethodSpec
from .integrator import HamiltonianSystem, LinearSystem, Trajectory, dense_eval, integrate, make_solver, step
from .legendre import eval_basis, integrate_basis, structural_matrices
from .problems import get_problem
from .quadrature import custom_rule, gauss_rule, lobatto_rule
from .tableau import build_hbvm

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "PreconditionError",
    "StepFailure",
    "ExperimentReport",
    "MethodSpec",
    "HamiltonianSystem",
    "LinearSystem",
    "Trajectory",
    "dense_eval",
    "integrate",
    "make_solver",
    "step",
    "eval_basis",
    "integrate_basis",
    "structural_matrices",
    "get_problem",
    "custom_rule",
    "gauss_rule",
    "lobatto_rule",
    "build_hbvm",
]
