"""Flux-limited Keller-Segel system with time-varying chemical decay.

Library layout:

- ``core``: decay laws, model parameters, grids, discrete states
- ``limiters``: flux-limiter catalog F(s) = f(s)*s
- ``quadrature``: adaptive integration, integrating factors, Ei, Picard
- ``exact_solutions``: closed-form / quadrature solution families
- ``reduced_systems``: direct numerical integration of the reduced systems
- ``pde_solver``: method-of-lines solver for the full system
- ``lie_toolkit``: exact vector-field algebra for the generator catalog
- ``verify``: residual, comparison and invariance checks
- ``cli``: config-driven command line front end
"""

__version__ = "0.1.0"

from .core import (
    CaseTag,
    ConstantDecay,
    ExponentialDecay,
    FieldPair,
    Grid1D,
    ModelParams,
    PowerLawDecay,
    TabulatedDecay,
    classify,
    evaluate_decay,
)
from .exact_solutions import (
    ExactSolution,
    case1_homogeneous,
    case2_travelling_tanh,
    case3_homogeneous,
    case4_X4_quadrature,
    case4_cellfree_front,
    case4_homogeneous,
)
from .limiters import (
    AlgebraicSqrtLimiter,
    TanhLimiter,
    TanhLogLimiter,
    WeberFechnerLogLimiter,
    limiter_from_config,
)
from .pde_solver import SolverConfig, Trajectory, run, step
from .quadrature import (
    LinearFirstOrderProblem,
    exp_integral_Ei,
    integrate_adaptive,
    picard_iterate,
    solve_linear_first_order,
)
from .reduced_systems import (
    ReducedProblem,
    integrate_homogeneous,
    integrate_travelling_wave,
    solve_self_similar,
    solve_steady_state,
)
from .verify import compare, convergence_order, group_invariance_check, pde_residual

__all__ = [
    "__version__",
    "CaseTag",
    "ConstantDecay",
    "ExponentialDecay",
    "FieldPair",
    "Grid1D",
    "ModelParams",
    "PowerLawDecay",
    "TabulatedDecay",
    "classify",
    "evaluate_decay",
    "ExactSolution",
    "case1_homogeneous",
    "case2_travelling_tanh",
    "case3_homogeneous",
    "case4_X4_quadrature",
    "case4_cellfree_front",
    "case4_homogeneous",
    "AlgebraicSqrtLimiter",
    "TanhLimiter",
    "TanhLogLimiter",
    "WeberFechnerLogLimiter",
    "limiter_from_config",
    "SolverConfig",
    "Trajectory",
    "run",
    "step",
    "LinearFirstOrderProblem",
    "exp_integral_Ei",
    "integrate_adaptive",
    "picard_iterate",
    "solve_linear_first_order",
    "ReducedProblem",
    "integrate_homogeneous",
    "integrate_travelling_wave",
    "solve_self_similar",
    "solve_steady_state",
    "compare",
    "convergence_order",
    "group_invariance_check",
    "pde_residual",
]
