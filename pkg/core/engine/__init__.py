"""
Numerical engine for Lambda_1(D^2_C u) = f on grids over C^n.
"""

from .exceptions import (
    ContractError, EngineError, EvaluationFault, ExprSyntaxError, OutsideConeError,
    UnknownIdentifierError,
)
from .exprparse import Expr, evaluate, evaluate_at, parse
from .grid import (
    DirectionSet, DomainPreset, GridDomain, ball_preset, build_domain, build_preset_domain,
    canonicalize, custom_preset, direction_set, ellipsoid_preset, polydisc_preset,
    two_balls_preset,
)
from .hermitian import (
    HermitianMatrix, Spectrum, SymmetricForm, Xorshift64Star, batch_spectra, eig_hermitian,
    lambda_k, q11_part, rayleigh, weyl_margins,
)
from .operators import (
    OperatorKind, OperatorSpec, comparability_estimate, cone_shift, evaluate as evaluate_operator,
    hamiltonian, in_cone, property_battery,
)
from .oracle import RadialSolution, brute_eig2, quadratic_solution, radial_solution, verify_viscosity
from .scheme import (
    GridFunction, Stencil, apply_lambda1, central_hessian, directional_value, node_solve,
    residual_report, stencil_hessians,
)
from .solver import (
    ProblemSpec, SolveReport, barrier_subsolution, comparison_check, glue_max,
    harmonic_supersolution, solve, solve_general, solve_lambda1,
)

__all__ = [
    'ContractError',
    'EngineError',
    'EvaluationFault',
    'ExprSyntaxError',
    'OutsideConeError',
    'UnknownIdentifierError',
    'Expr',
    'evaluate',
    'evaluate_at',
    'parse',
    'DirectionSet',
    'DomainPreset',
    'GridDomain',
    'ball_preset',
    'build_domain',
    'build_preset_domain',
    'canonicalize',
    'custom_preset',
    'direction_set',
    'ellipsoid_preset',
    'polydisc_preset',
    'two_balls_preset',
    'HermitianMatrix',
    'Spectrum',
    'SymmetricForm',
    'Xorshift64Star',
    'batch_spectra',
    'eig_hermitian',
    'lambda_k',
    'q11_part',
    'rayleigh',
    'weyl_margins',
    'OperatorKind',
    'OperatorSpec',
    'comparability_estimate',
    'cone_shift',
    'evaluate_operator',
    'hamiltonian',
    'in_cone',
    'property_battery',
    'RadialSolution',
    'brute_eig2',
    'quadratic_solution',
    'radial_solution',
    'verify_viscosity',
    'GridFunction',
    'Stencil',
    'apply_lambda1',
    'central_hessian',
    'directional_value',
    'node_solve',
    'residual_report',
    'stencil_hessians',
    'ProblemSpec',
    'SolveReport',
    'barrier_subsolution',
    'comparison_check',
    'glue_max',
    'harmonic_supersolution',
    'solve',
    'solve_general',
    'solve_lambda1',
]
