"""Principal eigenvalues of drift-diffusion operators with finite jump kernels.

The package discretizes operators of the form

    trace(a(x) D^2 u) + b(x) . grad u + c(x) u
        + integral of (u(x+z) - u(x)) against a finite jump measure

on 1D/2D lattices with the zero condition on the whole complement of the
domain, computes Dirichlet principal eigenpairs with two-sided certificates,
approximates whole-space eigenvalues by domain sweeps, estimates the
maximum-principle thresholds by feasibility bisection, solves semilinear
problems by monotone iteration, classifies jump kernels, and cross-checks
eigenvalues with a killed-path Monte Carlo oracle.
"""

__version__ = "0.1.0"

from .assembly import (DiscreteOperator, assemble_local, assemble_nonlocal,
                       assemble_operator, read_matrix_text, write_matrix_text)
from .coefficients import CoefficientField
from .eig import (EigenResult, check_simplicity, collatz_bounds,
                  dense_principal, principal_eig)
from .grid import Annulus, Ball, Box, Interval, SpatialGrid, ball, build_grid
from .kernel_analysis import harnack_ratio, kernel_classify, nonlocal_harmonic
from .kernels import JumpKernel, uniform_density
from .maxprinciple import (barrier, lambda_double_prime, lambda_prime,
                           refined_mp_check, right_monotonicity_check)
from .problem import ProblemSpec, problem_from_config
from .semilinear import monotone_iterate, solve_linear
from .stochastic import PathEnsemble, fk_estimate, simulate_paths
from .sweep import (estimate_limit, exterior_sweep, eigenfunction_stability,
                    growth_dominance, sweep)

__all__ = [
    "Annulus", "Ball", "Box", "CoefficientField", "DiscreteOperator",
    "EigenResult", "Interval", "JumpKernel", "PathEnsemble", "ProblemSpec",
    "SpatialGrid", "assemble_local", "assemble_nonlocal", "assemble_operator",
    "ball", "barrier", "build_grid", "check_simplicity", "collatz_bounds",
    "dense_principal", "eigenfunction_stability", "estimate_limit",
    "exterior_sweep", "fk_estimate", "growth_dominance", "harnack_ratio",
    "kernel_classify", "lambda_double_prime", "lambda_prime",
    "monotone_iterate", "nonlocal_harmonic", "principal_eig",
    "problem_from_config", "read_matrix_text", "refined_mp_check",
    "right_monotonicity_check", "simulate_paths", "solve_linear", "sweep",
    "uniform_density", "write_matrix_text",
]
