"""Separable spectral preconditioner for the H4 quadratic form on the reference square."""

from .errors import BreakdownError, ConvergenceError, NumericalError
from .forms1d import (
    QuadraticFormPair1D,
    SeparableEigenbasis,
    build_constrained_forms,
    build_E,
    build_F,
    build_forms,
    full_eigenbasis,
    gen_sym_eig,
    reflection_coefficients,
)
from .legendre import QuadratureRule, ShapeFunctionSet, diff_matrix, gauss_legendre, legendre_values, shape_functions
from .pcg import PcgTrace, pcg_demo, pcg_solve
from .spectra import ConditionReport, condition_number_dense, condition_number_lanczos, table1_report
from .tensor2d import (
    ConstrainedBlockSystem,
    SeparablePreconditioner,
    apply_B,
    apply_C,
    apply_C_inverse,
    assemble_constrained_system,
    build_B,
    build_C_dense,
    build_preconditioner,
    gram_matrix,
    schur_solve,
)

__version__ = "0.1.0"
