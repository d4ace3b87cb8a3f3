"""Numerical toolkit for Ritt operators, Stolz domains and convolution on finite abelian groups."""

__version__ = "0.1.0"

from .exceptions import (
    ConfigurationError,
    GuardError,
    InvalidSymbolError,
    NumericalError,
    PreconditionError,
    RittkitError,
    StructuralError,
)
from .funcalc import Polynomial, eval_poly_operator, hinf_ratio, sup_on_stolz
from .groups import FiniteAbelianGroup, Integers, character, group_add
from .measures import (
    Measure,
    ProbabilityMeasure,
    Symbol,
    convolution_power,
    convolve,
    fourier_symbol,
    is_symmetric,
    polynomial_push,
    square,
    symmetrize,
)
from .norms import NormTag, matrix_norm
from .operators import (
    LinearOperator,
    RittReport,
    convolution_operator,
    operator_norm,
    resolvent_constant,
    ritt_constants,
    ritt_from_square_check,
    sectorial_constant,
)
from .representations import Representation, average_operator, transference_check, powers_profile
from .stolz import (
    Certified,
    StolzDomain,
    bar_constant,
    minimal_stolz_angle,
    phi_n_sup,
    stolz_boundary,
    stolz_contains,
    stolz_ratio_constant,
)
from .tensor import (
    DilationTriple,
    interchange_identity_check,
    kconvexity_lower,
    lemma_lem_check,
    pisier_expression_norm,
    regular_norm_lower,
    rota_dilation,
    subordination_chain_check,
    tensor_extend,
)
