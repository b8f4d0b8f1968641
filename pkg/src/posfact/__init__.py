"""Products of two positive matrices.

A square matrix is a product ``A B`` of two positive semidefinite matrices
exactly when it is diagonalizable with nonnegative spectrum.  This package
tests that, builds certified factor pairs, solves the related operator
equations and runs a small functional calculus on the class.
"""

__version__ = "0.1.0"

from .core import DEFAULT_TOL, Subspace, Tolerances, eig_general, range_kernel
from .errors import (
    CertificateError,
    DomainError,
    Infeasible,
    InputError,
    NotInClass,
    NotPSD,
    PosfactError,
)
from .membership import Subclass, classify_subclass, feasibility_lambda, is_l2p
from .factorization import (
    invertible_factor_pair,
    optimal_pair,
    schur_complement,
    sebestyen_solve,
)
from .calculus import (
    borel_calculus,
    geometric_mean,
    mp_inverse_l2p,
    pedersen_takesaki,
    riesz_decomposition,
    sqrt_l2p,
)
from .dilation import dilate_pos_proj, dilate_proj_proj

__all__ = [
    "DEFAULT_TOL", "Subspace", "Tolerances", "eig_general", "range_kernel",
    "CertificateError", "DomainError", "Infeasible", "InputError", "NotInClass",
    "NotPSD", "PosfactError",
    "Subclass", "classify_subclass", "feasibility_lambda", "is_l2p",
    "invertible_factor_pair", "optimal_pair", "schur_complement", "sebestyen_solve",
    "borel_calculus", "geometric_mean", "mp_inverse_l2p", "pedersen_takesaki",
    "riesz_decomposition", "sqrt_l2p",
    "dilate_pos_proj", "dilate_proj_proj",
]
