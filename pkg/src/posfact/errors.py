"""Exception hierarchy.

Input problems subclass ``ValueError``; "the math says no" conditions
subclass :class:`PosfactError` directly so callers can tell them apart.
"""


class PosfactError(Exception):
    """Base class for every error raised by posfact."""


class InputError(PosfactError, ValueError):
    """Malformed input: wrong shape, non-finite entries, bad parameters."""


class DimensionMismatch(InputError):
    pass


class NotHermitian(InputError):
    pass


class NotPSD(PosfactError):
    pass


class NotInvertible(PosfactError):
    pass


class NotInClass(PosfactError):
    """The operator is not a product of two positive matrices."""


class Infeasible(PosfactError):
    pass


class RangeNotContained(Infeasible):
    pass


class RangeMismatch(Infeasible):
    pass


class InvalidPerturbation(PosfactError):
    pass


class DomainError(PosfactError):
    pass


class CertificateError(PosfactError, ArithmeticError):
    """A post-condition check failed at the configured tolerance."""


class InvalidParams(InputError):
    pass


class UnknownName(InputError):
    pass
