"""Exception hierarchy shared by every module."""


class CatamatchError(Exception):
    """Base class for all library errors."""


class InvalidInput(CatamatchError, ValueError):
    """Malformed or out-of-range input."""


class DivisionByZero(CatamatchError, ZeroDivisionError):
    """Inversion of the zero element of a field."""


class FieldTooSmall(CatamatchError):
    """The prime field has too few points for the requested interpolation."""


class PreconditionViolation(CatamatchError):
    """A documented precondition of an operation does not hold."""


class ContractViolation(CatamatchError):
    """Tape access discipline or a postcondition was broken."""


class UniquenessViolation(ContractViolation):
    """A restoration search found zero or several candidate values.

    Raised loudly: it means one of the uniqueness arguments the
    compress-or-compute loops rely on has failed on a concrete instance.
    """


class LemmaViolation(ContractViolation):
    """An algebraic fact relied upon by an algorithm failed at runtime."""
