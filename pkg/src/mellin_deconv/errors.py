"""Exception hierarchy shared by every module of the package."""


class MellinDeconvError(Exception):
    """Base class for all package errors."""


class DomainError(MellinDeconvError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class PoleError(DomainError):
    """Argument too close to a pole of Gamma or of the Kummer denominator."""


class ParamError(MellinDeconvError, ValueError):
    """Invalid distribution or model parameters."""


class UnknownCatalogTag(ParamError):
    pass


class ConfigError(MellinDeconvError, ValueError):
    pass


class ModelError(ParamError):
    """A Levy model that violates an integrability or shape requirement."""


class NegativeTimeError(DomainError):
    pass


class SingularSampleError(DomainError):
    """A zero observation where ``|x|**(z-1)`` is not defined."""


class StripError(DomainError):
    """Integration line outside the strip of analyticity."""


class BranchError(DomainError):
    """Complex power evaluated on the branch cut."""


class ConvergenceError(MellinDeconvError, ArithmeticError):
    pass


class QuadratureError(MellinDeconvError, ArithmeticError):
    pass


class TailError(QuadratureError):
    """A truncated integral whose tail cannot be certified small."""


class DivideError(QuadratureError):
    pass


class InsufficientData(MellinDeconvError, ValueError):
    pass


class IoError(MellinDeconvError, OSError):
    pass


class UsageError(MellinDeconvError, ValueError):
    """Invalid command-line input; maps to exit code 2."""
