"""Exception types shared across the package."""


class BDenseError(Exception):
    """Base class for all package errors."""


class DimensionError(BDenseError, ValueError):
    """Operand shapes do not satisfy an operation's requirements."""


class ContractError(BDenseError, ValueError):
    """A call violated an operation's preconditions."""


class ConfigError(BDenseError, ValueError):
    """A configuration value is missing, unknown, or inconsistent."""


class SingularityError(BDenseError, ArithmeticError):
    """An operation would divide by a vanishing schedule coefficient."""
