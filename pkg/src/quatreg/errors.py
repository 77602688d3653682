"""Exception types shared across the package."""


class ShapeMismatch(ValueError):
    """Operands have incompatible shapes."""


class FactorizationFailure(ArithmeticError):
    """The ridge system matrix could not be factorized (numerically singular)."""


class NonFinite(ArithmeticError):
    """A solver iterate contains NaN or Inf."""


class UnsupportedFormat(ValueError):
    """Image file is not an 8-bit RGB PNG or binary PPM."""


class ConfigError(ValueError):
    """Experiment configuration is invalid."""
