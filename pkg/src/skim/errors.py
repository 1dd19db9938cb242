"""Exception hierarchy. All subclass ``SkimError`` plus the closest builtin."""


class SkimError(Exception):
    pass


class ParameterError(SkimError, ValueError):
    """Argument outside its allowed range."""


class ShapeError(SkimError, ValueError):
    """Dimension or channel-count mismatch."""


class FormatError(SkimError, ValueError):
    """Malformed file contents or raster values."""


class NumericError(SkimError, ArithmeticError):
    """Non-finite input or intermediate result."""


class UnsupportedOperation(SkimError, TypeError):
    """Operation not defined for the given kernel family."""
