"""Exception hierarchy shared by all modules."""


class SarRatioError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SarRatioError, ValueError):
    """Invalid argument, parameter or data (CLI exit code 3)."""


class DomainError(ValidationError):
    """Input outside the mathematical domain of an operation."""


class RasterFormatError(ValidationError):
    """Base class for RAS1 parse failures."""


class HeaderError(RasterFormatError):
    pass


class LengthMismatchError(RasterFormatError):
    pass


class NonFiniteError(RasterFormatError):
    pass


class DivergenceError(SarRatioError):
    """An iterative filter produced non-finite values."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite values at iteration {iteration}")


class NoTexturelessAreaError(SarRatioError):
    """No window passed the textureless-area selection (CLI exit code 4).

    The measure is only defined when at least one region of the image can be
    detected as textureless.
    """
