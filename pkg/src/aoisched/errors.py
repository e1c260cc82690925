class AoiSchedError(Exception):
    """Base class for all errors raised by aoisched."""


class ParameterError(AoiSchedError, ValueError):
    pass


class IngestionError(AoiSchedError, ValueError):
    """Raised when an input file cannot be parsed.

    ``line`` is the 1-based line number of the offending input, if known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConversionError(AoiSchedError, ValueError):
    pass


class CapacityError(AoiSchedError):
    pass
