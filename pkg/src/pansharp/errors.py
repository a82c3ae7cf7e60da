"""Exception hierarchy. Each class maps to one CLI exit code."""


class PansharpError(Exception):
    exit_code = 1


class ParameterError(PansharpError, ValueError):
    """Invalid argument value (window size, level count, ...)."""

    exit_code = 1


class StructuralError(ParameterError):
    """Inputs whose shapes or band counts do not fit together."""


class DegenerateInputError(PansharpError, ValueError):
    """Input without the variance or rank an operation needs."""

    exit_code = 3


class RasterIOError(PansharpError, OSError):
    """Unreadable, malformed or inconsistent raster file."""

    exit_code = 2

    def __init__(self, message, path=None):
        self.path = None if path is None else str(path)
        if self.path is not None:
            message = f"{self.path}: {message}"
        super().__init__(message)
