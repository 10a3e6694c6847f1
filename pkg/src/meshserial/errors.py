"""Exception types shared across the package."""


class MeshParseError(ValueError):
    """Mesh text could not be parsed. ``lineno`` is 1-based, or None."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class CorruptDataError(ValueError):
    """A permutation file or compressed stream failed validation."""


class ExternalCodecError(RuntimeError):
    """An external compressor executable is missing or failed."""
