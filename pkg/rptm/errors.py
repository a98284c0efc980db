"""
RPTM Errors
Exception hierarchy shared by every pipeline stage.
"""

from typing import Optional


class RPTMError(Exception):
    """Base error for all pipeline failures"""
    pass


class IoError(RPTMError, OSError):
    """A file could not be read or written"""
    pass


class FormatError(RPTMError):
    """Raised when a file does not follow its declared format"""
    def __init__(self, message: str, offset: Optional[int] = None, filename: Optional[str] = None):
        self.message = message
        self.offset = offset
        self.filename = filename
        location = filename or '<input>'
        if offset is not None:
            location = f"{location}:{offset}"
        super().__init__(f"{location}: {message}")


class DimensionError(RPTMError, ValueError):
    """Shapes or dimensions do not agree"""
    pass


class ConfigError(RPTMError, ValueError):
    """Invalid parameter or configuration document"""
    pass


class ManifestError(ConfigError):
    """Dataset manifest is malformed or unusable for the request"""
    pass


class CorruptError(RPTMError):
    """A stored artifact fails its integrity checks"""
    pass


class NoNegativeError(RPTMError):
    """Batch holds no instance with an identity different from the anchor"""
    pass


class HashMismatchError(RPTMError):
    """An artifact was built from a different manifest"""
    def __init__(self, expected: int, found: int, what: str = "artifact"):
        self.expected = expected
        self.found = found
        super().__init__(
            f"{what} was built for manifest {found:016x}, expected {expected:016x}"
        )


class OutOfRangeError(RPTMError, IndexError):
    """Index outside the valid range"""
    pass
