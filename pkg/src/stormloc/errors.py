"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4.
"""


class StormlocError(Exception):
    """Base class for all package errors."""


class ConfigError(StormlocError):
    """Invalid configuration: bad flags, incompatible shapes/presets, bad paths."""


class DataError(StormlocError):
    """Problems with input data: files, manifests, labels."""


class NumericError(StormlocError):
    """Numeric failure: non-finite losses, gradients or inputs."""


class OutOfBasinError(DataError):
    """A geographic point falls outside the configured basin or grid."""


class DimensionError(ConfigError):
    """Array dimensions incompatible with the requested operation."""


# File-format errors, shared by the dataset pack and checkpoint readers.

class FileFormatError(DataError):
    """Base class for binary file-format violations."""


class BadMagicError(FileFormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(FileFormatError):
    """File declares an unsupported format version."""


class TruncatedFileError(FileFormatError):
    """File ends before the declared payload is complete."""


class ChecksumError(FileFormatError):
    """Payload checksum does not match the trailing CRC32."""
