"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`DynImageError`, and additionally from the closest builtin
(``ValueError``, ``IndexError``, ``OSError``) so callers can catch either.
"""


class DynImageError(Exception):
    """Base class for all package errors."""


class EmptyInput(DynImageError, ValueError):
    pass


class DimensionMismatch(DynImageError, ValueError):
    pass


class IndexOutOfRange(DynImageError, IndexError):
    pass


class NonFiniteValue(DynImageError, ValueError):
    pass


class InvalidDepth(DynImageError, ValueError):
    pass


class NegativeLambda(DynImageError, ValueError):
    pass


class ChannelMismatch(DynImageError, ValueError):
    pass


class ShapeMismatch(DynImageError, ValueError):
    pass


class InvalidLabel(DynImageError, ValueError):
    pass


class InvalidProbability(DynImageError, ValueError):
    pass


class ConfigError(DynImageError, ValueError):
    """Invalid job configuration (bad flag combination, non-positive counts)."""


# NIfTI ingestion

class NiftiError(DynImageError, ValueError):
    """Malformed or unsupported NIfTI-1 content."""


class TruncatedHeader(NiftiError):
    pass


class BadMagic(NiftiError):
    pass


class UnsupportedDatatype(NiftiError):
    pass


class UnsupportedRank(NiftiError):
    pass


class InvalidHeader(NiftiError):
    """Header fields that are individually decodable but mutually inconsistent."""


class SizeMismatch(NiftiError):
    pass


class NonFiniteVoxel(NiftiError, NonFiniteValue):
    pass


class NiftiIOError(DynImageError, OSError):
    pass
