"""Exception types shared across the package."""


class TvcError(Exception):
    """Base class for all library errors."""


class FormatError(TvcError, ValueError):
    """A serialized artifact violates its format contract."""


class YuvError(FormatError):
    """Raw YUV stream is malformed (bad dimensions, truncation)."""


class QpmapError(FormatError):
    """QPMAP sidecar text is malformed."""


class NnwfError(FormatError):
    """NNWF weights file is malformed."""


class BitstreamError(FormatError):
    """TVC1 bitstream is malformed."""
