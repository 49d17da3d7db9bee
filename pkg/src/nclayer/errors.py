"""Exception hierarchy shared by the coding, protocol and simulation layers."""


class NcLayerError(Exception):
    """Base class for all errors raised by :mod:`nclayer`."""


class ZeroInverse(NcLayerError, ZeroDivisionError):
    """The zero element of a field has no multiplicative inverse."""


class BadParams(NcLayerError, ValueError):
    pass


class LengthMismatch(NcLayerError, ValueError):
    pass


class InsufficientSegments(NcLayerError):
    """Fewer than ``k`` segments of a codeword are available."""


class TooLarge(NcLayerError):
    """Exhaustive enumeration would exceed the configured bound."""


class MalformedBody(NcLayerError, ValueError):
    pass


class StaleAck(NcLayerError):
    """An NC acknowledgment refers to a codeword that is no longer outstanding."""


class UnexpectedData(NcLayerError):
    """Receiver-side TCP tried to send payload over a half-duplex connection."""


class NoMssOption(NcLayerError, ValueError):
    pass


class HandshakeTimeout(NcLayerError):
    pass


class PastEvent(NcLayerError, ValueError):
    pass


class ConfigError(NcLayerError, ValueError):
    pass


class IoError(NcLayerError, OSError):
    """An input or output file could not be read or written."""
