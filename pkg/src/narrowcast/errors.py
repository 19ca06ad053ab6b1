"""Exception hierarchy for the narrowcast stack.

Everything raised on purpose by this package derives from NarrowcastError,
so callers (and the CLI) can catch one base class. Receiver-side noise is
deliberately NOT reported through exceptions: corrupt data groups become
scan outcomes, because a broadcast receiver must keep listening.
"""


class NarrowcastError(Exception):
    pass


# --- bundle / container ---

class IllegalNameError(NarrowcastError):
    """File name is empty, too long, contains NUL, starts with '/', or has '..'."""


class DuplicateNameError(NarrowcastError):
    pass


class EntryPointMissingError(NarrowcastError):
    pass


class BadMagicError(NarrowcastError):
    pass


class TruncatedError(NarrowcastError):
    pass


class TrailingGarbageError(NarrowcastError):
    pass


# --- compression ---

class UnsupportedCodecError(NarrowcastError):
    pass


class CorruptStreamError(NarrowcastError):
    pass


class SizeMismatchError(NarrowcastError):
    pass


# --- signaling / segmentation ---

class EntryPointTooLongError(NarrowcastError):
    pass


class UnsupportedVersionError(NarrowcastError):
    pass


class MalformedHeaderError(NarrowcastError):
    """Signaling bytes framed and CRC-clean but with an out-of-range field."""


class PayloadEmptyError(NarrowcastError):
    pass


class TooManySegmentsError(NarrowcastError):
    pass


class IncompleteObjectError(NarrowcastError):
    pass


class InconsistentSegmentsError(NarrowcastError):
    pass


# --- receiver / delivery ---

class OutOfOrderFrameError(NarrowcastError):
    pass


class NotCompleteError(NarrowcastError):
    """deliver() called before the receiver has a complete object pair."""


class DeliveryError(NarrowcastError):
    pass


class BodyCrcMismatchError(DeliveryError):
    """Reassembled body fails its announced CRC-32; receiver should keep listening."""


class DecompressFailureError(DeliveryError):
    pass


class ContainerParseFailureError(DeliveryError):
    pass


# --- metrics / config ---

class ZeroBitrateError(NarrowcastError):
    pass


class ConfigError(NarrowcastError):
    pass
