"""Exception types raised by the protocol and adversary simulators."""


class ProtocolError(Exception):
    """Base class for protocol-level failures."""


class CopyLimitExceeded(ProtocolError):
    """More than ``r`` public-key copies were requested for one key."""


class UsageExhausted(ProtocolError):
    """Alice already ran the protocol ``r`` times with the current key."""


class ConsumedCopy(ProtocolError):
    """A public-key qubit was used after it had been consumed."""


class AttemptsExhausted(ProtocolError):
    """The adversary has no impersonation attempts left."""


class DimensionMismatch(ValueError):
    pass


class InvalidOperator(ValueError):
    """An operator failed a structural check (Hermitian, PSD, trace...)."""
