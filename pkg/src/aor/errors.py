"""Exception hierarchy shared across the runtime.

Every error raised by this package derives from :class:`AorError` so callers
can trap the whole family at the session boundary while tests assert on the
specific subclass.
"""

from __future__ import annotations


class AorError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDepthError(AorError):
    """Depth value is non-positive or non-finite."""


class OutOfBoundsError(AorError):
    """Pixel coordinate lies outside the frame."""


class SceneLoadError(AorError):
    """A scene directory failed validation; message names the offending file."""


class EmptyCropError(AorError):
    """Requested crop rectangle does not intersect the frame."""


class BackendUnavailableError(AorError):
    """An external detector or MLLM endpoint could not be reached."""


class StateTransitionError(AorError):
    """Illegal proxy lifecycle transition; no mutation was performed."""


class UnknownProxyError(AorError):
    """Referenced proxy id does not exist in the registry."""


class ValidationError(AorError):
    """Command or action arguments failed validation."""


class ClockError(AorError):
    """The session clock moved backwards."""


class PrivacyViolationError(AorError):
    """Attempt to build an outbound MLLM request carrying a denylisted label."""


class MllmTimeoutError(AorError):
    """Live MLLM endpoint did not answer within the configured timeout."""


class ReplayMissError(AorError):
    """Replay store holds no reply for the request fingerprint."""


class IndexParseError(AorError):
    """Comparer reply contained no integer tokens."""


class IndexRangeError(AorError):
    """Comparer reply contained an index outside [0, n)."""


class LogValidationError(AorError):
    """Event log violates sequencing or state-machine rules."""
