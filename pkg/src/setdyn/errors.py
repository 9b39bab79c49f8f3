"""Exception types and the explicit empty-set marker."""

from dataclasses import dataclass


class SetDynError(Exception):
    """Base class for all toolkit errors."""


class InvalidCover(SetDynError, ValueError):
    pass


class DomainMismatch(SetDynError, ValueError):
    pass


class DepthMismatch(SetDynError, ValueError):
    pass


class UnsupportedParameter(SetDynError, ValueError):
    pass


class InsufficientEvidence(SetDynError):
    pass


class NotInvariant(SetDynError):
    pass


class NotAbsorbing(SetDynError):
    """An image enclosure leaves the working domain."""

    def __init__(self, message, box=None):
        super().__init__(message)
        self.box = box


class RefinementLimit(SetDynError):
    """Depth limit reached; ``partial`` holds whatever was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NonConvergence(SetDynError):
    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class EventLost(SetDynError):
    """Bisection lost track of the event; both sub-brackets are attached."""

    def __init__(self, message, brackets=()):
        super().__init__(message)
        self.brackets = tuple(brackets)


@dataclass(frozen=True)
class EmptySet:
    """Stand-in for an empty result (covers themselves are never empty)."""

    reason: str = "empty"

    def __bool__(self):
        return False

    def __len__(self):
        return 0


GLOBALLY_ATTRACTIVE = EmptySet("globally attractive")
