"""Exception types shared across the simulator."""

from __future__ import annotations


class SimError(Exception):
    """Base class for all simulator errors."""


class MalformedDocument(SimError):
    """Input file is not parseable or structurally invalid."""


class UnknownKind(SimError):
    """A feature names a kind outside the supported enum."""


class GeometryError(SimError):
    """Bad geometry: too few vertices, self-intersection, out of bounds."""


class DanglingReference(SimError):
    """A feature or spec references an id / level that does not exist."""


class AlternativeUnavailable(DanglingReference):
    """A fallback connector named by a scenario is itself non-operational."""


class StartPoseInvalid(SimError):
    """Scenario start pose is not on a walkable surface."""


class TickMismatch(SimError):
    """Input frame tick does not match the world tick."""


class LogGap(SimError):
    """Input log is missing a tick (must be contiguous from 0)."""


class EmptyGraph(SimError):
    """Requested navigation mode has no supporting features."""


class UnreachableBarrier(SimError):
    """No walk path exists from the start pose to a barrier trigger."""


class AlreadyApplied(SimError):
    """A barrier resolution was applied twice."""


class UnknownHead(SimError):
    """Signal head id not present in the signal bank."""


class UnknownStop(SimError):
    """Stop id not served by any line of the schedule."""


class DecodeError(SimError):
    """A wire frame could not be decoded."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"decode error at offset {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class SessionClosed(SimError):
    """Operation on a session that has already shut down."""
