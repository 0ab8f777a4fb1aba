"""Per-tick event records emitted by the world step.

Events are ordered by the phase that emitted them, then by subject id
within the phase. The payload key set is fixed per kind (see PAYLOAD_KEYS).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

BARRIER_APPROACHED = "BarrierApproached"
BARRIER_RESOLVED = "BarrierResolved"
TOUR_COMPLETED = "TourCompleted"
PARTICLE_CUE = "ParticleCue"
AGENT_SPAWNED = "AgentSpawned"
AGENT_DESPAWNED = "AgentDespawned"
TRANSIT_ARRIVED = "TransitArrived"
TRANSIT_DEPARTED = "TransitDeparted"
LANE_CHANGE = "LaneChange"

# Step phase that may emit each kind; used by the ordering audit.
PHASE_OF_KIND = {
    AGENT_SPAWNED: 1,
    TRANSIT_ARRIVED: 3,
    TRANSIT_DEPARTED: 3,
    LANE_CHANGE: 4,
    PARTICLE_CUE: 7,
    BARRIER_APPROACHED: 7,
    BARRIER_RESOLVED: 7,
    TOUR_COMPLETED: 7,
    AGENT_DESPAWNED: 8,
}

PAYLOAD_KEYS = {
    BARRIER_APPROACHED: {"barrier", "info_text", "via_interact"},
    BARRIER_RESOLVED: {"barrier", "mutation_kind"},
    TOUR_COMPLETED: set(),
    PARTICLE_CUE: {"barrier", "center", "radius"},
    AGENT_SPAWNED: {"agent", "agent_kind", "archetype"},
    AGENT_DESPAWNED: {"agent", "agent_kind", "reason"},
    TRANSIT_ARRIVED: {"line", "stop", "agent"},
    TRANSIT_DEPARTED: {"line", "stop", "agent"},
    LANE_CHANGE: {"agent", "from_lane", "to_lane", "front_gap", "rear_gap"},
}


@dataclass
class Event:
    tick: int
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"tick": self.tick, "kind": self.kind}
        obj.update(self.payload)
        return obj

    @staticmethod
    def from_json_obj(obj: dict[str, Any]) -> "Event":
        payload = {k: v for k, v in obj.items() if k not in ("tick", "kind")}
        return Event(tick=int(obj["tick"]), kind=str(obj["kind"]), payload=payload)
