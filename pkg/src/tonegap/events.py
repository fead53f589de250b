"""Session event vocabulary.

Every observable thing that happens in a session is one append-only event.
Session records, ladder stability, progress proxies, and the simulator's
invariant checker are all folds over this log — nothing else is state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping


class EventKind(str, Enum):
    INTAKE_COMPLETED = "intake_completed"
    CHECKIN = "checkin"
    SETTLE_START = "settle_start"
    STIMULUS_SHOWN = "stimulus_shown"
    PROMPT_SHOWN = "prompt_shown"
    PATIENT_RESPONSE = "patient_response"
    CLASSIFICATION = "classification"
    STEP_BACK = "step_back"
    GROUNDING_STEP = "grounding_step"
    CRISIS_ENTER = "crisis_enter"
    LAYER_REACHED = "layer_reached"
    SESSION_CLOSED = "session_closed"


@dataclass(frozen=True)
class SessionEvent:
    """One immutable log entry. ``payload`` keys depend on ``kind``."""

    timestamp_ms: int
    kind: EventKind
    payload: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp_ms": self.timestamp_ms,
            "kind": self.kind.value,
            "payload": dict(self.payload),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SessionEvent":
        return cls(
            timestamp_ms=int(data["timestamp_ms"]),
            kind=EventKind(data["kind"]),
            payload=dict(data.get("payload", {})),
        )


def event_json(session_id: str, event: SessionEvent) -> str:
    """Canonical one-line JSON for an event (stable key order, no spaces)."""
    doc = {"session_id": session_id, **event.to_dict()}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))
