"""Safety layer: grounding script, crisis assessment, escalation resources.

Grounding runs whenever activation exceeds the tolerance window; crisis mode
is terminal within a session and always surfaces the escalation resource
list. The app is a complement to clinical care, never the sole support — the
resource list is validated at startup so a crisis can never surface an empty
pathway.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .elicitation import (
    DISSOCIATION_RUN,
    CrisisCause,
    PromptSet,
    ResponseClassification,
    load_prompts,
)
from .events import EventKind, SessionEvent
from ._data import load_packaged

RESOURCE_FILE = "crisis_resources.json"
GROUNDING_STEPS = 3


@dataclass(frozen=True)
class GroundingScript:
    """The three-phase grounding sequence: orient, slow the breath, name five."""

    steps: tuple[str, str, str]

    def __post_init__(self) -> None:
        if len(self.steps) != GROUNDING_STEPS or not all(s.strip() for s in self.steps):
            raise ValueError("grounding script needs exactly three non-empty steps")


def grounding_sequence(prompts: PromptSet | None = None) -> GroundingScript:
    prompts = prompts or load_prompts()
    return GroundingScript(steps=prompts.grounding_steps)


@dataclass(frozen=True)
class CrisisResource:
    label: str
    contact: str

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "contact": self.contact}


def load_crisis_resources(path: str | Path | None = None) -> tuple[CrisisResource, ...]:
    """Load and validate the escalation pathway list; empty or blank is a config error."""
    raw = load_packaged(RESOURCE_FILE, path)
    resources = tuple(
        CrisisResource(str(r["label"]), str(r["contact"])) for r in raw["resources"]
    )
    if not resources:
        raise ValueError("crisis resource list is empty")
    for resource in resources:
        if not resource.label.strip() or not resource.contact.strip():
            raise ValueError(f"crisis resource has blank fields: {resource}")
    return resources


@dataclass(frozen=True)
class CrisisAssessment:
    triggered: bool
    cause: CrisisCause | None
    resources: tuple[CrisisResource, ...]

    def __post_init__(self) -> None:
        if self.triggered and self.cause is None:
            raise ValueError("triggered assessment must name a cause")
        if not self.triggered and self.cause is not None:
            raise ValueError("untriggered assessment cannot carry a cause")


def assess_crisis(
    classification: ResponseClassification,
    recent_events: Sequence[SessionEvent],
    resources: tuple[CrisisResource, ...] | None = None,
) -> CrisisAssessment:
    """Decide whether this response puts the session into crisis mode.

    The classifier's crisis flag is authoritative; the event-log check is a
    belt-and-braces recount of the dissociation pattern (three consecutive
    unparseable responses) in case a classifier adapter under-reports it.
    """
    resources = resources if resources is not None else load_crisis_resources()
    if classification.crisis:
        cause = classification.crisis_cause or CrisisCause.CRISIS_LEXICON
        return CrisisAssessment(True, cause, resources)

    run = 0
    for event in reversed(recent_events):
        if event.kind is EventKind.CLASSIFICATION:
            if not event.payload.get("incoherent"):
                break
            run += 1
            if run >= DISSOCIATION_RUN:
                break
    if classification.incoherent and run + 1 >= DISSOCIATION_RUN:
        return CrisisAssessment(True, CrisisCause.DISSOCIATION_PATTERN, resources)
    return CrisisAssessment(False, None, ())
