"""Stimulus calibration ladder: intake profile, six-level build, advancement rules.

The ladder is the exposure-titration backbone. Six intensity levels run from
conceptual (1) to strongly activating (6). Daily practice works levels 1..5;
level 6 is reserved for weekly deep sessions, which always present one level
above the current daily position. Advancement is conservative: three
consecutive stable sessions at the current level, evaluated at session close.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import EmptyProfile, LevelMismatch, MissingTemplates
from .events import EventKind, SessionEvent
from ._data import load_packaged

LEVEL_MIN = 1
LEVEL_MAX = 6
DAILY_LEVEL_CAP = 5          # level 6 never becomes the daily working level
ADVANCE_AFTER = 3            # consecutive stable sessions required to advance
TEMPLATE_FILE = "stimulus_templates.json"


class PriorPractice(str, Enum):
    NONE = "none"
    SOME = "some"
    EXTENSIVE = "extensive"


class SessionType(str, Enum):
    DAILY = "daily"
    WEEKLY_DEEP = "weekly_deep"
    REAL_WORLD = "real_world"


@dataclass(frozen=True)
class Trigger:
    """One reported trigger category with its 0..10 intensity rating."""

    category: str
    intensity: float

    def __post_init__(self) -> None:
        if not self.category.strip():
            raise ValueError("trigger category must be non-empty")
        if not 0.0 <= self.intensity <= 10.0:
            raise ValueError(f"trigger intensity {self.intensity} outside 0..10")


@dataclass(frozen=True)
class PatientProfile:
    """Intake profile the ladder is built from."""

    patient_id: str
    trauma_domain: str
    triggers: tuple[Trigger, ...]
    avoidance_patterns: tuple[str, ...] = ()
    prior_practice: PriorPractice = PriorPractice.NONE
    baseline_severity: int = 0   # symptom checklist total, 0..80

    def __post_init__(self) -> None:
        if not 0 <= self.baseline_severity <= 80:
            raise ValueError(f"baseline severity {self.baseline_severity} outside 0..80")

    def ranked_categories(self) -> tuple[str, ...]:
        """Trigger categories by descending intensity; ties keep intake order."""
        order = sorted(
            range(len(self.triggers)),
            key=lambda i: (-self.triggers[i].intensity, i),
        )
        return tuple(self.triggers[i].category for i in order)

    def to_dict(self) -> dict[str, Any]:
        return {
            "patient_id": self.patient_id,
            "trauma_domain": self.trauma_domain,
            "triggers": [
                {"category": t.category, "intensity": t.intensity} for t in self.triggers
            ],
            "avoidance_patterns": list(self.avoidance_patterns),
            "prior_practice": self.prior_practice.value,
            "baseline_severity": self.baseline_severity,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PatientProfile":
        return cls(
            patient_id=str(data["patient_id"]),
            trauma_domain=str(data["trauma_domain"]),
            triggers=tuple(
                Trigger(str(t["category"]), float(t["intensity"]))
                for t in data.get("triggers", [])
            ),
            avoidance_patterns=tuple(data.get("avoidance_patterns", [])),
            prior_practice=PriorPractice(data.get("prior_practice", "none")),
            baseline_severity=int(data.get("baseline_severity", 0)),
        )


@dataclass(frozen=True)
class StimulusItem:
    level: int
    category: str
    text: str


@dataclass(frozen=True)
class StimulusLadder:
    """Patient-specific ladder: every level 1..6 carries at least one item."""

    items: tuple[StimulusItem, ...]
    built_from: str   # patient id

    def __post_init__(self) -> None:
        levels = {item.level for item in self.items}
        missing = [lv for lv in range(LEVEL_MIN, LEVEL_MAX + 1) if lv not in levels]
        if missing:
            raise MissingTemplates(f"ladder for {self.built_from} missing levels {missing}")

    def items_at(self, level: int) -> tuple[StimulusItem, ...]:
        return tuple(item for item in self.items if item.level == level)

    def to_dict(self) -> dict[str, Any]:
        return {
            "built_from": self.built_from,
            "items": [
                {"level": i.level, "category": i.category, "text": i.text}
                for i in self.items
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StimulusLadder":
        return cls(
            items=tuple(
                StimulusItem(int(i["level"]), str(i["category"]), str(i["text"]))
                for i in data["items"]
            ),
            built_from=str(data["built_from"]),
        )


# --- templates ---------------------------------------------------------------

@dataclass(frozen=True)
class StimulusTemplate:
    domain: str
    level: int
    category_slot: str   # a trigger category, or "*" for any
    text: str            # may contain a {category} placeholder


def load_templates(path: str | Path | None = None) -> dict[str, list[StimulusTemplate]]:
    """Template sets keyed by trauma domain (packaged defaults unless a path is given)."""
    raw = load_packaged(TEMPLATE_FILE, path)
    out: dict[str, list[StimulusTemplate]] = {}
    for domain, entries in raw["domains"].items():
        out[domain] = [
            StimulusTemplate(domain, int(e["level"]), str(e["category_slot"]), str(e["text"]))
            for e in entries
        ]
    return out


def build_ladder(
    profile: PatientProfile,
    templates: Mapping[str, Sequence[StimulusTemplate]],
) -> StimulusLadder:
    """Instantiate the six-level ladder for one patient.

    Per level: every template whose slot matches a reported trigger category is
    taken, ordered by the category's intensity rank; levels with no matching
    slot fall back to wildcard templates instantiated with the top-ranked
    category. A level with neither is a template-set defect.
    """
    if not profile.triggers:
        raise EmptyProfile(f"profile {profile.patient_id} has no triggers")
    domain = templates.get(profile.trauma_domain)
    if not domain:
        raise MissingTemplates(f"no template set for domain {profile.trauma_domain!r}")

    ranked = profile.ranked_categories()
    rank = {c: i for i, c in enumerate(ranked)}
    items: list[StimulusItem] = []
    for level in range(LEVEL_MIN, LEVEL_MAX + 1):
        at_level = [t for t in domain if t.level == level]
        specific = [t for t in at_level if t.category_slot in rank]
        if specific:
            specific.sort(key=lambda t: rank[t.category_slot])
            chosen = [(t, t.category_slot) for t in specific]
        else:
            wildcards = [t for t in at_level if t.category_slot == "*"]
            if not wildcards:
                raise MissingTemplates(
                    f"domain {profile.trauma_domain!r} has no usable template at level {level}"
                )
            chosen = [(t, ranked[0]) for t in wildcards]
        for template, category in chosen:
            text = template.text.replace("{category}", category)
            items.append(StimulusItem(level, category, text))
    return StimulusLadder(items=tuple(items), built_from=profile.patient_id)


# --- position and advancement ------------------------------------------------

class LadderAction(str, Enum):
    ADVANCE = "advance"
    HOLD = "hold"
    REGRESS = "regress"


class DecisionReason(str, Enum):
    THREE_STABLE = "three_stable"
    INSUFFICIENT_STABLE = "insufficient_stable"
    TOLERANCE_BREACH = "tolerance_breach"
    DISTRESS_REPORT = "distress_report"


@dataclass(frozen=True)
class LadderDecision:
    action: LadderAction
    new_level: int
    reason: DecisionReason


@dataclass(frozen=True)
class SessionOutcome:
    """The slice of a closed session the ladder cares about."""

    session_id: str
    level: int
    stable: bool


@dataclass(frozen=True)
class LadderPosition:
    """Where daily practice currently sits, plus the stability streak."""

    current_daily_level: int = LEVEL_MIN
    consecutive_stable_sessions: int = 0
    history: tuple[SessionOutcome, ...] = field(default=())

    def __post_init__(self) -> None:
        if not LEVEL_MIN <= self.current_daily_level <= DAILY_LEVEL_CAP:
            raise ValueError(f"daily level {self.current_daily_level} outside 1..{DAILY_LEVEL_CAP}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "current_daily_level": self.current_daily_level,
            "consecutive_stable_sessions": self.consecutive_stable_sessions,
        }


def select_session_level(position: LadderPosition, session_type: SessionType) -> int:
    """Stimulus level for a new session: weekly deep runs one above daily."""
    if session_type is SessionType.WEEKLY_DEEP:
        return min(position.current_daily_level + 1, LEVEL_MAX)
    return position.current_daily_level


def record_session_outcome(position: LadderPosition, outcome: SessionOutcome) -> LadderPosition:
    """Count one closed session toward the streak.

    Only sessions run at the current daily level count; anything else (weekly
    deep at daily+1, stale records) is a LevelMismatch and must not touch the
    streak.
    """
    if outcome.level != position.current_daily_level:
        raise LevelMismatch(
            f"outcome at level {outcome.level}, daily level is {position.current_daily_level}"
        )
    streak = position.consecutive_stable_sessions + 1 if outcome.stable else 0
    return replace(
        position,
        consecutive_stable_sessions=streak,
        history=position.history + (outcome,),
    )


def evaluate_advancement(position: LadderPosition) -> LadderDecision:
    """Advance exactly when the streak reaches three below the daily cap."""
    if (
        position.consecutive_stable_sessions >= ADVANCE_AFTER
        and position.current_daily_level < DAILY_LEVEL_CAP
    ):
        return LadderDecision(
            LadderAction.ADVANCE, position.current_daily_level + 1, DecisionReason.THREE_STABLE
        )
    return LadderDecision(
        LadderAction.HOLD, position.current_daily_level, DecisionReason.INSUFFICIENT_STABLE
    )


def regress_decision(
    position: LadderPosition,
    reason: DecisionReason = DecisionReason.TOLERANCE_BREACH,
) -> LadderDecision:
    """Step back one level (floor 1) after a tolerance breach or distress report."""
    return LadderDecision(
        LadderAction.REGRESS, max(LEVEL_MIN, position.current_daily_level - 1), reason
    )


def apply_decision(position: LadderPosition, decision: LadderDecision) -> LadderPosition:
    """Apply a decision; any level change resets the stability streak."""
    if decision.action is LadderAction.HOLD:
        return position
    return replace(
        position,
        current_daily_level=decision.new_level,
        consecutive_stable_sessions=0,
    )


def fold_session(
    position: LadderPosition,
    outcome: SessionOutcome,
    *,
    step_back: bool,
    distress_reported: bool = False,
) -> tuple[LadderPosition, LadderDecision]:
    """Fold one closed session into the position; the single entry point callers use.

    Step-backs regress the daily position no matter what level the session ran
    at — a breach at weekly level is evidence the daily level is too hot.
    Otherwise the outcome counts only at the daily level (weekly deep sessions
    pass through without touching the streak) and advancement is evaluated.
    """
    if step_back:
        reason = (
            DecisionReason.DISTRESS_REPORT if distress_reported else DecisionReason.TOLERANCE_BREACH
        )
        decision = regress_decision(position, reason)
        regressed = replace(
            apply_decision(position, decision),
            history=position.history + (outcome,),
        )
        return regressed, decision
    try:
        position = record_session_outcome(position, outcome)
    except LevelMismatch:
        return position, LadderDecision(
            LadderAction.HOLD, position.current_daily_level, DecisionReason.INSUFFICIENT_STABLE
        )
    decision = evaluate_advancement(position)
    return apply_decision(position, decision), decision


def replay_position(
    folds: Iterable[tuple[SessionOutcome, bool, bool]],
    start: LadderPosition | None = None,
) -> LadderPosition:
    """Rebuild the position from (outcome, step_back, distress) tuples in order."""
    position = start or LadderPosition()
    for outcome, step_back, distress in folds:
        position, _ = fold_session(
            position, outcome, step_back=step_back, distress_reported=distress
        )
    return position


# --- stability ---------------------------------------------------------------

def is_stable_session(events: Sequence[SessionEvent]) -> bool:
    """The stability definition advancement rests on.

    A closed session is stable when every contact event reached layer >= 1,
    no step-back occurred, no crisis occurred, and every classified activation
    zone stayed within tolerance. A session with no contact events demonstrates
    nothing and is not stable.
    """
    any_contact = False
    contact_open = False
    contact_layered = False
    closed_clean = False
    for ev in events:
        kind = ev.kind
        if kind is EventKind.STEP_BACK or kind is EventKind.CRISIS_ENTER:
            return False
        if kind is EventKind.CLASSIFICATION:
            if ev.payload.get("activation_zone") != "within":
                return False
        elif kind is EventKind.STIMULUS_SHOWN or (
            # real-world sessions show no stimulus; their single contact event
            # opens at the feeling-tone prompt instead
            kind is EventKind.PROMPT_SHOWN
            and ev.payload.get("layer_target") == 0
            and not contact_open
        ):
            if contact_open and not contact_layered:
                return False
            any_contact = True
            contact_open = True
            contact_layered = False
        elif kind is EventKind.LAYER_REACHED:
            if ev.payload.get("layer", 0) >= 1:
                contact_layered = True
        elif kind is EventKind.SESSION_CLOSED:
            closed_clean = not ev.payload.get("crisis", False)
    if not any_contact or (contact_open and not contact_layered):
        return False
    return closed_clean
