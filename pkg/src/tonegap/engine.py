"""Session protocol engine: a pure transition function over immutable state.

Each session is driven as (state, patient_input) -> (state, action). All
timing lives in the client: timed phases (settling, the post-stimulus pause,
grounding steps) complete when the client sends a ``proceed`` acknowledgement
stamped with its clock, so replaying the same inputs yields the same event
log byte for byte. The engine never sleeps, never reads a clock, and never
mutates state in place.

Branch order on every classified response: crisis, then exceeding zone
(step-back + grounding), then hold (approaching zone or layer shortfall),
then layer advancement. Crisis is terminal within a session; after two
grounding cycles the session closes rather than presenting a third stimulus.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping, Sequence

from .elicitation import (
    ActivationZone,
    ClassifierContext,
    ClassifierPort,
    PatientInput,
    PromptSet,
    ResponseClassification,
    RuleClassifier,
    ZoneSource,
    load_prompts,
    render_prompt,
    zone_for_activation,
)
from .errors import InvalidActivation, NotClosable, PhaseMismatch, TimestampRegression
from .events import EventKind, SessionEvent
from .ladder import (
    LadderPosition,
    SessionType,
    StimulusItem,
    StimulusLadder,
    is_stable_session,
    select_session_level,
)
from .safety import CrisisResource, GroundingScript, grounding_sequence, load_crisis_resources


class Phase(str, Enum):
    CHECKIN = "checkin"
    SETTLING = "settling"
    CONTACT_PRESENTED = "contact_presented"
    AWAITING_FEELING_TONE = "awaiting_feeling_tone"
    LAYER1 = "layer1"
    LAYER2 = "layer2"
    LAYER3 = "layer3"
    GROUNDING = "grounding"
    CRISIS = "crisis"
    CLOSING = "closing"
    CLOSED = "closed"


# phases that accept a response; everything else wants proceed or nothing
RESPONSE_PHASES = frozenset(
    {Phase.AWAITING_FEELING_TONE, Phase.LAYER1, Phase.LAYER2, Phase.GROUNDING}
)
TERMINAL_PHASES = frozenset({Phase.CRISIS, Phase.CLOSING, Phase.CLOSED, Phase.CHECKIN})


class ActionKind(str, Enum):
    SHOW_PROMPT = "show_prompt"
    SHOW_STIMULUS = "show_stimulus"
    BEGIN_GROUNDING = "begin_grounding"
    ENTER_CRISIS = "enter_crisis"
    ADVANCE_LAYER = "advance_layer"
    NEXT_CONTACT_EVENT = "next_contact_event"
    CLOSE_SESSION = "close_session"


@dataclass(frozen=True)
class EngineAction:
    """What the client should render next."""

    kind: ActionKind
    prompt_text: str | None = None
    stimulus_text: str | None = None
    stimulus_level: int | None = None
    layer: int | None = None
    pause_seconds: int | None = None
    resources: tuple[CrisisResource, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "prompt_text": self.prompt_text,
            "stimulus_text": self.stimulus_text,
            "stimulus_level": self.stimulus_level,
            "layer": self.layer,
            "pause_seconds": self.pause_seconds,
            "resources": [r.to_dict() for r in self.resources],
        }


@dataclass(frozen=True)
class EngineConfig:
    daily_events: int = 3
    weekly_deep_events: int = 8
    real_world_events: int = 1
    settling_seconds: int = 90
    stimulus_pause_seconds: int = 5
    max_reprompts_per_stage: int = 1
    max_grounding_cycles: int = 2
    layer3_gate_sessions: int = 3   # prior closed sessions that reached layer 2

    def event_budget(self, session_type: SessionType) -> int:
        if session_type is SessionType.DAILY:
            return self.daily_events
        if session_type is SessionType.WEEKLY_DEEP:
            return self.weekly_deep_events
        return self.real_world_events


@dataclass(frozen=True)
class SessionState:
    """Full session state; every field is derivable by replaying ``events``."""

    session_id: str
    session_type: SessionType
    phase: Phase
    stimulus_level: int
    opening_level: int
    event_budget: int
    events: tuple[SessionEvent, ...]
    checkin_activation: float
    prior_layer2_sessions: int = 0
    events_completed: int = 0
    current_layer_reached: int = 0
    reprompts: int = 0
    grounding_cycles: int = 0
    grounding_step: int = 0           # 1..3 while grounding, else 0
    consecutive_incoherent: int = 0
    last_zone: str = "within"
    last_label: str | None = None
    step_back_count: int = 0
    distress_reported: bool = False
    shown_counts: tuple[tuple[int, int], ...] = ()   # per-level round-robin cursors

    def shown_at(self, level: int) -> int:
        for lv, count in self.shown_counts:
            if lv == level:
                return count
        return 0

    def summary(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "session_type": self.session_type.value,
            "phase": self.phase.value,
            "stimulus_level": self.stimulus_level,
            "events_completed": self.events_completed,
            "event_budget": self.event_budget,
            "current_layer_reached": self.current_layer_reached,
        }


@dataclass(frozen=True)
class SessionRecord:
    """Closed-session summary; always derived from the event log by fold."""

    session_id: str
    session_type: SessionType
    stimulus_level: int        # level the session opened at
    opened_at_ms: int
    closed_at_ms: int
    stable: bool
    max_layer_reached: int
    opening_activation: float
    closing_activation: float
    step_back_count: int
    crisis: bool
    distress_reported: bool
    latencies_ms: tuple[int, ...]
    categories: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "session_type": self.session_type.value,
            "stimulus_level": self.stimulus_level,
            "opened_at_ms": self.opened_at_ms,
            "closed_at_ms": self.closed_at_ms,
            "stable": self.stable,
            "max_layer_reached": self.max_layer_reached,
            "opening_activation": self.opening_activation,
            "closing_activation": self.closing_activation,
            "step_back_count": self.step_back_count,
            "crisis": self.crisis,
            "distress_reported": self.distress_reported,
            "latencies_ms": list(self.latencies_ms),
            "categories": list(self.categories),
        }


def record_from_events(events: Sequence[SessionEvent]) -> SessionRecord:
    """Fold a closed session's events into its record.

    This is the single source of truth for records: the live engine and the
    store both call it, so a record loaded later is identical to the one
    produced at close.
    """
    checkin: SessionEvent | None = None
    closed: SessionEvent | None = None
    max_layer = 0
    step_backs = 0
    crisis = False
    distress = False
    closing_activation: float | None = None
    categories: list[str] = []
    latencies: list[int] = []

    anchor_ts: int | None = None     # first feeling-tone prompt of the open segment
    latency_taken = True             # no open segment yet
    last_response_ts: int | None = None

    for ev in events:
        kind = ev.kind
        if kind is EventKind.CHECKIN and checkin is None:
            checkin = ev
        elif kind is EventKind.SESSION_CLOSED:
            closed = ev
        elif kind is EventKind.LAYER_REACHED:
            max_layer = max(max_layer, int(ev.payload.get("layer", 0)))
        elif kind is EventKind.STEP_BACK:
            step_backs += 1
            if ev.payload.get("cause") == "distress_report":
                distress = True
        elif kind is EventKind.CRISIS_ENTER:
            crisis = True
        elif kind is EventKind.STIMULUS_SHOWN:
            category = str(ev.payload.get("category", ""))
            if category and category not in categories:
                categories.append(category)
            anchor_ts = None
            latency_taken = False
        elif kind is EventKind.PROMPT_SHOWN:
            if ev.payload.get("layer_target") == 0 and anchor_ts is None:
                anchor_ts = ev.timestamp_ms
                if latency_taken and not any(
                    e.kind is EventKind.STIMULUS_SHOWN for e in events
                ):
                    latency_taken = False   # real-world: prompt opens the segment
        elif kind is EventKind.PATIENT_RESPONSE:
            last_response_ts = ev.timestamp_ms
            activation = ev.payload.get("self_report_activation")
            if activation is not None:
                closing_activation = float(activation)
        elif kind is EventKind.CLASSIFICATION:
            if (
                not latency_taken
                and anchor_ts is not None
                and last_response_ts is not None
                and int(ev.payload.get("layer_depth", 0)) >= 1
            ):
                latencies.append(last_response_ts - anchor_ts)
                latency_taken = True

    if checkin is None or closed is None:
        raise ValueError("event log is not a closed session (missing checkin or close)")

    opening_activation = float(checkin.payload["activation"])
    return SessionRecord(
        session_id=str(checkin.payload["session_id"]),
        session_type=SessionType(checkin.payload["session_type"]),
        stimulus_level=int(checkin.payload["stimulus_level"]),
        opened_at_ms=checkin.timestamp_ms,
        closed_at_ms=closed.timestamp_ms,
        stable=is_stable_session(events),
        max_layer_reached=max_layer,
        opening_activation=opening_activation,
        closing_activation=closing_activation if closing_activation is not None else opening_activation,
        step_back_count=step_backs,
        crisis=crisis,
        distress_reported=distress,
        latencies_ms=tuple(latencies),
        categories=tuple(categories),
    )


class ProtocolEngine:
    """Binds one patient's ladder to the transition function's collaborators."""

    def __init__(
        self,
        ladder: StimulusLadder,
        classifier: ClassifierPort | None = None,
        config: EngineConfig | None = None,
        prompts: PromptSet | None = None,
        crisis_resources: tuple[CrisisResource, ...] | None = None,
    ) -> None:
        self.ladder = ladder
        self.classifier = classifier or RuleClassifier()
        self.config = config or EngineConfig()
        self.prompts = prompts or load_prompts()
        self.resources = (
            crisis_resources if crisis_resources is not None else load_crisis_resources()
        )
        self.grounding: GroundingScript = grounding_sequence(self.prompts)

    # --- session opening ----------------------------------------------------

    def start_session(
        self,
        position: LadderPosition,
        session_type: SessionType,
        checkin_activation: float,
        body_markers: Sequence[str] = (),
        *,
        session_id: str,
        started_at_ms: int,
        prior_layer2_sessions: int = 0,
        recap_text: str | None = None,
    ) -> tuple[SessionState, EngineAction]:
        if not 0.0 <= checkin_activation <= 10.0:
            raise InvalidActivation(f"check-in activation {checkin_activation} outside 0..10")

        level = select_session_level(position, session_type)
        checkin = SessionEvent(
            started_at_ms,
            EventKind.CHECKIN,
            {
                "session_id": session_id,
                "session_type": session_type.value,
                "stimulus_level": level,
                "activation": checkin_activation,
                "body_markers": list(body_markers),
            },
        )
        state = SessionState(
            session_id=session_id,
            session_type=session_type,
            phase=Phase.CHECKIN,
            stimulus_level=level,
            opening_level=level,
            event_budget=self.config.event_budget(session_type),
            events=(checkin,),
            checkin_activation=checkin_activation,
            prior_layer2_sessions=prior_layer2_sessions,
            last_zone=zone_for_activation(checkin_activation).value,
        )

        if session_type is SessionType.REAL_WORLD:
            # grounding-first: acknowledge, one breath; no stimulus, ever
            text = (
                f"{self.prompts['real_world_opening']} "
                f"{self.prompts['real_world_clinician_note']}"
            )
            state = replace(state, phase=Phase.CONTACT_PRESENTED)
            return state, EngineAction(ActionKind.SHOW_PROMPT, prompt_text=text)

        settle = SessionEvent(
            started_at_ms,
            EventKind.SETTLE_START,
            {"seconds": self.config.settling_seconds},
        )
        if session_type is SessionType.WEEKLY_DEEP:
            opening = self.prompts["weekly_opening"]
            text = f"{recap_text} {opening}" if recap_text else opening
        else:
            text = self.prompts["settling"]
        state = replace(state, phase=Phase.SETTLING, events=state.events + (settle,))
        return state, EngineAction(
            ActionKind.SHOW_PROMPT,
            prompt_text=text,
            pause_seconds=self.config.settling_seconds,
        )

    # --- the transition function --------------------------------------------

    def next_step(
        self, state: SessionState, patient_input: PatientInput
    ) -> tuple[SessionState, EngineAction]:
        if state.phase in TERMINAL_PHASES:
            raise PhaseMismatch(f"phase {state.phase.value} accepts no input")
        last_ts = state.events[-1].timestamp_ms if state.events else 0
        if patient_input.timestamp_ms < last_ts:
            raise TimestampRegression(
                f"input at {patient_input.timestamp_ms} precedes last event at {last_ts}"
            )

        phase = state.phase
        if phase is Phase.SETTLING:
            self._require_proceed(state, patient_input)
            return self._present_stimulus(
                state, patient_input.timestamp_ms, ActionKind.SHOW_STIMULUS
            )
        if phase is Phase.CONTACT_PRESENTED:
            self._require_proceed(state, patient_input)
            return self._show_feeling_tone_prompt(state, patient_input.timestamp_ms)
        if phase is Phase.AWAITING_FEELING_TONE:
            self._require_response(state, patient_input)
            return self._classify_and_branch(state, patient_input, prompted_layer=1)
        if phase is Phase.LAYER1:
            self._require_response(state, patient_input)
            return self._classify_and_branch(state, patient_input, prompted_layer=2)
        if phase is Phase.LAYER2:
            self._require_response(state, patient_input)
            return self._classify_and_branch(state, patient_input, prompted_layer=3)
        if phase is Phase.LAYER3:
            self._require_proceed(state, patient_input)
            return self._event_complete(state, patient_input.timestamp_ms)
        if phase is Phase.GROUNDING:
            return self._grounding_step(state, patient_input)
        raise PhaseMismatch(f"phase {phase.value} accepts no input")   # pragma: no cover

    # --- closing --------------------------------------------------------------

    def close_session(
        self, state: SessionState, closed_at_ms: int
    ) -> tuple[SessionState, SessionRecord]:
        if state.phase not in (Phase.CLOSING, Phase.CRISIS):
            raise NotClosable(f"cannot close from phase {state.phase.value}")
        if state.events and closed_at_ms < state.events[-1].timestamp_ms:
            raise TimestampRegression(
                f"close at {closed_at_ms} precedes last event at "
                f"{state.events[-1].timestamp_ms}"
            )
        crisis = state.phase is Phase.CRISIS
        closing_activation = state.checkin_activation
        for ev in reversed(state.events):
            if ev.kind is EventKind.PATIENT_RESPONSE:
                activation = ev.payload.get("self_report_activation")
                if activation is not None:
                    closing_activation = float(activation)
                    break
        provisional = SessionEvent(closed_at_ms, EventKind.SESSION_CLOSED, {"crisis": crisis})
        stable = is_stable_session(state.events + (provisional,))
        closed_event = SessionEvent(
            closed_at_ms,
            EventKind.SESSION_CLOSED,
            {
                "crisis": crisis,
                "stable": stable,
                "max_layer_reached": self._max_layer(state.events),
                "step_back_count": state.step_back_count,
                "closing_activation": closing_activation,
            },
        )
        closed_state = replace(
            state, phase=Phase.CLOSED, events=state.events + (closed_event,)
        )
        return closed_state, record_from_events(closed_state.events)

    # --- helpers ---------------------------------------------------------------

    @staticmethod
    def _max_layer(events: Sequence[SessionEvent]) -> int:
        layers = [
            int(e.payload.get("layer", 0))
            for e in events
            if e.kind is EventKind.LAYER_REACHED
        ]
        return max(layers, default=0)

    @staticmethod
    def _require_proceed(state: SessionState, patient_input: PatientInput) -> None:
        if not patient_input.proceed:
            raise PhaseMismatch(
                f"phase {state.phase.value} awaits a proceed acknowledgement"
            )

    @staticmethod
    def _require_response(state: SessionState, patient_input: PatientInput) -> None:
        if patient_input.proceed:
            raise PhaseMismatch(f"phase {state.phase.value} awaits a patient response")

    def _emit(self, state: SessionState, *events: SessionEvent) -> SessionState:
        return replace(state, events=state.events + events)

    def _next_item(self, state: SessionState) -> tuple[StimulusItem, int, SessionState]:
        """Round-robin within the current level; the cursor is per session."""
        level = state.stimulus_level
        items = self.ladder.items_at(level)
        count = state.shown_at(level)
        index = count % len(items)
        counts = tuple(
            (lv, c + 1) if lv == level else (lv, c) for lv, c in state.shown_counts
        )
        if all(lv != level for lv, _ in state.shown_counts):
            counts = counts + ((level, 1),)
        return items[index], index, replace(state, shown_counts=counts)

    def _present_stimulus(
        self, state: SessionState, ts: int, action_kind: ActionKind
    ) -> tuple[SessionState, EngineAction]:
        item, index, state = self._next_item(state)
        shown = SessionEvent(
            ts,
            EventKind.STIMULUS_SHOWN,
            {
                "level": item.level,
                "category": item.category,
                "text": item.text,
                "index": index,
                "event_index": state.events_completed,
            },
        )
        state = replace(
            self._emit(state, shown),
            phase=Phase.CONTACT_PRESENTED,
            current_layer_reached=0,
            reprompts=0,
        )
        return state, EngineAction(
            action_kind,
            stimulus_text=item.text,
            stimulus_level=item.level,
            pause_seconds=self.config.stimulus_pause_seconds,
        )

    def _show_feeling_tone_prompt(
        self, state: SessionState, ts: int
    ) -> tuple[SessionState, EngineAction]:
        text = render_prompt(0, self.prompts)
        prompt = SessionEvent(
            ts, EventKind.PROMPT_SHOWN, {"layer_target": 0, "text": text}
        )
        state = replace(self._emit(state, prompt), phase=Phase.AWAITING_FEELING_TONE)
        return state, EngineAction(ActionKind.SHOW_PROMPT, prompt_text=text)

    def _classify_and_branch(
        self, state: SessionState, patient_input: PatientInput, prompted_layer: int
    ) -> tuple[SessionState, EngineAction]:
        ts = patient_input.timestamp_ms
        response_payload = {
            k: v
            for k, v in patient_input.to_dict().items()
            if k != "timestamp_ms" and v is not None and v is not False
        }
        response_payload["prompted_layer"] = prompted_layer
        response = SessionEvent(ts, EventKind.PATIENT_RESPONSE, response_payload)

        context = ClassifierContext(
            prompted_layer=prompted_layer,
            last_zone=self._zone(state.last_zone),
            consecutive_incoherent=state.consecutive_incoherent,
        )
        cls = self.classifier.classify(context, patient_input)
        cls_event = SessionEvent(ts, EventKind.CLASSIFICATION, cls.to_dict())
        state = self._emit(state, response, cls_event)

        state = replace(
            state,
            consecutive_incoherent=state.consecutive_incoherent + 1 if cls.incoherent else 0,
            last_zone=cls.activation_zone.value,
            last_label=self._label_from(patient_input, cls) or state.last_label,
        )

        if cls.crisis:
            return self._enter_crisis(state, ts, cls)
        if cls.activation_zone.value == "exceeding":
            return self._step_back(state, ts, cls)

        # record any newly demonstrated layer, even when the zone holds us
        if cls.layer_depth > state.current_layer_reached:
            reached = SessionEvent(ts, EventKind.LAYER_REACHED, {"layer": cls.layer_depth})
            state = replace(
                self._emit(state, reached), current_layer_reached=cls.layer_depth
            )

        if state.session_type is SessionType.REAL_WORLD:
            return self._real_world_outcome(state, ts, prompted_layer)

        achieved = cls.layer_depth >= prompted_layer
        if cls.activation_zone.value == "approaching" or not achieved:
            return self._hold_or_move_on(state, ts, prompted_layer)
        return self._deepen(state, ts, prompted_layer)

    def _real_world_outcome(
        self, state: SessionState, ts: int, prompted_layer: int
    ) -> tuple[SessionState, EngineAction]:
        # compressed flow: one observation, one layer of seeing, then close
        if state.current_layer_reached >= 1:
            state = replace(state, phase=Phase.CLOSING, events_completed=1)
            return state, EngineAction(
                ActionKind.CLOSE_SESSION, prompt_text=self.prompts["real_world_confirm"]
            )
        if state.reprompts < self.config.max_reprompts_per_stage:
            return self._reprompt(state, ts, prompted_layer)
        state = replace(state, phase=Phase.CLOSING, events_completed=1)
        return state, EngineAction(
            ActionKind.CLOSE_SESSION, prompt_text=self.prompts["closing_ack"]
        )

    def _hold_or_move_on(
        self, state: SessionState, ts: int, prompted_layer: int
    ) -> tuple[SessionState, EngineAction]:
        if state.reprompts < self.config.max_reprompts_per_stage:
            return self._reprompt(state, ts, prompted_layer)
        return self._event_complete(state, ts)

    def _reprompt(
        self, state: SessionState, ts: int, prompted_layer: int
    ) -> tuple[SessionState, EngineAction]:
        target = 0 if prompted_layer == 1 else prompted_layer
        text = render_prompt(target, self.prompts, label=state.last_label)
        prompt = SessionEvent(
            ts, EventKind.PROMPT_SHOWN, {"layer_target": target, "text": text}
        )
        state = replace(self._emit(state, prompt), reprompts=state.reprompts + 1)
        return state, EngineAction(ActionKind.SHOW_PROMPT, prompt_text=text)

    def _deepen(
        self, state: SessionState, ts: int, reached_layer: int
    ) -> tuple[SessionState, EngineAction]:
        state = replace(state, reprompts=0)
        if reached_layer == 1:
            text = render_prompt(2, self.prompts, label=state.last_label)
            prompt = SessionEvent(ts, EventKind.PROMPT_SHOWN, {"layer_target": 2, "text": text})
            state = replace(self._emit(state, prompt), phase=Phase.LAYER1)
            return state, EngineAction(ActionKind.ADVANCE_LAYER, prompt_text=text, layer=1)
        if reached_layer == 2:
            if state.prior_layer2_sessions >= self.config.layer3_gate_sessions:
                text = render_prompt(3, self.prompts)
                prompt = SessionEvent(
                    ts, EventKind.PROMPT_SHOWN, {"layer_target": 3, "text": text}
                )
                state = replace(self._emit(state, prompt), phase=Phase.LAYER2)
                return state, EngineAction(
                    ActionKind.ADVANCE_LAYER, prompt_text=text, layer=2
                )
            return self._event_complete(state, ts)
        # layer 3 reached: acknowledge, then the client proceeds to the next event
        state = replace(state, phase=Phase.LAYER3)
        return state, EngineAction(
            ActionKind.ADVANCE_LAYER, prompt_text=self.prompts["layer3_ack"], layer=3
        )

    def _event_complete(self, state: SessionState, ts: int) -> tuple[SessionState, EngineAction]:
        state = replace(
            state,
            events_completed=state.events_completed + 1,
            current_layer_reached=0,
            reprompts=0,
        )
        return self._next_event_or_close(state, ts)

    def _next_event_or_close(
        self, state: SessionState, ts: int
    ) -> tuple[SessionState, EngineAction]:
        if state.events_completed >= state.event_budget:
            state = replace(state, phase=Phase.CLOSING)
            return state, EngineAction(
                ActionKind.CLOSE_SESSION, prompt_text=self.prompts["closing_ack"]
            )
        return self._present_stimulus(state, ts, ActionKind.NEXT_CONTACT_EVENT)

    def _step_back(
        self, state: SessionState, ts: int, cls: ResponseClassification
    ) -> tuple[SessionState, EngineAction]:
        from_level = state.stimulus_level
        to_level = max(1, from_level - 1)
        distress = cls.zone_source is ZoneSource.SELF_REPORT
        step = SessionEvent(
            ts,
            EventKind.STEP_BACK,
            {
                "from_level": from_level,
                "to_level": to_level,
                "cause": "distress_report" if distress else "tolerance_breach",
            },
        )
        first = SessionEvent(
            ts, EventKind.GROUNDING_STEP, {"step": 1, "text": self.grounding.steps[0]}
        )
        state = replace(
            self._emit(state, step, first),
            phase=Phase.GROUNDING,
            stimulus_level=to_level,
            step_back_count=state.step_back_count + 1,
            distress_reported=state.distress_reported or distress,
            events_completed=state.events_completed + 1,   # the hot event is spent
            grounding_cycles=state.grounding_cycles + 1,
            grounding_step=1,
            current_layer_reached=0,
            reprompts=0,
        )
        return state, EngineAction(
            ActionKind.BEGIN_GROUNDING, prompt_text=self.grounding.steps[0]
        )

    def _grounding_step(
        self, state: SessionState, patient_input: PatientInput
    ) -> tuple[SessionState, EngineAction]:
        ts = patient_input.timestamp_ms
        # crisis language during grounding still escalates
        if patient_input.is_response:
            context = ClassifierContext(
                prompted_layer=1,
                last_zone=self._zone(state.last_zone),
                consecutive_incoherent=0,
            )
            cls = self.classifier.classify(context, patient_input)
            response = SessionEvent(
                ts,
                EventKind.PATIENT_RESPONSE,
                {"free_text": patient_input.free_text, "during_grounding": True},
            )
            state = self._emit(state, response)
            if cls.crisis:
                return self._enter_crisis(state, ts, cls)
        if state.grounding_step < len(self.grounding.steps):
            step_index = state.grounding_step + 1
            text = self.grounding.steps[step_index - 1]
            step = SessionEvent(
                ts, EventKind.GROUNDING_STEP, {"step": step_index, "text": text}
            )
            state = replace(self._emit(state, step), grounding_step=step_index)
            return state, EngineAction(ActionKind.SHOW_PROMPT, prompt_text=text)
        # cycle finished: either resume at the stepped-down level or close
        state = replace(state, grounding_step=0)
        if state.grounding_cycles >= self.config.max_grounding_cycles:
            state = replace(state, phase=Phase.CLOSING)
            return state, EngineAction(
                ActionKind.CLOSE_SESSION, prompt_text=self.prompts["closing_ack"]
            )
        return self._next_event_or_close(state, ts)

    def _enter_crisis(
        self, state: SessionState, ts: int, cls: ResponseClassification
    ) -> tuple[SessionState, EngineAction]:
        cause = cls.crisis_cause.value if cls.crisis_cause else "crisis_lexicon"
        enter = SessionEvent(
            ts,
            EventKind.CRISIS_ENTER,
            {"cause": cause, "resources": [r.to_dict() for r in self.resources]},
        )
        state = replace(self._emit(state, enter), phase=Phase.CRISIS)
        return state, EngineAction(
            ActionKind.ENTER_CRISIS,
            prompt_text=self.prompts["crisis_support"],
            resources=self.resources,
        )

    @staticmethod
    def _zone(value: str) -> ActivationZone:
        return ActivationZone(value)

    @staticmethod
    def _label_from(
        patient_input: PatientInput, cls: ResponseClassification
    ) -> str | None:
        if patient_input.structured_choice is not None:
            return patient_input.structured_choice.value
        for item in cls.matched:
            if item.startswith("feeling_tone:"):
                return item.split(":", 1)[1]
        return None
