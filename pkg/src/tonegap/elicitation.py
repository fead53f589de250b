"""Feeling-tone elicitation: inputs, prompts, and response classification.

The therapeutic core. Patient responses are classified on two axes — layer
depth reached (0..3) and activation zone (within / approaching / exceeding) —
plus a crisis flag. Classification drives every engine branch, so the
classifier is a pluggable port with a conformance contract; the default is a
deterministic rule/lexicon implementation. A model-backed adapter can replace
it later by emitting the same structured output (see ADAPTER_OUTPUT_SCHEMA)
and passing ``check_conformance``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence

from .errors import NegativeInterval
from .events import SessionEvent
from ._data import load_packaged

PROMPT_FILE = "prompts.json"
LEXICON_FILE = "lexicons.json"

# activation zone boundaries on the 0..10 self-report scale
WITHIN_MAX = 7.0         # <= within tolerance
APPROACHING_MAX = 8.5    # <= approaching; above: exceeding
CRISIS_ACTIVATION = 10.0
DISSOCIATION_RUN = 3     # consecutive unparseable responses that read as dissociation

LAYER_MIN = 0
LAYER_MAX = 3


class FeelingTone(str, Enum):
    PLEASANT = "pleasant"
    UNPLEASANT = "unpleasant"
    NEUTRAL = "neutral"


class LayerAck(str, Enum):
    """Structured acknowledgements the UI offers at deeper layers."""

    LAYER2_CONFIRM = "layer2_confirm"
    LAYER3_BELIEF_NAMED = "layer3_belief_named"


class ActivationZone(str, Enum):
    WITHIN = "within"
    APPROACHING = "approaching"
    EXCEEDING = "exceeding"


_ZONE_SEVERITY = {
    ActivationZone.WITHIN: 0,
    ActivationZone.APPROACHING: 1,
    ActivationZone.EXCEEDING: 2,
}


def zone_for_activation(
    value: float,
    within_max: float = WITHIN_MAX,
    approaching_max: float = APPROACHING_MAX,
) -> ActivationZone:
    if value <= within_max:
        return ActivationZone.WITHIN
    if value <= approaching_max:
        return ActivationZone.APPROACHING
    return ActivationZone.EXCEEDING


@dataclass(frozen=True)
class PatientInput:
    """One patient turn. Either a timing acknowledgement or a response.

    ``proceed`` is the client saying a timed phase elapsed (settling, the
    post-stimulus pause, a grounding step); it carries only the timestamp and
    is mutually exclusive with the response fields. Timestamps are client
    clock, milliseconds.
    """

    timestamp_ms: int
    structured_choice: FeelingTone | None = None
    layer_ack: LayerAck | None = None
    free_text: str | None = None
    self_report_activation: float | None = None
    proceed: bool = False

    def __post_init__(self) -> None:
        has_response = (
            self.structured_choice is not None
            or self.layer_ack is not None
            or self.free_text is not None
            or self.self_report_activation is not None
        )
        if self.proceed and has_response:
            raise ValueError("proceed acknowledgement cannot carry response fields")
        if not self.proceed and not has_response:
            raise ValueError("input carries neither a response nor a proceed flag")
        if self.self_report_activation is not None and not (
            0.0 <= self.self_report_activation <= 10.0
        ):
            raise ValueError(
                f"self-report activation {self.self_report_activation} outside 0..10"
            )

    @property
    def is_response(self) -> bool:
        return not self.proceed

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp_ms": self.timestamp_ms,
            "structured_choice": self.structured_choice.value if self.structured_choice else None,
            "layer_ack": self.layer_ack.value if self.layer_ack else None,
            "free_text": self.free_text,
            "self_report_activation": self.self_report_activation,
            "proceed": self.proceed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PatientInput":
        choice = data.get("structured_choice")
        ack = data.get("layer_ack")
        activation = data.get("self_report_activation")
        return cls(
            timestamp_ms=int(data["timestamp_ms"]),
            structured_choice=FeelingTone(choice) if choice else None,
            layer_ack=LayerAck(ack) if ack else None,
            free_text=data.get("free_text"),
            self_report_activation=float(activation) if activation is not None else None,
            proceed=bool(data.get("proceed", False)),
        )


class CrisisCause(str, Enum):
    MAX_ACTIVATION = "max_activation"
    CRISIS_LEXICON = "crisis_lexicon"
    DISSOCIATION_PATTERN = "dissociation_pattern"


class ZoneSource(str, Enum):
    SELF_REPORT = "self_report"
    LEXICON = "lexicon"
    CARRIED = "carried"


@dataclass(frozen=True)
class ResponseClassification:
    """Two-axis read of one response, with provenance for the audit log."""

    layer_depth: int
    activation_zone: ActivationZone
    crisis: bool
    confidence: float
    matched: tuple[str, ...] = ()
    zone_source: ZoneSource = ZoneSource.CARRIED
    crisis_cause: CrisisCause | None = None
    incoherent: bool = False

    def __post_init__(self) -> None:
        if not LAYER_MIN <= self.layer_depth <= LAYER_MAX:
            raise ValueError(f"layer depth {self.layer_depth} outside 0..3")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside 0..1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "layer_depth": self.layer_depth,
            "activation_zone": self.activation_zone.value,
            "crisis": self.crisis,
            "confidence": self.confidence,
            "matched": list(self.matched),
            "zone_source": self.zone_source.value,
            "crisis_cause": self.crisis_cause.value if self.crisis_cause else None,
            "incoherent": self.incoherent,
        }


@dataclass(frozen=True)
class ClassifierContext:
    """What the engine knows when it asks for a classification.

    ``prompted_layer`` is the layer the active prompt is eliciting (the
    feeling-tone prompt elicits layer 1). ``last_zone`` carries forward when a
    response gives no activation signal. ``consecutive_incoherent`` counts the
    unparseable run before this input.
    """

    prompted_layer: int
    last_zone: ActivationZone = ActivationZone.WITHIN
    consecutive_incoherent: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.prompted_layer <= LAYER_MAX:
            raise ValueError(f"prompted layer {self.prompted_layer} outside 1..3")


class ClassifierPort(Protocol):
    """Classification contract. Implementations must be deterministic, never
    award a layer above the prompted one, and pass ``check_conformance``."""

    def classify(
        self, context: ClassifierContext, patient_input: PatientInput
    ) -> ResponseClassification: ...


# Structured output contract for a model-backed classifier adapter. An adapter
# prompts its model to emit exactly this object, parses it, and returns a
# ResponseClassification; conformance is checked with the same suite as the
# rule classifier.
ADAPTER_OUTPUT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["layer_depth", "activation_zone", "crisis", "confidence"],
    "properties": {
        "layer_depth": {"type": "integer", "minimum": 0, "maximum": 3},
        "activation_zone": {"enum": ["within", "approaching", "exceeding"]},
        "crisis": {"type": "boolean"},
        "confidence": {"type": "number", "minimum": 0, "maximum": 1},
        "matched": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Lexicons:
    feeling_tone: tuple[str, ...]
    decentering: tuple[str, ...]
    belief: tuple[str, ...]
    escalation: tuple[tuple[str, ActivationZone], ...]
    crisis: tuple[str, ...]


def load_lexicons(path: str | Path | None = None) -> Lexicons:
    raw = load_packaged(LEXICON_FILE, path)
    return Lexicons(
        feeling_tone=tuple(raw["feeling_tone"]),
        decentering=tuple(raw["decentering"]),
        belief=tuple(raw["belief"]),
        escalation=tuple(
            (e["entry"], ActivationZone(e["zone"])) for e in raw["escalation"]
        ),
        crisis=tuple(raw["crisis"]),
    )


def _matches(text: str, entries: Sequence[str]) -> list[str]:
    return [entry for entry in entries if entry in text]


class RuleClassifier:
    """Deterministic lexicon classifier; the packaged default for the port."""

    def __init__(
        self,
        lexicons: Lexicons | None = None,
        *,
        within_max: float = WITHIN_MAX,
        approaching_max: float = APPROACHING_MAX,
    ) -> None:
        self.lexicons = lexicons or load_lexicons()
        self.within_max = within_max
        self.approaching_max = approaching_max

    def classify(
        self, context: ClassifierContext, patient_input: PatientInput
    ) -> ResponseClassification:
        text = (patient_input.free_text or "").strip().lower()
        matched: list[str] = []
        structured_signal = False
        lexicon_signal = False

        # crisis axis first: it overrides everything downstream
        crisis_cause: CrisisCause | None = None
        if patient_input.self_report_activation == CRISIS_ACTIVATION:
            crisis_cause = CrisisCause.MAX_ACTIVATION
        crisis_hits = _matches(text, self.lexicons.crisis)
        if crisis_hits and crisis_cause is None:
            crisis_cause = CrisisCause.CRISIS_LEXICON
        matched.extend(f"crisis:{hit}" for hit in crisis_hits)

        # layer axis, capped at the prompted layer
        depth = 0
        if patient_input.structured_choice is not None:
            depth = 1
            structured_signal = True
            matched.append(f"choice:{patient_input.structured_choice.value}")
        tone_hits = _matches(text, self.lexicons.feeling_tone)
        if tone_hits:
            depth = max(depth, 1)
            lexicon_signal = True
            matched.extend(f"feeling_tone:{hit}" for hit in tone_hits)
        if context.prompted_layer >= 2:
            if patient_input.layer_ack is LayerAck.LAYER2_CONFIRM:
                depth = max(depth, 2)
                structured_signal = True
                matched.append("ack:layer2_confirm")
            else:
                hits = _matches(text, self.lexicons.decentering)
                if hits:
                    depth = max(depth, 2)
                    lexicon_signal = True
                    matched.extend(f"decentering:{hit}" for hit in hits)
        if context.prompted_layer >= 3:
            if patient_input.layer_ack is LayerAck.LAYER3_BELIEF_NAMED:
                depth = max(depth, 3)
                structured_signal = True
                matched.append("ack:layer3_belief_named")
            else:
                hits = _matches(text, self.lexicons.belief)
                if hits:
                    depth = max(depth, 3)
                    lexicon_signal = True
                    matched.extend(f"belief:{hit}" for hit in hits)
        depth = min(depth, context.prompted_layer)

        # activation axis: self-report beats lexicon beats carry-forward
        if patient_input.self_report_activation is not None:
            zone = zone_for_activation(
                patient_input.self_report_activation, self.within_max, self.approaching_max
            )
            zone_source = ZoneSource.SELF_REPORT
            structured_signal = True
        else:
            escalation_hits = [
                (entry, z) for entry, z in self.lexicons.escalation if entry in text
            ]
            if escalation_hits:
                zone = max(
                    (z for _, z in escalation_hits), key=_ZONE_SEVERITY.__getitem__
                )
                zone_source = ZoneSource.LEXICON
                lexicon_signal = True
                matched.extend(f"escalation:{entry}" for entry, _ in escalation_hits)
            else:
                zone = context.last_zone
                zone_source = ZoneSource.CARRIED

        incoherent = not structured_signal and not lexicon_signal and not crisis_hits
        if (
            incoherent
            and context.consecutive_incoherent + 1 >= DISSOCIATION_RUN
            and crisis_cause is None
        ):
            crisis_cause = CrisisCause.DISSOCIATION_PATTERN

        if structured_signal:
            confidence = 1.0
        elif lexicon_signal or crisis_hits:
            confidence = 0.8
        else:
            confidence = 0.0

        return ResponseClassification(
            layer_depth=depth,
            activation_zone=zone,
            crisis=crisis_cause is not None,
            confidence=confidence,
            matched=tuple(matched),
            zone_source=zone_source,
            crisis_cause=crisis_cause,
            incoherent=incoherent,
        )


# --- prompts -----------------------------------------------------------------

@dataclass(frozen=True)
class PromptSet:
    """The fixed clinical wording, loaded once and treated as read-only."""

    texts: Mapping[str, Any]

    def __getitem__(self, key: str) -> str:
        return str(self.texts[key])

    @property
    def grounding_steps(self) -> tuple[str, str, str]:
        steps = tuple(self.texts["grounding_steps"])
        if len(steps) != 3:
            raise ValueError("grounding script must have exactly three steps")
        return steps  # type: ignore[return-value]


def load_prompts(path: str | Path | None = None) -> PromptSet:
    return PromptSet(load_packaged(PROMPT_FILE, path))


def render_prompt(
    layer_target: int,
    prompts: PromptSet,
    *,
    label: str | None = None,
) -> str:
    """Text for the prompt eliciting ``layer_target``.

    0 is the bare feeling-tone prompt (it elicits the layer-1 label); 2 is the
    confirmation plus decentering reframe; 3 is the open belief inquiry, which
    deliberately never names stimulus content — suggesting the belief would
    defeat the inquiry.
    """
    if layer_target == 0:
        return prompts["feeling_tone"]
    if layer_target == 1:
        return prompts["layer1_confirm"].format(label=label or "that feeling")
    if layer_target == 2:
        confirm = prompts["layer1_confirm"].format(label=label or "that feeling")
        return f"{confirm} {prompts['layer2_decenter']}"
    if layer_target == 3:
        return prompts["layer3_belief"]
    raise ValueError(f"no prompt for layer target {layer_target}")


def measure_latency(prompt_event: SessionEvent, response_event: SessionEvent) -> int:
    """Milliseconds from prompt to response; negative intervals are an error."""
    delta = response_event.timestamp_ms - prompt_event.timestamp_ms
    if delta < 0:
        raise NegativeInterval(
            f"response at {response_event.timestamp_ms} precedes prompt at {prompt_event.timestamp_ms}"
        )
    return delta


# --- conformance -------------------------------------------------------------

CRISIS_FIXTURES: tuple[tuple[ClassifierContext, PatientInput], ...] = (
    (
        ClassifierContext(prompted_layer=1),
        PatientInput(timestamp_ms=0, self_report_activation=10.0),
    ),
    (
        ClassifierContext(prompted_layer=1),
        PatientInput(timestamp_ms=0, free_text="I want to die"),
    ),
    (
        ClassifierContext(prompted_layer=2, last_zone=ActivationZone.APPROACHING),
        PatientInput(timestamp_ms=0, free_text="this is an emergency, i am not safe"),
    ),
    (
        ClassifierContext(prompted_layer=1, consecutive_incoherent=2),
        PatientInput(timestamp_ms=0, free_text=""),
    ),
)

_PROBE_INPUTS: tuple[PatientInput, ...] = (
    PatientInput(timestamp_ms=0, structured_choice=FeelingTone.UNPLEASANT),
    PatientInput(timestamp_ms=0, structured_choice=FeelingTone.NEUTRAL, self_report_activation=3.0),
    PatientInput(timestamp_ms=0, layer_ack=LayerAck.LAYER2_CONFIRM),
    PatientInput(timestamp_ms=0, layer_ack=LayerAck.LAYER3_BELIEF_NAMED),
    PatientInput(timestamp_ms=0, free_text="tightness in the chest, it is just words"),
    PatientInput(timestamp_ms=0, free_text="it believes the road is a threat"),
    PatientInput(timestamp_ms=0, free_text="zzz qqq"),
    PatientInput(timestamp_ms=0, free_text="too much, make it stop"),
)


def check_conformance(classifier: ClassifierPort) -> list[str]:
    """Port contract checks; an empty list means the classifier conforms.

    Checked: layer award never exceeds the prompted layer; crisis fixtures
    always classify as crisis; classification is deterministic; outputs stay
    inside their ranges.
    """
    problems: list[str] = []
    contexts = [
        ClassifierContext(prompted_layer=layer, last_zone=zone)
        for layer in (1, 2, 3)
        for zone in ActivationZone
    ]
    for context in contexts:
        for probe in _PROBE_INPUTS:
            first = classifier.classify(context, probe)
            again = classifier.classify(context, probe)
            if first != again:
                problems.append(f"nondeterministic on {probe} in {context}")
            if first.layer_depth > context.prompted_layer:
                problems.append(
                    f"awarded layer {first.layer_depth} above prompted {context.prompted_layer}"
                )
            if not (LAYER_MIN <= first.layer_depth <= LAYER_MAX):
                problems.append(f"layer depth out of range: {first.layer_depth}")
            if not (0.0 <= first.confidence <= 1.0):
                problems.append(f"confidence out of range: {first.confidence}")
    for context, fixture in CRISIS_FIXTURES:
        if not classifier.classify(context, fixture).crisis:
            problems.append(f"crisis fixture not flagged: {fixture}")
    return problems
