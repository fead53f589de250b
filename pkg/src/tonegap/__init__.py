"""Local-first graded-contact practice engine with feeling-tone elicitation.

The package is organized around a small set of pure cores — a stimulus
ladder with calibrated advancement, a session state machine, a rule-based
response classifier, and progress arithmetic over closed-session records —
wrapped by an encrypted append-only event store and a loopback-only session
service. A deterministic simulator drives the whole stack from scripted
patient behavior.
"""

from __future__ import annotations

from .elicitation import (
    ADAPTER_OUTPUT_SCHEMA,
    ActivationZone,
    ClassifierContext,
    ClassifierPort,
    CrisisCause,
    FeelingTone,
    LayerAck,
    PatientInput,
    ResponseClassification,
    RuleClassifier,
    ZoneSource,
    check_conformance,
    load_lexicons,
    load_prompts,
    measure_latency,
    render_prompt,
    zone_for_activation,
)
from .engine import (
    ActionKind,
    EngineAction,
    EngineConfig,
    Phase,
    ProtocolEngine,
    SessionRecord,
    SessionState,
    record_from_events,
)
from .errors import (
    EmptyMonth,
    EmptyProfile,
    EmptyRecords,
    IntegrityFailure,
    InsufficientHistory,
    InvalidActivation,
    LevelMismatch,
    LoopbackOnly,
    MissingTemplates,
    NoConsent,
    NotClosable,
    PhaseMismatch,
    ScriptGap,
    SessionAlreadyOpen,
    StoreLocked,
    TimestampRegression,
    ToneGapError,
)
from .events import EventKind, SessionEvent, event_json
from .ladder import (
    LadderAction,
    LadderDecision,
    LadderPosition,
    PatientProfile,
    PriorPractice,
    SessionOutcome,
    SessionType,
    StimulusItem,
    StimulusLadder,
    StimulusTemplate,
    Trigger,
    build_ladder,
    fold_session,
    is_stable_session,
    load_templates,
    replay_position,
    select_session_level,
)
from .progress import (
    MaintenanceDecision,
    MonthlySummary,
    ProxyReport,
    compute_proxies,
    evaluate_maintenance,
    generate_monthly_summary,
    months_available,
    weekly_recap,
)
from .safety import (
    CrisisAssessment,
    CrisisResource,
    GroundingScript,
    assess_crisis,
    grounding_sequence,
    load_crisis_resources,
)
from .service import SessionService, build_server
from .simulator import (
    PatientScript,
    TrajectoryReport,
    check_invariants,
    load_script,
    marcus_script,
    run_scenario,
)
from .store import (
    EXPORT_CONFIRMATION_PHRASE,
    ConsentRegistry,
    EventStore,
    ExportDocument,
    export_summaries,
    write_export,
)

__version__ = "0.1.0"

__all__ = [
    "ADAPTER_OUTPUT_SCHEMA",
    "ActionKind",
    "ActivationZone",
    "ClassifierContext",
    "ClassifierPort",
    "ConsentRegistry",
    "CrisisAssessment",
    "CrisisCause",
    "CrisisResource",
    "EXPORT_CONFIRMATION_PHRASE",
    "EmptyMonth",
    "EmptyProfile",
    "EmptyRecords",
    "EngineAction",
    "EngineConfig",
    "EventKind",
    "EventStore",
    "ExportDocument",
    "FeelingTone",
    "GroundingScript",
    "IntegrityFailure",
    "InsufficientHistory",
    "InvalidActivation",
    "LadderAction",
    "LadderDecision",
    "LadderPosition",
    "LayerAck",
    "LevelMismatch",
    "LoopbackOnly",
    "MaintenanceDecision",
    "MissingTemplates",
    "MonthlySummary",
    "NoConsent",
    "NotClosable",
    "PatientInput",
    "PatientProfile",
    "PatientScript",
    "Phase",
    "PhaseMismatch",
    "PriorPractice",
    "ProtocolEngine",
    "ProxyReport",
    "ResponseClassification",
    "RuleClassifier",
    "ScriptGap",
    "SessionAlreadyOpen",
    "SessionEvent",
    "SessionOutcome",
    "SessionRecord",
    "SessionService",
    "SessionState",
    "SessionType",
    "StimulusItem",
    "StimulusLadder",
    "StimulusTemplate",
    "StoreLocked",
    "TimestampRegression",
    "ToneGapError",
    "TrajectoryReport",
    "Trigger",
    "ZoneSource",
    "assess_crisis",
    "build_ladder",
    "build_server",
    "check_conformance",
    "check_invariants",
    "compute_proxies",
    "evaluate_maintenance",
    "event_json",
    "export_summaries",
    "fold_session",
    "generate_monthly_summary",
    "grounding_sequence",
    "is_stable_session",
    "load_crisis_resources",
    "load_lexicons",
    "load_prompts",
    "load_script",
    "load_templates",
    "marcus_script",
    "measure_latency",
    "months_available",
    "record_from_events",
    "render_prompt",
    "replay_position",
    "run_scenario",
    "select_session_level",
    "weekly_recap",
    "write_export",
    "zone_for_activation",
]
