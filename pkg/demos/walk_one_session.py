"""
Anatomy of a single practice session
====================================

The session engine is a pure transition function: feed it the current state
and one patient input, get back the next state and the action a client
should render. Nothing here touches a disk or a socket — this demo drives
the engine directly and narrates every exchange.

The session below settles, makes contact with a level-1 stimulus, names the
feeling tone (layer 1), owns it as self-arising (layer 2), and finally
names the belief underneath it (layer 3, open here because three prior
deep sessions are on record). Watch the activation stay inside the
tolerance window the whole way.
"""

from tonegap import (
    EngineConfig,
    FeelingTone,
    LadderPosition,
    LayerAck,
    PatientInput,
    PatientProfile,
    PriorPractice,
    ProtocolEngine,
    SessionType,
    Trigger,
    build_ladder,
    load_templates,
)

profile = PatientProfile(
    patient_id="demo-patient",
    trauma_domain="combat",
    triggers=(Trigger("loud sounds", 9.0), Trigger("vehicles", 8.0)),
    avoidance_patterns=("driving on highways",),
    prior_practice=PriorPractice.NONE,
    baseline_severity=58,
)
engine = ProtocolEngine(
    build_ladder(profile, load_templates()),
    config=EngineConfig(daily_events=1),   # one contact event keeps the story short
)

clock = 1_000_000


def show(action):
    line = action.kind.value
    if action.stimulus_text:
        line += f' | "{action.stimulus_text}"'
    if action.prompt_text:
        line += f' | "{action.prompt_text}"'
    if action.pause_seconds:
        line += f" | pause {action.pause_seconds}s"
    print("  engine:", line)


def step(state, **fields):
    global clock
    clock += 5_000
    state, action = engine.next_step(
        state, PatientInput(timestamp_ms=clock, **fields)
    )
    described = {k: v for k, v in fields.items() if v is not None}
    print("patient:", described or "(ready)")
    show(action)
    print("  phase now:", state.phase.value, "| layer reached:",
          state.current_layer_reached)
    return state


state, action = engine.start_session(
    LadderPosition(),
    SessionType.DAILY,
    checkin_activation=4.5,
    session_id="demo-0001",
    started_at_ms=clock,
    prior_layer2_sessions=3,
)
print("check-in at activation 4.5")
show(action)

state = step(state, proceed=True)                     # settled
state = step(state, proceed=True)                     # sat with the stimulus
state = step(
    state,
    structured_choice=FeelingTone.UNPLEASANT,
    self_report_activation=5.0,
)                                                     # layer 1: tone named
state = step(state, layer_ack=LayerAck.LAYER2_CONFIRM)   # layer 2: owned
state = step(
    state,
    layer_ack=LayerAck.LAYER3_BELIEF_NAMED,
    free_text="it believes the danger is still close",
)                                                     # layer 3: belief named
state = step(state, proceed=True)                     # event complete

clock += 5_000
state, record = engine.close_session(state, clock)

print("\nclosed. the record is a fold over the event log:")
print("  stable:", record.stable)
print("  max layer reached:", record.max_layer_reached)
print("  opening -> closing activation:",
      record.opening_activation, "->", record.closing_activation)
print("  feeling-tone latency samples (ms):", list(record.latencies_ms))
print("  categories contacted:", list(record.categories))
