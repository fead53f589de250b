from __future__ import annotations

import pytest

from tonegap import (
    EngineConfig,
    LadderPosition,
    PatientInput,
    PatientProfile,
    PriorPractice,
    ProtocolEngine,
    SessionType,
    Trigger,
    build_ladder,
    load_templates,
)


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def profile():
    return PatientProfile(
        patient_id="p-test",
        trauma_domain="combat",
        triggers=(
            Trigger("loud sounds", 9.0),
            Trigger("vehicles", 8.0),
            Trigger("crowds", 8.0),
        ),
        avoidance_patterns=("driving on highways", "crowded stores"),
        prior_practice=PriorPractice.NONE,
        baseline_severity=58,
    )


@pytest.fixture(scope="session")
def ladder(profile, templates):
    return build_ladder(profile, templates)


@pytest.fixture
def engine(ladder):
    return ProtocolEngine(ladder)


class Walk:
    """Per-test driver for one engine session; keeps its own clock."""

    def __init__(
        self,
        engine: ProtocolEngine,
        *,
        position: LadderPosition | None = None,
        session_type: SessionType = SessionType.DAILY,
        activation: float = 5.0,
        session_id: str = "t0001",
        start: int = 1_000,
        prior_layer2: int = 0,
    ):
        self.engine = engine
        self.ts = start
        self.state, self.action = engine.start_session(
            position or LadderPosition(),
            session_type,
            activation,
            session_id=session_id,
            started_at_ms=start,
            prior_layer2_sessions=prior_layer2,
        )

    def proceed(self, dt: int = 1_000):
        self.ts += dt
        self.state, self.action = self.engine.next_step(
            self.state, PatientInput(timestamp_ms=self.ts, proceed=True)
        )
        return self.action

    def respond(self, dt: int = 1_000, **fields):
        self.ts += dt
        self.state, self.action = self.engine.next_step(
            self.state, PatientInput(timestamp_ms=self.ts, **fields)
        )
        return self.action

    def close(self, dt: int = 1_000):
        self.ts += dt
        self.state, self.record = self.engine.close_session(self.state, self.ts)
        return self.record


@pytest.fixture
def walk_factory(engine):
    def make(**kwargs) -> Walk:
        return Walk(engine, **kwargs)

    return make


# --- exhaustive (phase, input-kind) support ----------------------------------

from dataclasses import replace as _replace  # noqa: E402

from tonegap import FeelingTone, LayerAck, Phase  # noqa: E402


def reach_phase(engine: ProtocolEngine, phase: Phase) -> Walk:
    """Drive a fresh session until ``state.phase`` is ``phase``."""
    if phase is Phase.CLOSING:
        # cheapest honest route: a one-event budget session, event declined out
        small = ProtocolEngine(engine.ladder, config=EngineConfig(daily_events=1))
        walk = Walk(small)
        walk.proceed()                      # settle -> stimulus
        walk.proceed()                      # pause -> feeling-tone prompt
        walk.respond(structured_choice=FeelingTone.UNPLEASANT, self_report_activation=4.0)
        walk.respond(structured_choice=FeelingTone.NEUTRAL)   # decline deepening
        walk.respond(structured_choice=FeelingTone.NEUTRAL)   # budget spent
        assert walk.state.phase is Phase.CLOSING
        return walk

    walk = Walk(engine, prior_layer2=3)
    if phase is Phase.CHECKIN:
        walk.state = _replace(walk.state, phase=Phase.CHECKIN)
        return walk
    if phase is Phase.SETTLING:
        return walk
    walk.proceed()
    if phase is Phase.CONTACT_PRESENTED:
        return walk
    walk.proceed()
    if phase is Phase.AWAITING_FEELING_TONE:
        return walk
    if phase is Phase.GROUNDING:
        walk.respond(self_report_activation=9.0)
        assert walk.state.phase is Phase.GROUNDING
        return walk
    if phase is Phase.CRISIS:
        walk.respond(self_report_activation=10.0)
        assert walk.state.phase is Phase.CRISIS
        return walk
    walk.respond(structured_choice=FeelingTone.UNPLEASANT, self_report_activation=4.0)
    if phase is Phase.LAYER1:
        return walk
    walk.respond(layer_ack=LayerAck.LAYER2_CONFIRM)
    if phase is Phase.LAYER2:
        return walk
    walk.respond(layer_ack=LayerAck.LAYER3_BELIEF_NAMED)
    if phase is Phase.LAYER3:
        return walk
    if phase is Phase.CLOSED:
        walk.proceed()                      # event 1 done -> stimulus 2
        walk.proceed()                      # pause
        walk.respond(structured_choice=FeelingTone.UNPLEASANT)
        walk.respond(structured_choice=FeelingTone.NEUTRAL)
        walk.respond(structured_choice=FeelingTone.NEUTRAL)   # event 2 done -> stimulus 3
        walk.proceed()
        walk.respond(structured_choice=FeelingTone.UNPLEASANT)
        walk.respond(structured_choice=FeelingTone.NEUTRAL)
        walk.respond(structured_choice=FeelingTone.NEUTRAL)   # budget spent
        assert walk.state.phase is Phase.CLOSING
        walk.close()
        return walk
    raise AssertionError(f"no route to phase {phase}")


def random_records(rng, n: int, *, span_days: int = 120):
    """Plausible closed-session records with uneven timing and layer mix."""
    from tonegap import SessionRecord

    base = 1_600_000_000_000 + rng.randrange(0, 10) * 86_400_000
    records = []
    ts = base
    for i in range(n):
        ts += rng.randrange(1, (span_days * 86_400_000) // max(n, 1) or 2)
        session_type = rng.choice(
            [SessionType.DAILY] * 7 + [SessionType.WEEKLY_DEEP, SessionType.REAL_WORLD]
        )
        max_layer = rng.choice([0, 1, 1, 1, 2, 2, 3])
        opening = round(rng.uniform(1.0, 9.5), 2)
        step_backs = rng.choice([0, 0, 0, 1])
        crisis = rng.random() < 0.03
        records.append(
            SessionRecord(
                session_id=f"r{i:04d}",
                session_type=session_type,
                stimulus_level=rng.randrange(1, 7),
                opened_at_ms=ts,
                closed_at_ms=ts + rng.randrange(60_000, 1_800_000),
                stable=max_layer >= 1 and step_backs == 0 and not crisis,
                max_layer_reached=max_layer,
                opening_activation=opening,
                closing_activation=round(max(0.0, opening - rng.uniform(0, 2)), 2),
                step_back_count=step_backs,
                crisis=crisis,
                distress_reported=step_backs > 0 and rng.random() < 0.5,
                latencies_ms=tuple(
                    rng.randrange(400, 6_000) for _ in range(rng.randrange(0, 4))
                ),
                categories=tuple(
                    rng.sample(["loud sounds", "vehicles", "crowds"], rng.randrange(0, 3))
                ),
            )
        )
    return records


# accepts_proceed, accepts_response per phase; None means no input at all
PHASE_INPUT_TABLE: dict[Phase, tuple[bool, bool]] = {
    Phase.CHECKIN: (False, False),
    Phase.SETTLING: (True, False),
    Phase.CONTACT_PRESENTED: (True, False),
    Phase.AWAITING_FEELING_TONE: (False, True),
    Phase.LAYER1: (False, True),
    Phase.LAYER2: (False, True),
    Phase.LAYER3: (True, False),
    Phase.GROUNDING: (True, True),
    Phase.CRISIS: (False, False),
    Phase.CLOSING: (False, False),
    Phase.CLOSED: (False, False),
}
