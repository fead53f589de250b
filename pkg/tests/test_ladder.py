from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tonegap import (
    EventKind,
    LadderAction,
    LadderPosition,
    LevelMismatch,
    PatientProfile,
    SessionEvent,
    SessionOutcome,
    SessionType,
    StimulusLadder,
    StimulusItem,
    Trigger,
    build_ladder,
    fold_session,
    is_stable_session,
    replay_position,
    select_session_level,
)
from tonegap.errors import EmptyProfile, MissingTemplates
from tonegap.ladder import (
    ADVANCE_AFTER,
    DAILY_LEVEL_CAP,
    DecisionReason,
    LEVEL_MAX,
    apply_decision,
    evaluate_advancement,
    record_session_outcome,
    regress_decision,
)


# --- profile and build -------------------------------------------------------

def test_trigger_validation():
    with pytest.raises(ValueError):
        Trigger("", 5.0)
    with pytest.raises(ValueError):
        Trigger("vehicles", 11.0)


def test_ranked_categories_order_and_ties(profile):
    # highest intensity first; the 8.0 tie keeps intake order
    assert profile.ranked_categories() == ("loud sounds", "vehicles", "crowds")


def test_profile_round_trip(profile):
    assert PatientProfile.from_dict(profile.to_dict()) == profile


def test_build_ladder_covers_all_levels(ladder):
    for level in range(1, 7):
        assert ladder.items_at(level), f"no items at level {level}"


def test_build_ladder_requires_triggers(templates):
    bare = PatientProfile(patient_id="x", trauma_domain="combat", triggers=())
    with pytest.raises(EmptyProfile):
        build_ladder(bare, templates)


def test_build_ladder_unknown_domain(profile, templates):
    moved = PatientProfile.from_dict({**profile.to_dict(), "trauma_domain": "unknown"})
    with pytest.raises(MissingTemplates):
        build_ladder(moved, templates)


def test_build_ladder_prefers_matching_slots(ladder):
    # upper levels carry trigger-specific items ordered by intensity rank
    categories = [item.category for item in ladder.items_at(4)]
    assert categories[0] == "loud sounds"
    assert "vehicles" in categories


def test_build_ladder_wildcard_substitution(templates):
    solo = PatientProfile(
        patient_id="solo",
        trauma_domain="road_accident",
        triggers=(Trigger("intersections", 7.0),),
    )
    built = build_ladder(solo, templates)
    assert all(item.category == "intersections" for item in built.items)
    assert not any("{category}" in item.text for item in built.items)


def test_ladder_missing_level_rejected():
    with pytest.raises(MissingTemplates):
        StimulusLadder(items=(StimulusItem(1, "a", "t"),), built_from="x")


def test_ladder_round_trip(ladder):
    assert StimulusLadder.from_dict(ladder.to_dict()) == ladder


# --- level selection ---------------------------------------------------------

def test_select_level_by_session_type():
    position = LadderPosition(current_daily_level=3)
    assert select_session_level(position, SessionType.DAILY) == 3
    assert select_session_level(position, SessionType.REAL_WORLD) == 3
    assert select_session_level(position, SessionType.WEEKLY_DEEP) == 4


def test_weekly_deep_caps_at_six():
    position = LadderPosition(current_daily_level=DAILY_LEVEL_CAP)
    assert select_session_level(position, SessionType.WEEKLY_DEEP) == LEVEL_MAX


def test_daily_level_bounds():
    with pytest.raises(ValueError):
        LadderPosition(current_daily_level=6)
    with pytest.raises(ValueError):
        LadderPosition(current_daily_level=0)


# --- advancement mechanics ---------------------------------------------------

def test_streak_counts_only_at_daily_level():
    position = LadderPosition(current_daily_level=2)
    with pytest.raises(LevelMismatch):
        record_session_outcome(position, SessionOutcome("s1", 3, True))


def test_three_stable_advances():
    position = LadderPosition()
    for i in range(ADVANCE_AFTER):
        position, decision = fold_session(
            position, SessionOutcome(f"s{i}", 1, True), step_back=False
        )
    assert decision.action is LadderAction.ADVANCE
    assert decision.reason is DecisionReason.THREE_STABLE
    assert position.current_daily_level == 2
    assert position.consecutive_stable_sessions == 0


def test_unstable_resets_streak():
    position = LadderPosition(consecutive_stable_sessions=2)
    position, decision = fold_session(
        position, SessionOutcome("s", 1, False), step_back=False
    )
    assert decision.action is LadderAction.HOLD
    assert position.consecutive_stable_sessions == 0


def test_no_advance_at_daily_cap():
    position = LadderPosition(
        current_daily_level=DAILY_LEVEL_CAP, consecutive_stable_sessions=ADVANCE_AFTER
    )
    assert evaluate_advancement(position).action is LadderAction.HOLD


def test_step_back_regresses_with_floor():
    position = LadderPosition(current_daily_level=1)
    position, decision = fold_session(
        position, SessionOutcome("s", 1, False), step_back=True
    )
    assert decision.action is LadderAction.REGRESS
    assert position.current_daily_level == 1   # floor


def test_step_back_reason_split():
    position = LadderPosition(current_daily_level=3)
    _, tolerance = fold_session(
        position, SessionOutcome("a", 3, False), step_back=True
    )
    _, distress = fold_session(
        position, SessionOutcome("b", 3, False), step_back=True, distress_reported=True
    )
    assert tolerance.reason is DecisionReason.TOLERANCE_BREACH
    assert distress.reason is DecisionReason.DISTRESS_REPORT


def test_weekly_outcome_never_touches_streak():
    position = LadderPosition(current_daily_level=2, consecutive_stable_sessions=2)
    after, decision = fold_session(
        position, SessionOutcome("w", 3, True), step_back=False
    )
    assert decision.action is LadderAction.HOLD
    assert after.consecutive_stable_sessions == 2
    assert after.current_daily_level == 2


def test_weekly_step_back_regresses_daily_position():
    position = LadderPosition(current_daily_level=2, consecutive_stable_sessions=2)
    after, decision = fold_session(
        position, SessionOutcome("w", 3, False), step_back=True
    )
    assert decision.action is LadderAction.REGRESS
    assert after.current_daily_level == 1
    assert after.consecutive_stable_sessions == 0


def test_apply_decision_resets_streak_on_change():
    position = LadderPosition(current_daily_level=2, consecutive_stable_sessions=3)
    advanced = apply_decision(position, evaluate_advancement(position))
    assert advanced.current_daily_level == 3
    assert advanced.consecutive_stable_sessions == 0
    regressed = apply_decision(position, regress_decision(position))
    assert regressed.current_daily_level == 1
    assert regressed.consecutive_stable_sessions == 0


# --- fold-oracle equivalence -------------------------------------------------

def naive_ladder(folds):
    """Streak rule restated from scratch: the oracle the fold must match."""
    level, streak = 1, 0
    for run_level, stable, step_back in folds:
        if step_back:
            level = max(1, level - 1)
            streak = 0
        elif run_level == level:
            streak = streak + 1 if stable else 0
            if streak >= 3 and level < 5:
                level += 1
                streak = 0
    return level, streak


def drive_both(moves):
    """Materialize outcomes against the oracle's live level and drive both."""
    position = LadderPosition()
    level, streak = 1, 0
    materialized = []
    for i, (kind, stable, step_back) in enumerate(moves):
        run_level = min(level + 1, 6) if kind == "weekly" else level
        materialized.append((run_level, stable, step_back))
        position, _ = fold_session(
            position,
            SessionOutcome(f"s{i}", run_level, stable),
            step_back=step_back,
        )
        # inline oracle step (kept flat so a mismatch pinpoints the move)
        if step_back:
            level, streak = max(1, level - 1), 0
        elif run_level == level:
            streak = streak + 1 if stable else 0
            if streak >= 3 and level < 5:
                level, streak = level + 1, 0
        assert position.current_daily_level == level, f"level diverged at move {i}"
        assert position.consecutive_stable_sessions == streak, f"streak diverged at move {i}"
    assert naive_ladder(materialized) == (level, streak)
    return position


move = st.tuples(
    st.sampled_from(["daily", "weekly"]),
    st.booleans(),
    st.booleans(),
)


@settings(max_examples=300, deadline=None)
@given(st.lists(move, max_size=60))
def test_fold_matches_oracle(moves):
    drive_both(moves)


def test_fold_matches_oracle_bulk():
    rng = random.Random(20260822)
    for _ in range(2_000):
        moves = [
            (
                rng.choice(["daily", "daily", "daily", "weekly"]),
                rng.random() < 0.6,
                rng.random() < 0.1,
            )
            for _ in range(rng.randrange(0, 40))
        ]
        drive_both(moves)


def test_replay_position_matches_incremental():
    rng = random.Random(7)
    folds = []
    position = LadderPosition()
    for i in range(200):
        kind = rng.choice(["daily", "weekly"])
        run_level = (
            min(position.current_daily_level + 1, 6)
            if kind == "weekly"
            else position.current_daily_level
        )
        outcome = SessionOutcome(f"s{i}", run_level, rng.random() < 0.6)
        step_back = rng.random() < 0.1
        folds.append((outcome, step_back, False))
        position, _ = fold_session(position, outcome, step_back=step_back)
    replayed = replay_position(folds)
    assert replayed.current_daily_level == position.current_daily_level
    assert replayed.consecutive_stable_sessions == position.consecutive_stable_sessions


# --- stability from events ---------------------------------------------------

def ev(ts, kind, **payload):
    return SessionEvent(ts, kind, payload)


def closed(events, crisis=False):
    return list(events) + [ev(99_000, EventKind.SESSION_CLOSED, crisis=crisis)]


CONTACT = [
    ev(1000, EventKind.STIMULUS_SHOWN, level=1, category="c"),
    ev(2000, EventKind.PROMPT_SHOWN, layer_target=0),
    ev(3000, EventKind.CLASSIFICATION, activation_zone="within", layer_depth=1),
    ev(3000, EventKind.LAYER_REACHED, layer=1),
]


def test_stable_clean_session():
    assert is_stable_session(closed(CONTACT))


def test_no_contact_events_not_stable():
    assert not is_stable_session(closed([]))


def test_unclosed_not_stable():
    assert not is_stable_session(CONTACT)


def test_crisis_close_not_stable():
    assert not is_stable_session(closed(CONTACT, crisis=True))


def test_step_back_not_stable():
    events = CONTACT + [ev(4000, EventKind.STEP_BACK, from_level=1, to_level=1)]
    assert not is_stable_session(closed(events))


def test_crisis_enter_not_stable():
    events = CONTACT + [ev(4000, EventKind.CRISIS_ENTER, cause="crisis_lexicon")]
    assert not is_stable_session(closed(events))


def test_approaching_zone_not_stable():
    events = [
        ev(1000, EventKind.STIMULUS_SHOWN, level=1, category="c"),
        ev(2000, EventKind.CLASSIFICATION, activation_zone="approaching", layer_depth=1),
        ev(2000, EventKind.LAYER_REACHED, layer=1),
    ]
    assert not is_stable_session(closed(events))


def test_unlayered_middle_contact_not_masked():
    # second stimulus never reaches layer 1; a layered third must not mask it
    events = (
        CONTACT
        + [ev(4000, EventKind.STIMULUS_SHOWN, level=1, category="c")]
        + [
            ev(5000, EventKind.STIMULUS_SHOWN, level=1, category="c"),
            ev(6000, EventKind.CLASSIFICATION, activation_zone="within", layer_depth=1),
            ev(6000, EventKind.LAYER_REACHED, layer=1),
        ]
    )
    assert not is_stable_session(closed(events))


def test_unlayered_final_contact_not_stable():
    events = CONTACT + [ev(4000, EventKind.STIMULUS_SHOWN, level=1, category="c")]
    assert not is_stable_session(closed(events))


def test_real_world_prompt_opens_contact():
    events = [
        ev(1000, EventKind.PROMPT_SHOWN, layer_target=0),
        ev(2000, EventKind.CLASSIFICATION, activation_zone="within", layer_depth=1),
        ev(2000, EventKind.LAYER_REACHED, layer=1),
    ]
    assert is_stable_session(closed(events))
