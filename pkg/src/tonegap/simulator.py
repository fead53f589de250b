"""Deterministic scenario simulator and protocol invariant checker.

A scenario script specifies, per week, the patient's opening activation,
response latency, per-session stability and layer-depth policy, and any
real-world activations. The runner drives the real service handlers
in-process — store, engine, classifier and all — with scripted timestamps, so
two runs of the same script produce byte-identical event logs.

``check_invariants`` is an independent auditor: it re-derives stability,
ladder movement, safety ordering, and gating from the raw event log with its
own naive bookkeeping, sharing no code with the engine. The simulator run
reports violations; hand-corrupted logs fed to ``verify`` get flagged.
"""

from __future__ import annotations

import argparse
import json
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from importlib import resources as _resources

from .engine import EngineConfig
from .errors import EmptyMonth, ScriptGap
from .events import EventKind, SessionEvent
from .ladder import PatientProfile, PriorPractice, SessionType, Trigger
from . import progress as progress_mod
from .service import SessionService
from .store import EventStore

DAY_MS = 86_400_000
HOUR_MS = 3_600_000
BASE_MS = 1_000_000_000_000       # arbitrary fixed epoch for reproducible logs
DAILY_HOUR = 9
WEEKLY_HOUR = 17                  # between daily 6 and daily 7 of the week
REAL_WORLD_OFFSET_MS = 4 * HOUR_MS
SIM_PASSPHRASE = "simulation"
MAX_STEPS_PER_SESSION = 400


# --- script types ------------------------------------------------------------

@dataclass(frozen=True)
class SessionPlan:
    """Policy for one scripted session.

    ``stable`` False means the patient wobbles once: the first contact event's
    feeling-tone answer reports activation just above the tolerance boundary
    (approaching zone), then settles. ``layer_target`` is the deepest layer
    the patient is willing to go this session; deeper prompts are declined.
    """

    stable: bool = True
    layer_target: int = 1

    def to_dict(self) -> dict[str, Any]:
        return {"stable": self.stable, "layer_target": self.layer_target}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SessionPlan":
        return cls(bool(data.get("stable", True)), int(data.get("layer_target", 1)))


@dataclass(frozen=True)
class RealWorldPlan:
    after_daily: int              # 1-based daily session it follows, same day
    activation: float
    free_text: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "after_daily": self.after_daily,
            "activation": self.activation,
            "free_text": self.free_text,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RealWorldPlan":
        return cls(
            int(data["after_daily"]), float(data["activation"]), str(data["free_text"])
        )


@dataclass(frozen=True)
class WeekPlan:
    week: int
    opening_activation: float
    response_delay_ms: int
    daily: tuple[SessionPlan, ...]
    weekly: SessionPlan | None = None
    real_world: tuple[RealWorldPlan, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "week": self.week,
            "opening_activation": self.opening_activation,
            "response_delay_ms": self.response_delay_ms,
            "daily": [p.to_dict() for p in self.daily],
            "weekly": self.weekly.to_dict() if self.weekly else None,
            "real_world": [r.to_dict() for r in self.real_world],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WeekPlan":
        weekly = data.get("weekly")
        return cls(
            week=int(data["week"]),
            opening_activation=float(data["opening_activation"]),
            response_delay_ms=int(data["response_delay_ms"]),
            daily=tuple(SessionPlan.from_dict(p) for p in data["daily"]),
            weekly=SessionPlan.from_dict(weekly) if weekly else None,
            real_world=tuple(
                RealWorldPlan.from_dict(r) for r in data.get("real_world", [])
            ),
        )


@dataclass(frozen=True)
class PatientScript:
    name: str
    profile: PatientProfile
    weeks: tuple[WeekPlan, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "profile": self.profile.to_dict(),
            "weeks": [w.to_dict() for w in self.weeks],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PatientScript":
        return cls(
            name=str(data["name"]),
            profile=PatientProfile.from_dict(data["profile"]),
            weeks=tuple(WeekPlan.from_dict(w) for w in data["weeks"]),
        )


def load_script(source: str | Path) -> PatientScript:
    """Load a script from a file path, or by packaged scenario name."""
    path = Path(source)
    if path.exists():
        return PatientScript.from_dict(json.loads(path.read_text(encoding="utf-8")))
    ref = _resources.files("tonegap.data.scenarios").joinpath(f"{source}.json")
    if ref.is_file():
        return PatientScript.from_dict(json.loads(ref.read_text(encoding="utf-8")))
    raise ScriptGap(f"no script file or packaged scenario named {source!r}")


# --- the golden scenario ------------------------------------------------------

def marcus_script() -> PatientScript:
    """Twelve-week reference scenario for a combat veteran.

    Weekly opening activation declines 6.8 -> 3.8; daily stability patterns
    produce exactly two ladder advances (after weeks 2 and 8); layer work
    deepens from layer-1-only through layer 2 in the middle month to layer 3
    in roughly 40% of final-month sessions; one real-world activation lands
    in week 7.
    """
    profile = PatientProfile(
        patient_id="marcus",
        trauma_domain="combat",
        triggers=(
            Trigger("loud sounds", 9.0),
            Trigger("vehicles", 8.0),
            Trigger("crowds", 8.0),
        ),
        avoidance_patterns=("driving on highways", "crowded stores", "fireworks"),
        prior_practice=PriorPractice.NONE,
        baseline_severity=58,
    )

    activations = [6.8, 6.6, 6.4, 6.2, 5.9, 5.6, 5.3, 5.0, 4.7, 4.4, 4.1, 3.8]

    def delay(week: int) -> int:
        return round(3500 - (3500 - 1200) * (week - 1) / 11)

    # stability flags per week (True = clean session)
    stability: dict[int, list[bool]] = {
        1: [False, False, True, False, True, True, False],
        2: [False, True, False, False, True, True, True],        # -> advance to 2
    }
    block = [(i % 3) != 2 for i in range(39)] + [True, True, True]  # -> advance to 3
    for week in range(3, 9):
        start = (week - 3) * 7
        stability[week] = block[start : start + 7]
    tail = [(i % 3) != 2 for i in range(28)]                        # no further triple
    for week in range(9, 13):
        start = (week - 9) * 7
        stability[week] = tail[start : start + 7]

    # layer-depth targets per week
    targets: dict[int, list[int]] = {w: [1] * 7 for w in range(1, 13)}
    targets[4] = [1, 2, 1, 1, 2, 1, 1]
    for week in range(5, 9):
        targets[week] = [2, 1, 2, 1, 2, 1, 2]
    for week in range(9, 12):
        targets[week] = [2, 3, 2, 2, 3, 1, 1]
    targets[12] = [2, 3, 2, 2, 3, 2, 3]
    weekly_targets = {w: 1 for w in range(1, 4)}
    weekly_targets[4] = 2
    for week in range(5, 9):
        weekly_targets[week] = 2
    for week in range(9, 13):
        weekly_targets[week] = 3

    weeks = []
    for week in range(1, 13):
        real_world = ()
        if week == 7:
            real_world = (
                RealWorldPlan(after_daily=3, activation=8.0, free_text="fear, heart racing"),
            )
        weeks.append(
            WeekPlan(
                week=week,
                opening_activation=activations[week - 1],
                response_delay_ms=delay(week),
                daily=tuple(
                    SessionPlan(stable=s, layer_target=t)
                    for s, t in zip(stability[week], targets[week])
                ),
                weekly=SessionPlan(stable=True, layer_target=weekly_targets[week]),
                real_world=real_world,
            )
        )
    return PatientScript(name="marcus", profile=profile, weeks=tuple(weeks))


# --- scenario runner ----------------------------------------------------------

class _Driver:
    """Drives one session through the service handlers per its plan."""

    def __init__(self, service: SessionService, plan: SessionPlan, opening: float, delay: int):
        self.service = service
        self.plan = plan
        self.opening = opening
        self.delay = delay
        self.wobbled = False

    def run(self, session_type: SessionType, start_ms: int) -> int:
        status, body = self.service.handle_start(
            {
                "session_type": session_type.value,
                "checkin_activation": self.opening,
                "body_markers": ["tightness"] if self.opening > 5 else ["calm"],
                "timestamp_ms": start_ms,
            }
        )
        if status != 201:
            raise ScriptGap(f"start rejected: {body}")
        session_id = body["session_id"]
        ts = start_ms
        for _ in range(MAX_STEPS_PER_SESSION):
            phase = body["state"]["phase"] if "state" in body else None
            if phase in ("closing", "crisis"):
                ts += 2000
                status, body = self.service.handle_close(session_id, {"timestamp_ms": ts})
                if status != 200:
                    raise ScriptGap(f"close rejected: {body}")
                return ts
            ts, request = self._next_request(phase, ts, body["state"])
            status, body = self.service.handle_respond(session_id, request)
            if status != 200:
                raise ScriptGap(f"respond rejected in phase {phase}: {body}")
        raise ScriptGap("session did not terminate; driver gave up")

    def _next_request(self, phase: str, ts: int, state: Mapping[str, Any]) -> tuple[int, dict]:
        if phase == "settling":
            ts += 90_000
            return ts, {"timestamp_ms": ts, "proceed": True}
        if phase == "contact_presented":
            ts += 5_000
            return ts, {"timestamp_ms": ts, "proceed": True}
        if phase == "awaiting_feeling_tone":
            ts += self.delay
            if not self.plan.stable and not self.wobbled and state["events_completed"] == 0:
                # a wobble must actually cross the tolerance boundary, however
                # low the day's opening activation sits
                self.wobbled = True
                activation = round(max(7.1, min(8.4, self.opening + 1.2)), 1)
            else:
                activation = self.opening
            return ts, {
                "timestamp_ms": ts,
                "structured_choice": "unpleasant",
                "self_report_activation": activation,
            }
        if phase == "layer1":      # decentering prompt is up; prompted layer 2
            ts += self.delay
            if self.plan.layer_target >= 2:
                return ts, {"timestamp_ms": ts, "layer_ack": "layer2_confirm"}
            return ts, {"timestamp_ms": ts, "structured_choice": "neutral"}
        if phase == "layer2":      # belief prompt is up; prompted layer 3
            ts += self.delay
            if self.plan.layer_target >= 3:
                return ts, {
                    "timestamp_ms": ts,
                    "layer_ack": "layer3_belief_named",
                    "free_text": "it believes the danger is still close",
                }
            return ts, {"timestamp_ms": ts, "structured_choice": "neutral"}
        if phase == "layer3":
            ts += 1_500
            return ts, {"timestamp_ms": ts, "proceed": True}
        if phase == "grounding":
            ts += 8_000
            return ts, {"timestamp_ms": ts, "proceed": True}
        raise ScriptGap(f"driver has no policy for phase {phase!r}")


class _RealWorldDriver:
    def __init__(self, service: SessionService, plan: RealWorldPlan, delay: int):
        self.service = service
        self.plan = plan
        self.delay = delay

    def run(self, start_ms: int) -> int:
        status, body = self.service.handle_start(
            {
                "session_type": "real_world",
                "checkin_activation": self.plan.activation,
                "body_markers": ["tightness", "restlessness"],
                "timestamp_ms": start_ms,
            }
        )
        if status != 201:
            raise ScriptGap(f"real-world start rejected: {body}")
        session_id = body["session_id"]
        ts = start_ms
        for _ in range(MAX_STEPS_PER_SESSION):
            phase = body["state"]["phase"]
            if phase in ("closing", "crisis"):
                ts += 2000
                status, body = self.service.handle_close(session_id, {"timestamp_ms": ts})
                if status != 200:
                    raise ScriptGap(f"real-world close rejected: {body}")
                return ts
            if phase == "contact_presented":
                ts += 3_000
                request: dict = {"timestamp_ms": ts, "proceed": True}
            elif phase == "awaiting_feeling_tone":
                ts += self.delay
                request = {
                    "timestamp_ms": ts,
                    "free_text": self.plan.free_text,
                    "self_report_activation": self.plan.activation,
                }
            elif phase == "grounding":
                ts += 8_000
                request = {"timestamp_ms": ts, "proceed": True}
            else:
                raise ScriptGap(f"real-world driver has no policy for phase {phase!r}")
            status, body = self.service.handle_respond(session_id, request)
            if status != 200:
                raise ScriptGap(f"real-world respond rejected: {body}")
        raise ScriptGap("real-world session did not terminate")


@dataclass(frozen=True)
class TrajectoryReport:
    weeks: int
    total_sessions: int
    weekly_opening: tuple[float, ...]
    weekly_daily_level: tuple[int, ...]     # daily position at each week's end
    first_session_level: int
    max_stimulus_level: int
    monthly: tuple[dict, ...]
    proxies: dict
    violations: tuple[str, ...]
    final_position: dict

    def to_dict(self) -> dict[str, Any]:
        return {
            "weeks": self.weeks,
            "total_sessions": self.total_sessions,
            "weekly_opening": list(self.weekly_opening),
            "weekly_daily_level": list(self.weekly_daily_level),
            "first_session_level": self.first_session_level,
            "max_stimulus_level": self.max_stimulus_level,
            "monthly": list(self.monthly),
            "proxies": self.proxies,
            "violations": list(self.violations),
            "final_position": self.final_position,
        }


def run_scenario(
    script: PatientScript,
    weeks: int,
    *,
    store_path: str | Path | None = None,
    config: EngineConfig | None = None,
    keep_store: bool = False,
) -> tuple[TrajectoryReport, SessionService]:
    """Run ``weeks`` weeks of the script against a fresh service stack.

    Returns the report plus the live service (whose store holds the full
    encrypted event log). The caller owns the store file when ``store_path``
    is given; otherwise a temp file is used and removed unless ``keep_store``.
    """
    if weeks > len(script.weeks):
        raise ScriptGap(f"script covers {len(script.weeks)} weeks, {weeks} requested")
    owns_tempfile = store_path is None
    if store_path is None:
        handle = tempfile.NamedTemporaryFile(prefix="tonegap-sim-", suffix=".store", delete=False)
        handle.close()
        Path(handle.name).unlink()
        store_path = handle.name
    store = EventStore.create(store_path, SIM_PASSPHRASE)
    service = SessionService(store, config=config)

    status, body = service.handle_intake(
        {"profile": script.profile.to_dict(), "timestamp_ms": BASE_MS}
    )
    if status != 200:
        raise ScriptGap(f"intake rejected: {body}")

    weekly_level: list[int] = []
    for week_index in range(1, weeks + 1):
        plan = script.weeks[week_index - 1]
        day0 = (week_index - 1) * 7
        for daily_index, session_plan in enumerate(plan.daily, start=1):
            day = day0 + daily_index - 1
            start = BASE_MS + day * DAY_MS + DAILY_HOUR * HOUR_MS
            _Driver(service, session_plan, plan.opening_activation, plan.response_delay_ms).run(
                SessionType.DAILY, start
            )
            for rw in plan.real_world:
                if rw.after_daily == daily_index:
                    _RealWorldDriver(service, rw, plan.response_delay_ms).run(
                        start + REAL_WORLD_OFFSET_MS
                    )
            # the deeper weekly session sits between the week's 6th and 7th
            # daily practices, evenings of day 6
            if daily_index == 6 and plan.weekly is not None:
                evening = BASE_MS + day * DAY_MS + WEEKLY_HOUR * HOUR_MS
                _Driver(
                    service, plan.weekly, plan.opening_activation, plan.response_delay_ms
                ).run(SessionType.WEEKLY_DEEP, evening)
        weekly_level.append(service.position.current_daily_level)

    records = service.records
    t0 = min(r.opened_at_ms for r in records)
    weekly_opening = []
    for week_index in range(weeks):
        window = [
            r.opening_activation
            for r in records
            if week_index * 7 <= (r.opened_at_ms - t0) // DAY_MS < (week_index + 1) * 7
        ]
        weekly_opening.append(round(sum(window) / len(window), 4) if window else 0.0)

    monthly = []
    for month in range(1, progress_mod.months_available(records) + 1):
        try:
            monthly.append(progress_mod.generate_monthly_summary(records, month).to_dict())
        except EmptyMonth:
            continue
    proxies = progress_mod.compute_proxies(records).to_dict()
    violations = tuple(check_invariants(service.store.events(), config=config))

    first_level = min(records, key=lambda r: r.opened_at_ms).stimulus_level
    report = TrajectoryReport(
        weeks=weeks,
        total_sessions=len(records),
        weekly_opening=tuple(weekly_opening),
        weekly_daily_level=tuple(weekly_level),
        first_session_level=first_level,
        max_stimulus_level=max(r.stimulus_level for r in records),
        monthly=tuple(monthly),
        proxies=proxies,
        violations=violations,
        final_position=service.position.to_dict(),
    )
    if owns_tempfile and not keep_store:
        service.store.wipe()
    return report, service


def dump_events_jsonl(events: Sequence[tuple[int, str, SessionEvent]]) -> str:
    """Plaintext event log as canonical JSON lines (for audit and ``verify``)."""
    lines = []
    for seq, session_id, event in events:
        doc = {"seq": seq, "session_id": session_id, **event.to_dict()}
        lines.append(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def load_events_jsonl(text: str) -> list[tuple[int, str, SessionEvent]]:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        events.append(
            (int(doc.get("seq", len(events) + 1)), str(doc["session_id"]), SessionEvent.from_dict(doc))
        )
    return events


# --- invariant checker --------------------------------------------------------

_ZONE_OK = "within"


def _naive_stable(events: Sequence[SessionEvent]) -> bool:
    """Checker-local stability recount; deliberately shares no engine code."""
    closed = False
    crisis = False
    segments: list[bool] = []
    for ev in events:
        kind = ev.kind
        if kind is EventKind.STEP_BACK:
            return False
        if kind is EventKind.CRISIS_ENTER:
            crisis = True
        elif kind is EventKind.CLASSIFICATION and ev.payload.get("activation_zone") != _ZONE_OK:
            return False
        elif kind is EventKind.STIMULUS_SHOWN:
            segments.append(False)
        elif kind is EventKind.PROMPT_SHOWN:
            if ev.payload.get("layer_target") == 0 and not segments:
                segments.append(False)
        elif kind is EventKind.LAYER_REACHED:
            if segments and ev.payload.get("layer", 0) >= 1:
                segments[-1] = True
        elif kind is EventKind.SESSION_CLOSED:
            closed = True
    return closed and not crisis and bool(segments) and all(segments)


def check_invariants(
    events: Sequence[tuple[int, str, SessionEvent]],
    config: EngineConfig | None = None,
) -> list[str]:
    """Audit a full event log against the protocol's hard rules.

    Checks: ladder levels move only as the three-stable rule and step-backs
    allow; every exceeding-zone classification is immediately followed by
    grounding or crisis; nothing is presented after crisis; real-world
    sessions stay minimal; layer 3 appears only after three prior layer-2
    sessions; timestamps never regress within a session.
    """
    config = config or EngineConfig()
    violations: list[str] = []

    sessions: dict[str, list[SessionEvent]] = {}
    order: list[str] = []
    for _, session_id, event in events:
        if session_id not in sessions:
            sessions[session_id] = []
            order.append(session_id)
        sessions[session_id].append(event)

    session_order: list[tuple[str, list[SessionEvent]]] = []
    for session_id in order:
        evs = sessions[session_id]
        if any(e.kind is EventKind.CHECKIN for e in evs):
            session_order.append((session_id, evs))
    session_order.sort(key=lambda pair: pair[1][0].timestamp_ms)

    # --- per-session safety and shape checks
    for session_id, evs in session_order:
        checkin = next(e for e in evs if e.kind is EventKind.CHECKIN)
        session_type = checkin.payload.get("session_type")
        last_ts = None
        crisis_at = None
        for i, ev in enumerate(evs):
            if last_ts is not None and ev.timestamp_ms < last_ts:
                violations.append(f"timestamp_regression: session={session_id} index={i}")
            last_ts = ev.timestamp_ms
            if ev.kind is EventKind.CRISIS_ENTER and crisis_at is None:
                crisis_at = i
            if ev.kind is EventKind.STIMULUS_SHOWN and crisis_at is not None:
                violations.append(f"stimulus_after_crisis: session={session_id}")
            if ev.kind is EventKind.CLASSIFICATION:
                zone = ev.payload.get("activation_zone")
                is_crisis = bool(ev.payload.get("crisis"))
                if zone == "exceeding" or is_crisis:
                    follower = evs[i + 1] if i + 1 < len(evs) else None
                    ok_kinds = (EventKind.STEP_BACK, EventKind.CRISIS_ENTER)
                    if follower is None or follower.kind not in ok_kinds:
                        violations.append(
                            f"exceeding_without_grounding: session={session_id} index={i}"
                        )
        stimuli = [e for e in evs if e.kind is EventKind.STIMULUS_SHOWN]
        budget = {
            "daily": config.daily_events,
            "weekly_deep": config.weekly_deep_events,
            "real_world": config.real_world_events,
        }.get(session_type, config.daily_events)
        if len(stimuli) > budget:
            violations.append(
                f"event_budget_exceeded: session={session_id} stimuli={len(stimuli)} budget={budget}"
            )
        if session_type == "real_world":
            if len(stimuli) > 1:
                violations.append(f"real_world_stimulus_cap: session={session_id}")
            deepest = max(
                (e.payload.get("layer", 0) for e in evs if e.kind is EventKind.LAYER_REACHED),
                default=0,
            )
            if deepest > 1:
                violations.append(f"real_world_layer_exceeded: session={session_id}")

    # --- cross-session ladder and gating audit
    level = 1
    streak = 0
    layer2_closed = 0
    for session_id, evs in session_order:
        if not any(e.kind is EventKind.SESSION_CLOSED for e in evs):
            continue
        checkin = next(e for e in evs if e.kind is EventKind.CHECKIN)
        session_type = checkin.payload.get("session_type")
        opening_level = int(checkin.payload.get("stimulus_level", 0))
        expected = min(level + 1, 6) if session_type == "weekly_deep" else level
        if opening_level != expected:
            violations.append(
                "ladder_level_mismatch (advance without three stable, or unearned move): "
                f"session={session_id} opened_at_level={opening_level} expected={expected}"
            )
            level = opening_level if session_type != "weekly_deep" else level

        deepest = max(
            (e.payload.get("layer", 0) for e in evs if e.kind is EventKind.LAYER_REACHED),
            default=0,
        )
        if deepest >= 3 and layer2_closed < 3:
            violations.append(
                f"layer3_without_gate: session={session_id} prior_layer2_sessions={layer2_closed}"
            )

        stepped_back = any(e.kind is EventKind.STEP_BACK for e in evs)
        stable = _naive_stable(evs)
        if stepped_back:
            level = max(1, level - 1)
            streak = 0
        elif session_type != "weekly_deep":
            streak = streak + 1 if stable else 0
            if streak >= 3 and level < 5:
                level += 1
                streak = 0
        if deepest >= 2:
            layer2_closed += 1
    return violations


# --- CLI ----------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tonegap-sim",
        description="Run scripted scenarios and audit event logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario script end to end")
    sim.add_argument("--script", required=True, help="script JSON path or packaged scenario name")
    sim.add_argument("--weeks", type=int, required=True)
    sim.add_argument("--out", required=True, help="trajectory report JSON path")
    sim.add_argument("--events-out", default=None, help="also dump the plaintext event log (JSONL)")
    sim.add_argument("--store", default=None, help="keep the encrypted store at this path")

    ver = sub.add_parser("verify", help="audit a JSONL event log for protocol violations")
    ver.add_argument("--log", required=True)

    args = parser.parse_args(argv)
    if args.command == "simulate":
        script = load_script(args.script)
        if args.events_out:
            report, service = run_scenario(
                script, args.weeks, store_path=args.store, keep_store=True
            )
            Path(args.events_out).write_text(
                dump_events_jsonl(service.store.events()), encoding="utf-8"
            )
            if args.store is None:
                service.store.wipe()
            else:
                service.store.close()
        else:
            report, service = run_scenario(script, args.weeks, store_path=args.store)
            if args.store is not None:
                service.store.close()
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
        print(f"{report.total_sessions} sessions, {len(report.violations)} violations -> {args.out}")
        return 1 if report.violations else 0

    text = Path(args.log).read_text(encoding="utf-8")
    violations = check_invariants(load_events_jsonl(text))
    for violation in violations:
        print(violation)
    print(f"{len(violations)} violations")
    return 1 if violations else 0


if __name__ == "__main__":
    raise SystemExit(main())
