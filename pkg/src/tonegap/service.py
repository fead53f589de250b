"""Local session service: in-process handlers plus a loopback-only HTTP adapter.

The service owns one patient's store, ladder position, and at most one open
session. All handlers are plain methods returning ``(status, body)`` so tests
and the simulator drive the real logic without sockets; the HTTP layer is a
thin JSON adapter over them. Every state-changing handler appends its events
to the encrypted store *before* returning, so a crash after a response never
loses what the response reported.

The HTTP server refuses to bind anything but loopback. There is no TLS, no
auth, and no remote story on purpose: the service is a local process serving
a local UI, and the only data that ever leaves the store is the consent-gated
aggregate export written to a patient-chosen file path.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Mapping

from . import progress as progress_mod
from .elicitation import ClassifierPort, PatientInput, PromptSet, RuleClassifier, load_prompts
from .engine import EngineConfig, ProtocolEngine, SessionRecord, SessionState
from .errors import (
    EmptyMonth,
    EmptyProfile,
    EmptyRecords,
    EmptySummaries,
    InvalidActivation,
    LoopbackOnly,
    MissingTemplates,
    NoConsent,
    NotClosable,
    PhaseMismatch,
    SessionAlreadyOpen,
    TimestampRegression,
)
from .events import EventKind, SessionEvent
from .ladder import (
    LadderPosition,
    PatientProfile,
    SessionOutcome,
    SessionType,
    StimulusLadder,
    StimulusTemplate,
    build_ladder,
    fold_session,
    load_templates,
)
from .safety import CrisisResource, load_crisis_resources
from .store import (
    ConsentRegistry,
    EventStore,
    export_summaries,
    write_export,
)

log = logging.getLogger(__name__)

LOOPBACK_HOSTS = frozenset({"127.0.0.1", "::1", "localhost"})
DEFAULT_BIND = "127.0.0.1:8787"
PASSPHRASE_ENV = "TONEGAP_PASSPHRASE"
INTAKE_STREAM = "intake"


def _error(status: int, code: str, message: str, **extra: Any) -> tuple[int, dict]:
    body = {"error": {"code": code, "message": message}}
    body.update(extra)
    return status, body


class SessionService:
    """One patient, one store, at most one open session."""

    def __init__(
        self,
        store: EventStore,
        *,
        templates: Mapping[str, list[StimulusTemplate]] | None = None,
        config: EngineConfig | None = None,
        classifier: ClassifierPort | None = None,
        prompts: PromptSet | None = None,
        resources: tuple[CrisisResource, ...] | None = None,
    ) -> None:
        self.store = store
        self.templates = templates or load_templates()
        self.config = config or EngineConfig()
        self.classifier = classifier or RuleClassifier()
        self.prompts = prompts or load_prompts()
        self.resources = resources if resources is not None else load_crisis_resources()
        self.consent = ConsentRegistry()
        self._lock = threading.RLock()

        self.profile: PatientProfile | None = None
        self.ladder: StimulusLadder | None = None
        self.engine: ProtocolEngine | None = None
        self.position = LadderPosition()
        self.records: list[SessionRecord] = []
        self.open_state: SessionState | None = None
        self._persisted = 0          # events of the open session already stored
        self._session_count = 0
        self._rebuild_from_store()

    # --- state reconstruction -------------------------------------------------

    def _rebuild_from_store(self) -> None:
        """Replay the store: intake, closed-session records, ladder position.

        Sessions that never closed (a crash mid-session) are left as they are —
        their events remain for audit, they produce no record, and a new
        session may open.
        """
        for _, sid, event in self.store.events():
            if event.kind is EventKind.INTAKE_COMPLETED:
                self.profile = PatientProfile.from_dict(event.payload["profile"])
                self.ladder = StimulusLadder.from_dict(event.payload["ladder"])
            if event.kind is EventKind.CHECKIN:
                self._session_count += 1
        if self.ladder is not None:
            self.engine = self._make_engine()
        self.records = self.store.load_records()
        position = LadderPosition()
        for record in self.records:
            position, _ = fold_session(
                position,
                SessionOutcome(record.session_id, record.stimulus_level, record.stable),
                step_back=record.step_back_count > 0,
                distress_reported=record.distress_reported,
            )
        self.position = position

    def _make_engine(self) -> ProtocolEngine:
        assert self.ladder is not None
        return ProtocolEngine(
            self.ladder,
            classifier=self.classifier,
            config=self.config,
            prompts=self.prompts,
            crisis_resources=self.resources,
        )

    def _prior_layer2_sessions(self) -> int:
        return sum(1 for r in self.records if r.max_layer_reached >= 2)

    def _persist_delta(self, state: SessionState) -> None:
        delta = state.events[self._persisted :]
        if delta:
            self.store.append_events(state.session_id, list(delta))
            self._persisted = len(state.events)

    # --- handlers -------------------------------------------------------------

    def handle_healthz(self) -> tuple[int, dict]:
        with self._lock:
            return 200, {
                "status": "ok",
                "intake_complete": self.ladder is not None,
                "sessions_recorded": len(self.records),
                "open_session": self.open_state.session_id if self.open_state else None,
            }

    def handle_intake(self, body: Mapping[str, Any]) -> tuple[int, dict]:
        with self._lock:
            try:
                profile = PatientProfile.from_dict(body["profile"])
                ladder = build_ladder(profile, self.templates)
            except (KeyError, ValueError) as exc:
                return _error(422, "invalid_profile", str(exc))
            except EmptyProfile as exc:
                return _error(422, "empty_profile", str(exc))
            except MissingTemplates as exc:
                return _error(422, "missing_templates", str(exc))
            event = SessionEvent(
                int(body.get("timestamp_ms", 0)),
                EventKind.INTAKE_COMPLETED,
                {"profile": profile.to_dict(), "ladder": ladder.to_dict()},
            )
            self.store.append_event(INTAKE_STREAM, event)
            self.profile = profile
            self.ladder = ladder
            self.engine = self._make_engine()
            levels = {
                level: len(ladder.items_at(level)) for level in range(1, 7)
            }
            return 200, {
                "profile": profile.to_dict(),
                "ladder_levels": levels,
                "position": self.position.to_dict(),
            }

    def handle_start(self, body: Mapping[str, Any]) -> tuple[int, dict]:
        with self._lock:
            if self.engine is None:
                return _error(409, "intake_required", "complete intake before starting sessions")
            if self.open_state is not None:
                return _error(
                    409,
                    "session_already_open",
                    f"session {self.open_state.session_id} is open",
                    state=self.open_state.summary(),
                )
            try:
                session_type = SessionType(body.get("session_type", "daily"))
                activation = float(body["checkin_activation"])
                timestamp = int(body["timestamp_ms"])
            except (KeyError, ValueError) as exc:
                return _error(422, "invalid_request", str(exc))
            markers = [str(m) for m in body.get("body_markers", [])]

            recap = None
            if session_type is SessionType.WEEKLY_DEEP and self.records:
                recap = progress_mod.weekly_recap(self.records, self.position)

            session_id = f"s{self._session_count + 1:04d}"
            try:
                state, action = self.engine.start_session(
                    self.position,
                    session_type,
                    activation,
                    markers,
                    session_id=session_id,
                    started_at_ms=timestamp,
                    prior_layer2_sessions=self._prior_layer2_sessions(),
                    recap_text=recap,
                )
            except InvalidActivation as exc:
                return _error(422, "invalid_activation", str(exc))
            self._session_count += 1
            self.open_state = state
            self._persisted = 0
            self._persist_delta(state)
            return 201, {
                "session_id": session_id,
                "action": action.to_dict(),
                "state": state.summary(),
            }

    def handle_respond(self, session_id: str, body: Mapping[str, Any]) -> tuple[int, dict]:
        with self._lock:
            state = self.open_state
            if state is None or state.session_id != session_id:
                return _error(404, "no_such_session", f"session {session_id} is not open")
            try:
                patient_input = PatientInput.from_dict(body)
            except (KeyError, ValueError) as exc:
                return _error(422, "invalid_input", str(exc))
            assert self.engine is not None
            try:
                new_state, action = self.engine.next_step(state, patient_input)
            except PhaseMismatch as exc:
                return _error(409, "phase_mismatch", str(exc), state=state.summary())
            except TimestampRegression as exc:
                return _error(422, "timestamp_regression", str(exc))
            self.open_state = new_state
            self._persist_delta(new_state)
            return 200, {"action": action.to_dict(), "state": new_state.summary()}

    def handle_close(self, session_id: str, body: Mapping[str, Any]) -> tuple[int, dict]:
        with self._lock:
            state = self.open_state
            if state is None or state.session_id != session_id:
                return _error(404, "no_such_session", f"session {session_id} is not open")
            try:
                timestamp = int(body["timestamp_ms"])
            except (KeyError, ValueError) as exc:
                return _error(422, "invalid_request", str(exc))
            assert self.engine is not None
            try:
                closed_state, record = self.engine.close_session(state, timestamp)
            except NotClosable as exc:
                return _error(409, "not_closable", str(exc), state=state.summary())
            except TimestampRegression as exc:
                return _error(422, "timestamp_regression", str(exc))
            self.open_state = closed_state
            self._persist_delta(closed_state)

            self.position, decision = fold_session(
                self.position,
                SessionOutcome(record.session_id, record.stimulus_level, record.stable),
                step_back=record.step_back_count > 0,
                distress_reported=record.distress_reported,
            )
            self.records.append(record)
            self.open_state = None
            self._persisted = 0
            return 200, {
                "record": record.to_dict(),
                "ladder_decision": {
                    "action": decision.action.value,
                    "new_level": decision.new_level,
                    "reason": decision.reason.value,
                },
                "position": self.position.to_dict(),
            }

    def handle_progress(self) -> tuple[int, dict | None]:
        with self._lock:
            if not self.records:
                return 204, None
            report = progress_mod.compute_proxies(self.records)
            months = []
            for month in range(1, progress_mod.months_available(self.records) + 1):
                try:
                    months.append(
                        progress_mod.generate_monthly_summary(self.records, month).to_dict()
                    )
                except EmptyMonth:
                    continue
            return 200, {
                "proxies": report.to_dict(),
                "months": months,
                "position": self.position.to_dict(),
                "sessions_recorded": len(self.records),
            }

    def handle_consent(self, body: Mapping[str, Any]) -> tuple[int, dict]:
        with self._lock:
            try:
                token = self.consent.mint(str(body.get("confirmation", "")))
            except NoConsent as exc:
                return _error(403, "consent_refused", str(exc))
            return 200, {"consent_token": token}

    def handle_export(self, body: Mapping[str, Any]) -> tuple[int, dict]:
        with self._lock:
            token = str(body.get("consent_token", ""))
            recipient = str(body.get("recipient", ""))
            out_path = body.get("out_path")
            if not recipient or not out_path:
                return _error(422, "invalid_request", "recipient and out_path are required")
            summaries = []
            for month in range(1, progress_mod.months_available(self.records) + 1):
                try:
                    summaries.append(progress_mod.generate_monthly_summary(self.records, month))
                except (EmptyMonth, EmptyRecords):
                    continue
            try:
                document = export_summaries(
                    summaries,
                    registry=self.consent,
                    token=token,
                    recipient=recipient,
                    created_at_ms=int(body.get("timestamp_ms", 0)),
                )
            except NoConsent as exc:
                return _error(403, "no_consent", str(exc))
            except EmptySummaries as exc:
                return _error(409, "nothing_to_export", str(exc))
            path = write_export(document, str(out_path))
            return 200, {"path": str(path), "months": len(document.summaries)}


# --- HTTP adapter -------------------------------------------------------------

def _make_handler(service: SessionService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args: Any) -> None:   # quiet by default
            log.debug("http: " + fmt, *args)

        def _send(self, status: int, body: dict | None) -> None:
            payload = b"" if body is None else json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            if payload:
                self.wfile.write(payload)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            return json.loads(self.rfile.read(length))

        def do_GET(self) -> None:
            if self.path == "/healthz":
                self._send(*service.handle_healthz())
            elif self.path == "/progress":
                self._send(*service.handle_progress())
            else:
                self._send(404, {"error": {"code": "not_found", "message": self.path}})

        def do_POST(self) -> None:
            try:
                body = self._read_body()
            except (ValueError, json.JSONDecodeError):
                self._send(400, {"error": {"code": "bad_json", "message": "unparseable body"}})
                return
            parts = [p for p in self.path.split("/") if p]
            if parts == ["intake"]:
                self._send(*service.handle_intake(body))
            elif parts == ["consent"]:
                self._send(*service.handle_consent(body))
            elif parts == ["export"]:
                self._send(*service.handle_export(body))
            elif parts == ["session", "start"]:
                self._send(*service.handle_start(body))
            elif len(parts) == 3 and parts[0] == "session" and parts[2] == "respond":
                self._send(*service.handle_respond(parts[1], body))
            elif len(parts) == 3 and parts[0] == "session" and parts[2] == "close":
                self._send(*service.handle_close(parts[1], body))
            else:
                self._send(404, {"error": {"code": "not_found", "message": self.path}})

    return Handler


def build_server(service: SessionService, bind: str = DEFAULT_BIND) -> ThreadingHTTPServer:
    """Bind the HTTP adapter; anything but loopback is refused outright."""
    host, _, port_text = bind.rpartition(":")
    host = host or bind
    if host not in LOOPBACK_HOSTS:
        raise LoopbackOnly(f"refusing to bind non-loopback host {host!r}")
    port = int(port_text) if port_text else 0
    return ThreadingHTTPServer((host, port), _make_handler(service))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tonegap-service",
        description="Run the local session service on a loopback port.",
    )
    parser.add_argument("--store", required=True, help="path to the encrypted event store")
    parser.add_argument("--bind", default=DEFAULT_BIND, help="host:port (loopback only)")
    parser.add_argument("--templates", default=None, help="stimulus template JSON override")
    parser.add_argument("--config", default=None, help="engine config JSON override")
    args = parser.parse_args(argv)

    passphrase = os.environ.get(PASSPHRASE_ENV)
    if not passphrase:
        import getpass

        passphrase = getpass.getpass("store passphrase: ")

    store_path = Path(args.store)
    if store_path.exists():
        store = EventStore.open(store_path, passphrase)
    else:
        store = EventStore.create(store_path, passphrase)

    config = EngineConfig()
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        config = EngineConfig(**overrides)
    templates = load_templates(args.templates) if args.templates else None

    service = SessionService(store, templates=templates, config=config)
    server = build_server(service, args.bind)
    host, port = server.server_address[0], server.server_address[1]
    logging.basicConfig(level=logging.INFO)
    log.info("serving on http://%s:%s (loopback only)", host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        store.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
