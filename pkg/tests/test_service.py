"""Session service: in-process handlers, persistence ordering, loopback HTTP."""

from __future__ import annotations

import http.client
import json
import shutil
import threading

import pytest

from tonegap import EventStore, SessionService, build_server
from tonegap.errors import LoopbackOnly

PASSPHRASE = "service-test-passphrase"


@pytest.fixture
def store_path(tmp_path):
    return tmp_path / "log.tgstore"


@pytest.fixture
def service(store_path, templates):
    store = EventStore.create(store_path, PASSPHRASE)
    svc = SessionService(store, templates=templates)
    yield svc
    store.close()


def intake(service, profile, ts=0):
    status, body = service.handle_intake(
        {"profile": profile.to_dict(), "timestamp_ms": ts}
    )
    assert status == 200, body
    return body


def drive_to_close(handler, sid, body, ts, *, activation=4.0, deepen=False):
    """Step an already-started session until its record comes back."""
    while True:
        phase = body["state"]["phase"]
        ts += 1_000
        if phase in ("settling", "contact_presented", "layer3", "grounding"):
            status, body = handler.handle_respond(
                sid, {"timestamp_ms": ts, "proceed": True}
            )
        elif phase == "awaiting_feeling_tone":
            status, body = handler.handle_respond(
                sid,
                {
                    "timestamp_ms": ts,
                    "structured_choice": "unpleasant",
                    "self_report_activation": activation,
                },
            )
        elif phase == "layer1" and deepen:
            status, body = handler.handle_respond(
                sid, {"timestamp_ms": ts, "layer_ack": "layer2_confirm"}
            )
        elif phase in ("layer1", "layer2"):
            status, body = handler.handle_respond(
                sid, {"timestamp_ms": ts, "structured_choice": "neutral"}
            )
        elif phase in ("closing", "crisis"):
            status, body = handler.handle_close(sid, {"timestamp_ms": ts})
            assert status == 200, body
            return body
        else:
            raise AssertionError(f"driver has no move for phase {phase!r}")
        assert status == 200, body


def run_session(handler, *, t0, session_type="daily", activation=4.0, deepen=False):
    """Drive one session through the handlers to a closed record."""
    status, body = handler.handle_start(
        {
            "session_type": session_type,
            "checkin_activation": activation,
            "timestamp_ms": t0,
        }
    )
    assert status == 201, body
    return drive_to_close(
        handler, body["session_id"], body, t0, activation=activation, deepen=deepen
    )


# --- handler flow -------------------------------------------------------------


def test_healthz_tracks_lifecycle(service, profile):
    assert service.handle_healthz() == (
        200,
        {
            "status": "ok",
            "intake_complete": False,
            "sessions_recorded": 0,
            "open_session": None,
        },
    )
    intake(service, profile)
    _, body = service.handle_healthz()
    assert body["intake_complete"] is True

    status, started = service.handle_start(
        {"checkin_activation": 5.0, "timestamp_ms": 1_000}
    )
    assert status == 201
    _, body = service.handle_healthz()
    assert body["open_session"] == started["session_id"]


def test_intake_reports_ladder_shape(service, profile):
    body = intake(service, profile)
    assert body["profile"] == profile.to_dict()
    assert set(body["ladder_levels"]) == {1, 2, 3, 4, 5, 6}
    assert all(n >= 2 for n in body["ladder_levels"].values())
    assert body["position"] == {
        "current_daily_level": 1,
        "consecutive_stable_sessions": 0,
    }


def test_intake_rejects_malformed_profile(service):
    status, body = service.handle_intake({"profile": {"patient_id": "x"}})
    assert status == 422
    assert "error" in body


def test_full_session_produces_record_and_ladder_move(service, profile):
    intake(service, profile)
    closed = run_session(service, t0=10_000)
    record = closed["record"]
    assert record["session_id"] == "s0001"
    assert record["stable"] is True
    assert record["max_layer_reached"] == 1
    assert closed["ladder_decision"]["action"] == "hold"
    assert closed["position"] == {
        "current_daily_level": 1,
        "consecutive_stable_sessions": 1,
    }
    assert [r.session_id for r in service.records] == ["s0001"]

    closed = run_session(service, t0=90_000_000)
    assert closed["record"]["session_id"] == "s0002"
    assert closed["position"]["consecutive_stable_sessions"] == 2


def test_three_stable_sessions_advance_the_ladder(service, profile):
    intake(service, profile)
    day = 86_400_000
    for i in range(3):
        closed = run_session(service, t0=(i + 1) * day)
    assert closed["ladder_decision"]["action"] == "advance"
    assert closed["position"] == {
        "current_daily_level": 2,
        "consecutive_stable_sessions": 0,
    }
    status, started = service.handle_start(
        {"checkin_activation": 5.0, "timestamp_ms": 4 * day}
    )
    assert status == 201
    assert started["state"]["stimulus_level"] == 2


def test_start_requires_intake(service):
    status, body = service.handle_start(
        {"checkin_activation": 5.0, "timestamp_ms": 1_000}
    )
    assert status == 409
    assert body["error"]["code"] == "intake_required"


def test_only_one_session_open_at_a_time(service, profile):
    intake(service, profile)
    service.handle_start({"checkin_activation": 5.0, "timestamp_ms": 1_000})
    status, body = service.handle_start(
        {"checkin_activation": 5.0, "timestamp_ms": 2_000}
    )
    assert status == 409
    assert body["error"]["code"] == "session_already_open"
    assert body["state"]["session_id"] == "s0001"


def test_respond_and_close_require_the_open_session(service, profile):
    intake(service, profile)
    status, body = service.handle_respond(
        "s0001", {"timestamp_ms": 1, "proceed": True}
    )
    assert (status, body["error"]["code"]) == (404, "no_such_session")

    service.handle_start({"checkin_activation": 5.0, "timestamp_ms": 1_000})
    status, body = service.handle_respond(
        "s0999", {"timestamp_ms": 2_000, "proceed": True}
    )
    assert (status, body["error"]["code"]) == (404, "no_such_session")
    status, body = service.handle_close("s0999", {"timestamp_ms": 2_000})
    assert (status, body["error"]["code"]) == (404, "no_such_session")


def test_wrong_move_is_a_conflict_not_a_crash(service, profile):
    intake(service, profile)
    service.handle_start({"checkin_activation": 5.0, "timestamp_ms": 1_000})
    service.handle_respond("s0001", {"timestamp_ms": 2_000, "proceed": True})
    service.handle_respond("s0001", {"timestamp_ms": 3_000, "proceed": True})
    # a bare ack where a response is due
    status, body = service.handle_respond(
        "s0001", {"timestamp_ms": 4_000, "proceed": True}
    )
    assert status == 409
    assert body["error"]["code"] == "phase_mismatch"
    assert body["state"]["phase"] == "awaiting_feeling_tone"

    status, body = service.handle_close("s0001", {"timestamp_ms": 5_000})
    assert status == 409
    assert body["error"]["code"] == "not_closable"


def test_malformed_requests_are_422(service, profile):
    intake(service, profile)
    status, body = service.handle_start({"timestamp_ms": 1_000})
    assert status == 422
    status, body = service.handle_start(
        {"checkin_activation": 11.0, "timestamp_ms": 1_000}
    )
    assert (status, body["error"]["code"]) == (422, "invalid_activation")

    service.handle_start({"checkin_activation": 5.0, "timestamp_ms": 1_000})
    status, body = service.handle_respond(
        "s0001", {"timestamp_ms": 2_000, "structured_choice": "ecstatic"}
    )
    assert (status, body["error"]["code"]) == (422, "invalid_input")
    status, body = service.handle_respond(
        "s0001", {"timestamp_ms": 500, "proceed": True}
    )
    assert (status, body["error"]["code"]) == (422, "timestamp_regression")


# --- persistence ordering and restart -----------------------------------------


def test_events_hit_disk_before_the_response(service, store_path, profile, tmp_path):
    intake(service, profile)
    service.handle_start({"checkin_activation": 5.0, "timestamp_ms": 1_000})
    service.handle_respond("s0001", {"timestamp_ms": 2_000, "proceed": True})

    # a byte-for-byte copy of the live file already holds everything reported
    snapshot = tmp_path / "snapshot.tgstore"
    shutil.copyfile(store_path, snapshot)
    mirror = EventStore.open(snapshot, PASSPHRASE)
    try:
        persisted = [e for _, sid, e in mirror.events() if sid == "s0001"]
        assert tuple(persisted) == service.open_state.events
    finally:
        mirror.close()


def test_restart_restores_position_records_and_numbering(
    service, store_path, profile, templates
):
    intake(service, profile)
    day = 86_400_000
    for i in range(3):
        run_session(service, t0=(i + 1) * day, deepen=(i == 2))
    position_before = service.position
    records_before = list(service.records)
    service.store.close()

    revived = SessionService(EventStore.open(store_path, PASSPHRASE), templates=templates)
    try:
        assert revived.position == position_before
        assert revived.records == records_before
        assert revived.profile == service.profile
        assert revived.ladder == service.ladder
        _, health = revived.handle_healthz()
        assert health["intake_complete"] is True
        assert health["sessions_recorded"] == 3
        status, started = revived.handle_start(
            {"checkin_activation": 5.0, "timestamp_ms": 5 * day}
        )
        assert status == 201
        assert started["session_id"] == "s0004"
    finally:
        revived.store.close()


def test_crashed_open_session_is_abandoned_not_resurrected(
    service, store_path, profile, templates
):
    intake(service, profile)
    run_session(service, t0=86_400_000)
    service.handle_start({"checkin_activation": 5.0, "timestamp_ms": 172_800_000})
    service.handle_respond("s0002", {"timestamp_ms": 172_801_000, "proceed": True})
    service.store.close()   # process dies mid-session

    revived = SessionService(EventStore.open(store_path, PASSPHRASE), templates=templates)
    try:
        _, health = revived.handle_healthz()
        assert health["open_session"] is None
        assert health["sessions_recorded"] == 1   # the crashed session left no record
        status, started = revived.handle_start(
            {"checkin_activation": 5.0, "timestamp_ms": 259_200_000}
        )
        assert status == 201
        assert started["session_id"] == "s0003"   # the burned id is not reused
        # the abandoned events are still on disk for audit
        assert any(sid == "s0002" for _, sid, _ in revived.store.events())
    finally:
        revived.store.close()


# --- progress, consent, export ------------------------------------------------


def test_progress_is_empty_then_populated(service, profile):
    assert service.handle_progress() == (204, None)
    intake(service, profile)
    run_session(service, t0=86_400_000)
    status, body = service.handle_progress()
    assert status == 200
    assert set(body) == {"proxies", "months", "position", "sessions_recorded"}
    assert body["sessions_recorded"] == 1
    assert body["months"][0]["month"] == 1


def test_consent_phrase_gates_token(service):
    status, body = service.handle_consent({"confirmation": "sure, whatever"})
    assert (status, body["error"]["code"]) == (403, "consent_refused")
    status, body = service.handle_consent({"confirmation": "SHARE MY SUMMARY"})
    assert status == 200
    assert body["consent_token"]


def test_export_flow(service, profile, tmp_path):
    out = tmp_path / "summary.json"
    _, minted = service.handle_consent({"confirmation": "SHARE MY SUMMARY"})
    token = minted["consent_token"]

    status, body = service.handle_export({"consent_token": token, "recipient": "dr-reyes"})
    assert (status, body["error"]["code"]) == (422, "invalid_request")

    # nothing recorded yet: refused, and the token survives the refusal
    status, body = service.handle_export(
        {"consent_token": token, "recipient": "dr-reyes", "out_path": str(out)}
    )
    assert (status, body["error"]["code"]) == (409, "nothing_to_export")

    intake(service, profile)
    run_session(service, t0=86_400_000)
    status, body = service.handle_export(
        {"consent_token": "bogus", "recipient": "dr-reyes", "out_path": str(out)}
    )
    assert (status, body["error"]["code"]) == (403, "no_consent")

    status, body = service.handle_export(
        {
            "consent_token": token,
            "recipient": "dr-reyes",
            "out_path": str(out),
            "timestamp_ms": 172_800_000,
        }
    )
    assert status == 200, body
    assert body["months"] == 1
    document = json.loads(out.read_text())
    assert document["schema_version"] == "tonegap-export-1"
    assert document["recipient"] == "dr-reyes"

    # the token was consumed by the successful export
    status, body = service.handle_export(
        {"consent_token": token, "recipient": "dr-reyes", "out_path": str(out)}
    )
    assert (status, body["error"]["code"]) == (403, "no_consent")


# --- HTTP adapter -------------------------------------------------------------


@pytest.fixture
def http_port(service):
    server = build_server(service, "127.0.0.1:0")
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server.server_address[1]
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def request(port, method, path, body=None):
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=10)
    try:
        payload = None if body is None else json.dumps(body)
        conn.request(method, path, body=payload, headers={"Content-Type": "application/json"})
        resp = conn.getresponse()
        data = resp.read()
        return resp.status, json.loads(data) if data else None
    finally:
        conn.close()


class HttpFacade:
    """Same handler surface as ``SessionService``, but over real sockets."""

    def __init__(self, port):
        self.port = port

    def handle_start(self, body):
        return request(self.port, "POST", "/session/start", body)

    def handle_respond(self, sid, body):
        return request(self.port, "POST", f"/session/{sid}/respond", body)

    def handle_close(self, sid, body):
        return request(self.port, "POST", f"/session/{sid}/close", body)


def test_http_round_trip_over_loopback(http_port, profile, tmp_path):
    status, body = request(http_port, "GET", "/healthz")
    assert (status, body["intake_complete"]) == (200, False)
    assert request(http_port, "GET", "/progress") == (204, None)

    status, body = request(
        http_port, "POST", "/intake", {"profile": profile.to_dict(), "timestamp_ms": 0}
    )
    assert status == 200

    facade = HttpFacade(http_port)
    status, body = facade.handle_start(
        {"checkin_activation": 5.0, "timestamp_ms": 1_000}
    )
    assert status == 201
    sid = body["session_id"]
    # engine errors surface as HTTP statuses, not dropped connections
    status, err = facade.handle_close(sid, {"timestamp_ms": 2_000})
    assert (status, err["error"]["code"]) == (409, "not_closable")

    closed = drive_to_close(facade, sid, body, 2_000)
    assert closed["record"]["session_id"] == sid

    status, body = request(http_port, "GET", "/progress")
    assert (status, body["sessions_recorded"]) == (200, 1)

    _, minted = request(
        http_port, "POST", "/consent", {"confirmation": "SHARE MY SUMMARY"}
    )
    out = tmp_path / "export.json"
    status, body = request(
        http_port,
        "POST",
        "/export",
        {
            "consent_token": minted["consent_token"],
            "recipient": "dr-reyes",
            "out_path": str(out),
        },
    )
    assert status == 200
    assert out.exists()


def test_http_unknown_paths_and_bad_json(http_port):
    assert request(http_port, "GET", "/nope")[0] == 404
    assert request(http_port, "POST", "/nope")[0] == 404
    conn = http.client.HTTPConnection("127.0.0.1", http_port, timeout=10)
    try:
        conn.request(
            "POST", "/intake", body="{not json",
            headers={"Content-Type": "application/json"},
        )
        resp = conn.getresponse()
        assert resp.status == 400
        resp.read()
    finally:
        conn.close()


@pytest.mark.parametrize(
    "bind", ["0.0.0.0:0", "192.168.1.5:8080", "example.com:80", "[::]:0"]
)
def test_non_loopback_binds_are_refused(service, bind):
    with pytest.raises(LoopbackOnly):
        build_server(service, bind)


def test_loopback_names_are_accepted(service):
    for bind in ("127.0.0.1:0", "localhost:0"):
        server = build_server(service, bind)
        server.server_close()
