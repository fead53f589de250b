"""Encrypted, append-only local event store plus consent-gated export.

On-disk layout: a plaintext JSON header (magic, format version, KDF
parameters, salt, key-check verifier) followed by length-framed AEAD records.
Record n is sealed with a nonce derived from its sequence number and
authenticated against additional data binding (seq, previous record's auth
tag), so reordering, deletion, or splicing anywhere but the tail breaks the
chain. A crash can only lose the partial tail frame: reopening truncates to
the longest intact prefix and every earlier record stays readable.

Nothing in this module talks to a network. Data leaves the store only as
aggregate monthly summaries, through an export that requires a one-time
consent token minted by an explicit patient action.
"""

from __future__ import annotations

import json
import os
import secrets
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt

from .engine import SessionRecord, record_from_events
from .errors import EmptySummaries, IntegrityFailure, NoConsent, StoreLocked
from .events import EventKind, SessionEvent

MAGIC = b"TGSTORE1"
FORMAT_VERSION = 1
KEY_LEN = 32
TAG_LEN = 16
NONCE_LEN = 12
FRAME_LEN = struct.Struct(">I")
SCRYPT_N = 2**14
SCRYPT_R = 8
SCRYPT_P = 1
VERIFIER_PLAINTEXT = b"tonegap-store-verifier"
VERIFIER_NONCE = b"\xff" * NONCE_LEN   # reserved; record nonces count up from 1

# kinds allowed to introduce a session id the store has not seen
OPENING_KINDS = frozenset({EventKind.CHECKIN, EventKind.INTAKE_COMPLETED})

EXPORT_SCHEMA_VERSION = "tonegap-export-1"


def _derive_key(passphrase: str, salt: bytes) -> bytes:
    kdf = Scrypt(salt=salt, length=KEY_LEN, n=SCRYPT_N, r=SCRYPT_R, p=SCRYPT_P)
    return kdf.derive(passphrase.encode("utf-8"))


def _nonce(seq: int) -> bytes:
    return seq.to_bytes(NONCE_LEN, "big")


def _aad(seq: int, prev_tag: bytes) -> bytes:
    return b"tonegap|%d|%s" % (seq, prev_tag.hex().encode("ascii"))


class EventStore:
    """Single-writer append-only store. Construct via ``create`` or ``open``."""

    def __init__(
        self,
        path: Path,
        aead: ChaCha20Poly1305,
        handle,
        *,
        next_seq: int,
        prev_tag: bytes,
        events: list[tuple[int, str, SessionEvent]],
    ) -> None:
        self.path = path
        self._aead: ChaCha20Poly1305 | None = aead
        self._fh = handle
        self._next_seq = next_seq
        self._prev_tag = prev_tag
        self._events = events
        self._known_sessions = {session_id for _, session_id, _ in events}

    # --- lifecycle -----------------------------------------------------------

    @classmethod
    def create(cls, path: str | Path, passphrase: str) -> "EventStore":
        path = Path(path)
        salt = secrets.token_bytes(16)
        key = _derive_key(passphrase, salt)
        aead = ChaCha20Poly1305(key)
        verifier = aead.encrypt(VERIFIER_NONCE, VERIFIER_PLAINTEXT, MAGIC)
        header = json.dumps(
            {
                "version": FORMAT_VERSION,
                "kdf": {
                    "name": "scrypt",
                    "n": SCRYPT_N,
                    "r": SCRYPT_R,
                    "p": SCRYPT_P,
                    "salt": salt.hex(),
                },
                "cipher": "chacha20poly1305",
                "verifier": verifier.hex(),
            },
            sort_keys=True,
        ).encode("utf-8")
        handle = open(path, "xb")
        handle.write(MAGIC + FRAME_LEN.pack(len(header)) + header)
        handle.flush()
        os.fsync(handle.fileno())
        return cls(
            path,
            aead,
            handle,
            next_seq=1,
            prev_tag=verifier[-TAG_LEN:],
            events=[],
        )

    @classmethod
    def open(cls, path: str | Path, passphrase: str) -> "EventStore":
        path = Path(path)
        raw = path.read_bytes()
        if len(raw) < len(MAGIC) + FRAME_LEN.size or raw[: len(MAGIC)] != MAGIC:
            raise IntegrityFailure(f"{path} is not a recognizable store file")
        offset = len(MAGIC)
        (header_len,) = FRAME_LEN.unpack_from(raw, offset)
        offset += FRAME_LEN.size
        if offset + header_len > len(raw):
            raise IntegrityFailure("store header is truncated")
        header = json.loads(raw[offset : offset + header_len])
        offset += header_len
        if header.get("version") != FORMAT_VERSION:
            raise IntegrityFailure(f"unsupported store version {header.get('version')}")

        kdf = header["kdf"]
        key = _derive_key(passphrase, bytes.fromhex(kdf["salt"]))
        aead = ChaCha20Poly1305(key)
        verifier = bytes.fromhex(header["verifier"])
        try:
            aead.decrypt(VERIFIER_NONCE, verifier, MAGIC)
        except InvalidTag as exc:
            raise StoreLocked(f"passphrase does not unlock {path}") from exc

        events: list[tuple[int, str, SessionEvent]] = []
        prev_tag = verifier[-TAG_LEN:]
        seq = 1
        good_end = offset
        while True:
            if offset + FRAME_LEN.size > len(raw):
                break   # partial length word: crash tail
            (ct_len,) = FRAME_LEN.unpack_from(raw, offset)
            if offset + FRAME_LEN.size + ct_len > len(raw):
                break   # partial ciphertext: crash tail
            ct = raw[offset + FRAME_LEN.size : offset + FRAME_LEN.size + ct_len]
            try:
                plaintext = aead.decrypt(_nonce(seq), ct, _aad(seq, prev_tag))
            except InvalidTag as exc:
                raise IntegrityFailure(
                    f"record {seq} failed authentication (tampered or corrupt)"
                ) from exc
            doc = json.loads(plaintext)
            events.append(
                (seq, doc["session_id"], SessionEvent.from_dict(doc))
            )
            prev_tag = ct[-TAG_LEN:]
            offset += FRAME_LEN.size + ct_len
            good_end = offset
            seq += 1

        if good_end < len(raw):
            # recover from a crash mid-append: drop the partial tail frame
            with open(path, "r+b") as fh:
                fh.truncate(good_end)
        handle = open(path, "ab")
        return cls(
            path, aead, handle, next_seq=seq, prev_tag=prev_tag, events=events
        )

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        self._aead = None

    def wipe(self) -> None:
        """Overwrite the store file and delete it. Irreversible by design."""
        self.close()
        if self.path.exists():
            size = self.path.stat().st_size
            with open(self.path, "r+b") as fh:
                fh.write(b"\x00" * size)
                fh.flush()
                os.fsync(fh.fileno())
            self.path.unlink()
        self._events = []
        self._known_sessions = set()

    def _require_unlocked(self) -> ChaCha20Poly1305:
        if self._aead is None or self._fh is None:
            raise StoreLocked("store is closed")
        return self._aead

    # --- appends -------------------------------------------------------------

    def append_event(self, session_id: str, event: SessionEvent) -> int:
        return self.append_events(session_id, [event])[0]

    def append_events(
        self, session_id: str, events: Sequence[SessionEvent]
    ) -> list[int]:
        """Append a batch atomically enough: one buffered write, one fsync."""
        aead = self._require_unlocked()
        if not events:
            return []
        if session_id not in self._known_sessions:
            if events[0].kind not in OPENING_KINDS:
                raise IntegrityFailure(
                    f"unknown session {session_id!r} cannot append {events[0].kind.value}"
                )
        seqs: list[int] = []
        frames = bytearray()
        prev_tag = self._prev_tag
        seq = self._next_seq
        appended: list[tuple[int, str, SessionEvent]] = []
        for event in events:
            doc = {"session_id": session_id, **event.to_dict()}
            plaintext = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
            ct = aead.encrypt(_nonce(seq), plaintext, _aad(seq, prev_tag))
            frames += FRAME_LEN.pack(len(ct)) + ct
            prev_tag = ct[-TAG_LEN:]
            appended.append((seq, session_id, event))
            seqs.append(seq)
            seq += 1
        self._fh.write(bytes(frames))
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._next_seq = seq
        self._prev_tag = prev_tag
        self._events.extend(appended)
        self._known_sessions.add(session_id)
        return seqs

    # --- reads ---------------------------------------------------------------

    def events(self) -> tuple[tuple[int, str, SessionEvent], ...]:
        self._require_unlocked()
        return tuple(self._events)

    def session_events(self, session_id: str) -> tuple[SessionEvent, ...]:
        self._require_unlocked()
        return tuple(e for _, sid, e in self._events if sid == session_id)

    def session_ids(self) -> tuple[str, ...]:
        self._require_unlocked()
        seen: list[str] = []
        for _, sid, _ in self._events:
            if sid not in seen:
                seen.append(sid)
        return tuple(seen)

    def load_records(
        self, start_ms: int | None = None, end_ms: int | None = None
    ) -> list[SessionRecord]:
        """Fold every closed session into its record; open sessions are skipped.

        Uses the same fold as the live engine, so a record loaded here is
        identical to the one produced when the session closed.
        """
        self._require_unlocked()
        by_session: dict[str, list[SessionEvent]] = {}
        order: list[str] = []
        for _, sid, event in self._events:
            if sid not in by_session:
                by_session[sid] = []
                order.append(sid)
            by_session[sid].append(event)
        records: list[SessionRecord] = []
        for sid in order:
            session = by_session[sid]
            if not any(e.kind is EventKind.SESSION_CLOSED for e in session):
                continue
            if not any(e.kind is EventKind.CHECKIN for e in session):
                continue   # intake stream, not a session
            record = record_from_events(session)
            if start_ms is not None and record.opened_at_ms < start_ms:
                continue
            if end_ms is not None and record.opened_at_ms >= end_ms:
                continue
            records.append(record)
        records.sort(key=lambda r: r.opened_at_ms)
        return records


# --- consent and export ------------------------------------------------------

EXPORT_CONFIRMATION_PHRASE = "SHARE MY SUMMARY"


@dataclass
class ConsentRegistry:
    """One-time export tokens, minted only by an explicit typed confirmation."""

    _tokens: dict[str, bool] = field(default_factory=dict)   # token -> used

    def mint(self, typed_confirmation: str) -> str:
        if typed_confirmation.strip().upper() != EXPORT_CONFIRMATION_PHRASE:
            raise NoConsent(
                f"confirmation phrase mismatch; expected {EXPORT_CONFIRMATION_PHRASE!r}"
            )
        token = secrets.token_hex(16)
        self._tokens[token] = False
        return token

    def redeem(self, token: str) -> None:
        if token not in self._tokens:
            raise NoConsent("unknown consent token")
        if self._tokens[token]:
            raise NoConsent("consent token already used")
        self._tokens[token] = True


@dataclass(frozen=True)
class ExportDocument:
    """Aggregate-only share document. Built exclusively from monthly summaries."""

    schema_version: str
    recipient: str
    created_at_ms: int
    consent_token: str
    summaries: tuple[dict[str, Any], ...]

    def to_bytes(self) -> bytes:
        doc = {
            "schema_version": self.schema_version,
            "recipient": self.recipient,
            "created_at_ms": self.created_at_ms,
            "consent_token": self.consent_token,
            "summaries": list(self.summaries),
        }
        return json.dumps(doc, sort_keys=True, indent=2).encode("utf-8")


def export_summaries(
    summaries: Sequence[Any],
    *,
    registry: ConsentRegistry,
    token: str,
    recipient: str,
    created_at_ms: int,
) -> ExportDocument:
    """Build the export document; consumes the consent token."""
    if not summaries:
        raise EmptySummaries("nothing to export")
    registry.redeem(token)
    return ExportDocument(
        schema_version=EXPORT_SCHEMA_VERSION,
        recipient=recipient,
        created_at_ms=created_at_ms,
        consent_token=token,
        summaries=tuple(
            s.to_dict() if hasattr(s, "to_dict") else dict(s) for s in summaries
        ),
    )


def write_export(document: ExportDocument, path: str | Path) -> Path:
    """Write the export to the patient-chosen path; the only sanctioned egress."""
    out = Path(path)
    out.write_bytes(document.to_bytes())
    return out
