"""
What the event store will and will not do
=========================================

Every session event lands in an append-only file sealed record-by-record:
each frame is encrypted and authenticated against its sequence number and
the previous frame's tag, so the file is a chain. This tour pokes at it the
way an attacker (or a crash) would.
"""

import shutil
import tempfile
from pathlib import Path

from tonegap import EventStore, SessionService, marcus_script, run_scenario
from tonegap.errors import IntegrityFailure, StoreLocked
from tonegap.store import FRAME_LEN, MAGIC

workdir = Path(tempfile.mkdtemp(prefix="store-tour-"))
path = workdir / "journal.store"

# Borrow the simulator for two weeks of realistic traffic.
report, service = run_scenario(marcus_script(), 2, store_path=path)
service.store.close()
print(f"wrote {report.total_sessions} sessions to {path.name} "
      f"({path.stat().st_size:,} bytes)")

# 1. The right passphrase reloads identical records.
store = EventStore.open(path, "simulation")
records = store.load_records()
print(f"reopened: {len(records)} closed-session records, "
      f"{len(store.events())} events")
store.close()

# 2. The wrong passphrase opens nothing.
try:
    EventStore.open(path, "guess")
except StoreLocked as exc:
    print("wrong passphrase ->", exc)

# 3. The file itself reveals nothing readable.
raw = path.read_bytes()
for probe in (b"session", b"unpleasant", b"checkin", b"danger"):
    assert probe not in raw
print("known-plaintext scan: no event vocabulary in the raw bytes")

# 4. Flip one ciphertext bit and the chain refuses the whole suffix.
tampered_path = workdir / "tampered.store"
tampered = bytearray(raw)
tampered[len(raw) // 2] ^= 0x01
tampered_path.write_bytes(bytes(tampered))
try:
    EventStore.open(tampered_path, "simulation")
except IntegrityFailure as exc:
    print("one flipped bit ->", exc)

# 5. A crash mid-append only ever costs the partial tail frame.
crashed_path = workdir / "crashed.store"
shutil.copyfile(path, crashed_path)
with open(crashed_path, "ab") as fh:
    fh.write(FRAME_LEN.pack(12_345) + b"interrupted")
recovered = EventStore.open(crashed_path, "simulation")
print(f"crash recovery: {len(recovered.load_records())} records intact, "
      f"tail truncated back to {crashed_path.stat().st_size:,} bytes")
recovered.close()

# 6. Data leaves only as aggregates, and only with typed consent.
store = EventStore.open(path, "simulation")
service = SessionService(store)
status, body = service.handle_consent({"confirmation": "SHARE MY SUMMARY"})
token = body["consent_token"]
out = workdir / "summary-for-clinician.json"
status, body = service.handle_export(
    {"consent_token": token, "recipient": "dr-reyes", "out_path": str(out)}
)
print(f"export with consent: HTTP {status}, {body['months']} monthly "
      f"summaries -> {out.name}")
status, body = service.handle_export(
    {"consent_token": token, "recipient": "dr-reyes", "out_path": str(out)}
)
print(f"replaying the same token: HTTP {status} ({body['error']['code']})")
store.close()

shutil.rmtree(workdir)
assert MAGIC == b"TGSTORE1"
