"""
Auditing an event log against the protocol's hard rules
=======================================================

The invariant checker shares no code with the session engine — it recounts
ladder movement, safety responses, budgets, and gating straight from the
event log. A clean run passes; here we also forge two logs the way a buggy
(or dishonest) implementation might, and watch the audit catch both.
"""

import dataclasses

from tonegap import EventKind, check_invariants, marcus_script, run_scenario
from tonegap.simulator import dump_events_jsonl, load_events_jsonl

report, service = run_scenario(marcus_script(), 3, keep_store=True)
events = list(service.store.events())
service.store.wipe()

print(f"{len(events)} events from {report.total_sessions} sessions")
print("audit of the honest log:", check_invariants(events) or "clean")

# The log round-trips through plain JSONL for inspection and `tonegap-sim verify`.
text = dump_events_jsonl(events)
assert load_events_jsonl(text) == events
print(f"JSONL dump: {len(text.splitlines())} lines, first line:")
print("  " + text.splitlines()[0][:100] + "...")


def rewrite(events, index, **patch):
    seq, sid, ev = events[index]
    forged = dataclasses.replace(ev, payload={**ev.payload, **patch})
    out = list(events)
    out[index] = (seq, sid, forged)
    return out


# Forgery 1: a session claims it opened two rungs above what was earned.
last_checkin = max(
    i for i, (_, _, e) in enumerate(events) if e.kind is EventKind.CHECKIN
)
forged = rewrite(events, last_checkin, stimulus_level=4)
print("\nforged opening level:")
for violation in check_invariants(forged):
    print("  ", violation)

# Forgery 2: an exceeding-zone moment with no protective response after it.
last_within = max(
    i
    for i, (_, _, e) in enumerate(events)
    if e.kind is EventKind.CLASSIFICATION
    and e.payload.get("activation_zone") == "within"
)
forged = rewrite(events, last_within, activation_zone="exceeding")
print("\nforged activation zone:")
for violation in check_invariants(forged):
    print("  ", violation)
