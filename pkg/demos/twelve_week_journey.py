"""
A twelve-week scripted journey
==============================

The simulator drives the full stack — service, engine, ladder, encrypted
store — from a scripted patient. The bundled "marcus" scenario describes a
combat-trauma presentation practicing daily for twelve weeks: openings drift
down from 6.8 to 3.8, responses get steadier and quicker, and the deeper
weekly sessions reach further as the cross-session gate opens.

Everything below is deterministic: run it twice and the trajectory, the
event log, and every derived number are identical.
"""

from tonegap import marcus_script, run_scenario
from tonegap.progress import evaluate_maintenance
from tonegap.errors import InsufficientHistory

script = marcus_script()
print(f"scenario: {script.name} — {len(script.weeks)} scripted weeks")

report, service = run_scenario(script, 12)

print(f"\n{report.total_sessions} sessions over {report.weeks} weeks, "
      f"{len(report.violations)} audit violations")

print("\n week | mean opening | daily level at week end")
for i, (opening, level) in enumerate(
    zip(report.weekly_opening, report.weekly_daily_level), start=1
):
    bar = "#" * round(opening * 4)
    print(f"  {i:3d} | {opening:12.2f} | {level:7d}   {bar}")

print("\nmonthly summaries")
for month in report.monthly:
    print(
        f"  month {month['month']}: {sum(month['session_counts'].values())} sessions, "
        f"layer-2 {month['proportion_layer2']:.2f}, "
        f"layer-3 {month['proportion_layer3']:.2f}, "
        f"top level {month['max_stimulus_level']}, "
        f"median latency {month['median_latency_ms']:.0f} ms"
    )

proxies = report.proxies
print(f"\nactivation slope: {proxies['slope_per_week']:+.3f} per week")
print(f"first-week vs last-week change: {proxies['percent_change']:.1f}%")
print(f"ladder: level {report.first_session_level} -> {report.max_stimulus_level}")

# Maintenance step-down wants two settled months: activation low at the
# current level, layer 3 routine, and the patient reporting improved
# day-to-day functioning (a monthly self-report the log cannot supply).
try:
    decision = evaluate_maintenance(service.records, {2: True, 3: True})
    print(f"\nmaintenance check over months {decision.months_checked}: "
          f"activation_ok={decision.activation_ok} layer3_ok={decision.layer3_ok} "
          f"functioning_ok={decision.functioning_ok}")
    print(f"recommended practice: {decision.sessions_per_week} sessions/week")
except InsufficientHistory as exc:
    print(f"\nmaintenance check: not yet ({exc})")
