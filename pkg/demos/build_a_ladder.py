"""
Building a stimulus ladder from an intake profile
=================================================

A patient's intake names their trigger categories with intensity estimates
(0-10) and the things they currently avoid. From that, the library assembles
a six-level ladder of graded contact items: level 1 is barely suggestive,
level 6 approaches the raw trigger. Sessions later walk this ladder one
level at a time as stability earns advancement.
"""

from tonegap import (
    PatientProfile,
    PriorPractice,
    Trigger,
    build_ladder,
    load_templates,
    select_session_level,
    LadderPosition,
    SessionType,
)

profile = PatientProfile(
    patient_id="demo-patient",
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

ladder = build_ladder(profile, load_templates())

print(f"ladder for {profile.patient_id} ({profile.trauma_domain})")
for level in range(1, 7):
    items = ladder.items_at(level)
    print(f"\nlevel {level} ({len(items)} items)")
    for item in items:
        print(f"  [{item.category}] {item.text}")

# Daily practice opens at the current position's level; the weekly deeper
# session reaches one rung higher, capped at the top of the ladder.
position = LadderPosition()
print("\nfresh position:", position)
print("daily session opens at level",
      select_session_level(position, SessionType.DAILY))
print("weekly deep session opens at level",
      select_session_level(position, SessionType.WEEKLY_DEEP))
