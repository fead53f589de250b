"""Longitudinal progress proxies computed from closed-session records.

Three observable proxies stand in for the underlying consolidation the
practice targets: the session-opening activation trajectory (declining slope),
the proportion of sessions reaching layers 2 and 3 per window (rising), and
the median feeling-tone response latency (falling). Months are 28-day windows
counted from the first recorded session, so "month 2" is always days 28..55
of treatment regardless of calendar.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .engine import SessionRecord
from .errors import EmptyMonth, EmptyRecords, InsufficientHistory
from .ladder import LadderPosition, SessionType

MS_PER_DAY = 86_400_000
MS_PER_WEEK = 7 * MS_PER_DAY
MONTH_DAYS = 28
MONTH_MS = MONTH_DAYS * MS_PER_DAY

MAINTENANCE_ACTIVATION_MAX = 4.0
MAINTENANCE_LAYER3_MIN = 0.6
MAINTENANCE_SESSIONS_PER_WEEK = 3
ACTIVE_SESSIONS_PER_WEEK = 7


@dataclass(frozen=True)
class WindowStats:
    """Layer access and latency over one fixed-width window of sessions."""

    start_ms: int
    end_ms: int
    sessions: int
    reached_layer2: int
    reached_layer3: int
    proportion_layer2: float
    proportion_layer3: float
    mean_opening_activation: float | None
    median_latency_ms: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "sessions": self.sessions,
            "reached_layer2": self.reached_layer2,
            "reached_layer3": self.reached_layer3,
            "proportion_layer2": self.proportion_layer2,
            "proportion_layer3": self.proportion_layer3,
            "mean_opening_activation": self.mean_opening_activation,
            "median_latency_ms": self.median_latency_ms,
        }


@dataclass(frozen=True)
class ProxyReport:
    trajectory: tuple[tuple[int, float], ...]   # (opened_at_ms, opening activation)
    slope_per_week: float
    percent_change: float                       # first-window mean vs last-window mean
    windows: tuple[WindowStats, ...]
    window_days: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "trajectory": [list(point) for point in self.trajectory],
            "slope_per_week": self.slope_per_week,
            "percent_change": self.percent_change,
            "windows": [w.to_dict() for w in self.windows],
            "window_days": self.window_days,
        }


def _window_stats(records: Sequence[SessionRecord], start_ms: int, end_ms: int) -> WindowStats:
    inside = [r for r in records if start_ms <= r.opened_at_ms < end_ms]
    n = len(inside)
    layer2 = sum(1 for r in inside if r.max_layer_reached >= 2)
    layer3 = sum(1 for r in inside if r.max_layer_reached == 3)
    latencies = [latency for r in inside for latency in r.latencies_ms]
    return WindowStats(
        start_ms=start_ms,
        end_ms=end_ms,
        sessions=n,
        reached_layer2=layer2,
        reached_layer3=layer3,
        proportion_layer2=layer2 / n if n else 0.0,
        proportion_layer3=layer3 / n if n else 0.0,
        mean_opening_activation=(
            sum(r.opening_activation for r in inside) / n if n else None
        ),
        median_latency_ms=float(statistics.median(latencies)) if latencies else None,
    )


def compute_proxies(records: Sequence[SessionRecord], window_days: int = 7) -> ProxyReport:
    """All three proxies over the full record history.

    The slope is an ordinary least-squares fit of opening activation against
    time in weeks; percent change compares the first window's mean opening
    activation with the last window's.
    """
    if not records:
        raise EmptyRecords("no session records")
    if window_days < 1:
        raise ValueError(f"window must be at least a day, got {window_days}")

    ordered = sorted(records, key=lambda r: r.opened_at_ms)
    t0 = ordered[0].opened_at_ms
    trajectory = tuple((r.opened_at_ms, r.opening_activation) for r in ordered)

    if len(ordered) >= 2 and ordered[-1].opened_at_ms > t0:
        weeks = np.array(
            [(r.opened_at_ms - t0) / MS_PER_WEEK for r in ordered], dtype=float
        )
        activations = np.array([r.opening_activation for r in ordered], dtype=float)
        slope = float(np.polyfit(weeks, activations, 1)[0])
    else:
        slope = 0.0

    window_ms = window_days * MS_PER_DAY
    span_end = ordered[-1].opened_at_ms + 1
    windows: list[WindowStats] = []
    start = t0
    while start < span_end:
        windows.append(_window_stats(ordered, start, start + window_ms))
        start += window_ms

    first_mean = windows[0].mean_opening_activation
    populated = [w for w in windows if w.mean_opening_activation is not None]
    last_mean = populated[-1].mean_opening_activation if populated else None
    if first_mean and last_mean is not None:
        percent_change = (first_mean - last_mean) / first_mean * 100.0
    else:
        percent_change = 0.0

    return ProxyReport(
        trajectory=trajectory,
        slope_per_week=slope,
        percent_change=percent_change,
        windows=tuple(windows),
        window_days=window_days,
    )


# --- monthly summaries -------------------------------------------------------

@dataclass(frozen=True)
class MonthlySummary:
    """One 28-day treatment month, aggregates only — no free text, by construction."""

    month: int                   # 1-based treatment month
    start_ms: int
    end_ms: int
    session_counts: Mapping[str, int]
    opening_first: float
    opening_last: float
    opening_mean: float
    percent_change: float        # within the month, first session vs last
    proportion_layer2: float
    proportion_layer3: float
    max_stimulus_level: int
    median_latency_ms: float | None
    category_activation: tuple[tuple[str, float], ...]   # ranked, most activating first

    @property
    def top_categories(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.category_activation[:2])

    @property
    def least_categories(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.category_activation[-2:][::-1])

    def to_dict(self) -> dict[str, Any]:
        return {
            "month": self.month,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "session_counts": dict(self.session_counts),
            "opening_first": self.opening_first,
            "opening_last": self.opening_last,
            "opening_mean": self.opening_mean,
            "percent_change": self.percent_change,
            "proportion_layer2": self.proportion_layer2,
            "proportion_layer3": self.proportion_layer3,
            "max_stimulus_level": self.max_stimulus_level,
            "median_latency_ms": self.median_latency_ms,
            "category_activation": [[c, a] for c, a in self.category_activation],
        }


def month_bounds(treatment_start_ms: int, month: int) -> tuple[int, int]:
    if month < 1:
        raise ValueError(f"months are 1-based, got {month}")
    start = treatment_start_ms + (month - 1) * MONTH_MS
    return start, start + MONTH_MS


def generate_monthly_summary(
    records: Sequence[SessionRecord],
    month: int,
    *,
    treatment_start_ms: int | None = None,
) -> MonthlySummary:
    """Aggregate one treatment month. Treatment start defaults to the first record."""
    if not records:
        raise EmptyRecords("no session records")
    ordered = sorted(records, key=lambda r: r.opened_at_ms)
    t0 = treatment_start_ms if treatment_start_ms is not None else ordered[0].opened_at_ms
    start, end = month_bounds(t0, month)
    inside = [r for r in ordered if start <= r.opened_at_ms < end]
    if not inside:
        raise EmptyMonth(f"month {month} ({start}..{end}) has no sessions")

    n = len(inside)
    counts: dict[str, int] = {}
    for r in inside:
        counts[r.session_type.value] = counts.get(r.session_type.value, 0) + 1
    layer2 = sum(1 for r in inside if r.max_layer_reached >= 2)
    layer3 = sum(1 for r in inside if r.max_layer_reached == 3)
    opening_first = inside[0].opening_activation
    opening_last = inside[-1].opening_activation
    opening_mean = sum(r.opening_activation for r in inside) / n
    percent_change = (
        (opening_first - opening_last) / opening_first * 100.0 if opening_first else 0.0
    )
    latencies = [latency for r in inside for latency in r.latencies_ms]

    by_category: dict[str, list[float]] = {}
    for r in inside:
        for category in r.categories:
            by_category.setdefault(category, []).append(r.opening_activation)
    ranked = tuple(
        sorted(
            ((c, sum(vals) / len(vals)) for c, vals in by_category.items()),
            key=lambda pair: (-pair[1], pair[0]),
        )
    )

    return MonthlySummary(
        month=month,
        start_ms=start,
        end_ms=end,
        session_counts=counts,
        opening_first=opening_first,
        opening_last=opening_last,
        opening_mean=opening_mean,
        percent_change=percent_change,
        proportion_layer2=layer2 / n,
        proportion_layer3=layer3 / n,
        max_stimulus_level=max(r.stimulus_level for r in inside),
        median_latency_ms=float(statistics.median(latencies)) if latencies else None,
        category_activation=ranked,
    )


def months_available(records: Sequence[SessionRecord]) -> int:
    """How many complete-or-started treatment months the records span."""
    if not records:
        return 0
    ordered = sorted(records, key=lambda r: r.opened_at_ms)
    span = ordered[-1].opened_at_ms - ordered[0].opened_at_ms
    return span // MONTH_MS + 1


# --- maintenance step-down ---------------------------------------------------

@dataclass(frozen=True)
class MaintenanceDecision:
    step_down: bool
    activation_ok: bool
    layer3_ok: bool
    functioning_ok: bool
    months_checked: tuple[int, int]
    sessions_per_week: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_down": self.step_down,
            "activation_ok": self.activation_ok,
            "layer3_ok": self.layer3_ok,
            "functioning_ok": self.functioning_ok,
            "months_checked": list(self.months_checked),
            "sessions_per_week": self.sessions_per_week,
        }


def evaluate_maintenance(
    records: Sequence[SessionRecord],
    functioning_reports: Mapping[int, bool],
    *,
    activation_max: float = MAINTENANCE_ACTIVATION_MAX,
    layer3_min: float = MAINTENANCE_LAYER3_MIN,
) -> MaintenanceDecision:
    """Step down to maintenance when all three criteria hold across the last
    two consecutive treatment months.

    Criteria: mean opening activation at the current daily level <= the
    threshold; layer-3 proportion >= the threshold; and the patient's monthly
    functioning self-report (supplied by the caller — the event log carries no
    questionnaire) positive. The activation criterion is computed over daily
    sessions run at the current level only, so declining activation reflects
    habituation at equal stimulus intensity rather than an easier ladder.
    """
    total_months = months_available(records)
    if total_months < 2:
        raise InsufficientHistory(f"need 2 months of history, have {total_months}")
    ordered = sorted(records, key=lambda r: r.opened_at_ms)
    t0 = ordered[0].opened_at_ms
    last_two = (total_months - 1, total_months)

    daily = [r for r in ordered if r.session_type is SessionType.DAILY]
    if not daily:
        raise InsufficientHistory("no daily sessions in history")
    current_level = daily[-1].stimulus_level

    activation_ok = True
    layer3_ok = True
    functioning_ok = True
    for month in last_two:
        start, end = month_bounds(t0, month)
        inside = [r for r in ordered if start <= r.opened_at_ms < end]
        if not inside:
            activation_ok = layer3_ok = False
            break
        at_level = [
            r
            for r in inside
            if r.session_type is SessionType.DAILY and r.stimulus_level == current_level
        ]
        if not at_level:
            activation_ok = False
        elif sum(r.opening_activation for r in at_level) / len(at_level) > activation_max:
            activation_ok = False
        layer3 = sum(1 for r in inside if r.max_layer_reached == 3)
        if layer3 / len(inside) < layer3_min:
            layer3_ok = False
        if not functioning_reports.get(month, False):
            functioning_ok = False

    step_down = activation_ok and layer3_ok and functioning_ok
    return MaintenanceDecision(
        step_down=step_down,
        activation_ok=activation_ok,
        layer3_ok=layer3_ok,
        functioning_ok=functioning_ok,
        months_checked=last_two,
        sessions_per_week=(
            MAINTENANCE_SESSIONS_PER_WEEK if step_down else ACTIVE_SESSIONS_PER_WEEK
        ),
    )


# --- weekly recap ------------------------------------------------------------

def weekly_recap(records: Sequence[SessionRecord], position: LadderPosition) -> str:
    """Plain-language opener for a weekly deep session: the last 7 days at a glance."""
    if not records:
        return "No completed sessions this week yet."
    cutoff = max(r.opened_at_ms for r in records) - MS_PER_WEEK
    recent = sorted(
        (r for r in records if r.opened_at_ms >= cutoff), key=lambda r: r.opened_at_ms
    )
    first = recent[0].opening_activation
    last = recent[-1].opening_activation
    deepest = max(r.max_layer_reached for r in recent)
    return (
        f"This week you completed {len(recent)} sessions. "
        f"Opening activation moved from {first:.1f} to {last:.1f}. "
        f"Deepest layer reached: {deepest}. "
        f"Daily practice is at level {position.current_daily_level}."
    )
