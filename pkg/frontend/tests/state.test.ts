import { describe, expect, it } from "vitest";
import { SessionClock } from "../src/clock.js";
import {
  applyClose,
  applyServerStep,
  canExport,
  crisisLocked,
  initialView,
  requestScreen,
  type Screen,
  type ViewState,
} from "../src/state.js";
import strings from "../src/strings.json";
import type { CloseResponse, ServerAction, StateSummary } from "../src/types.js";

function summary(overrides: Partial<StateSummary> = {}): StateSummary {
  return {
    session_id: "s0001",
    session_type: "daily",
    phase: "settling",
    stimulus_level: 1,
    events_completed: 0,
    event_budget: 3,
    current_layer_reached: 0,
    ...overrides,
  };
}

function action(overrides: Partial<ServerAction> = {}): ServerAction {
  return {
    kind: "show_prompt",
    prompt_text: "p",
    stimulus_text: null,
    stimulus_level: null,
    layer: null,
    pause_seconds: null,
    resources: [],
    ...overrides,
  };
}

function closeResponse(): CloseResponse {
  return {
    record: {
      session_id: "s0001",
      session_type: "daily",
      stimulus_level: 1,
      opened_at_ms: 0,
      closed_at_ms: 9,
      stable: false,
      max_layer_reached: 0,
      opening_activation: 5,
      closing_activation: 5,
      step_back_count: 0,
      crisis: true,
      distress_reported: true,
      latencies_ms: [],
      categories: [],
    },
    ladder_decision: { action: "hold", new_level: 1, reason: "crisis" },
    position: { current_daily_level: 1, consecutive_stable_sessions: 0 },
  };
}

function crisisView(): ViewState {
  return applyServerStep(
    initialView(),
    "s0001",
    action({ kind: "enter_crisis", resources: [{ label: "Line", contact: "000" }] }),
    summary({ phase: "crisis" }),
  );
}

describe("crisis screen", () => {
  it("is entered whenever the service says so", () => {
    expect(crisisView().screen).toBe("crisis");
    const byPhaseOnly = applyServerStep(initialView(), "s0001", null, summary({ phase: "crisis" }));
    expect(byPhaseOnly.screen).toBe("crisis");
  });

  it("cannot be dismissed back into practice or anywhere else", () => {
    const locked = crisisView();
    expect(crisisLocked(locked)).toBe(true);
    const targets: Screen[] = [
      "practice",
      "checkin",
      "welcome",
      "progress",
      "real_world",
      "weekly_open",
      "intake",
    ];
    for (const target of targets) {
      expect(requestScreen(locked, target).screen).toBe("crisis");
    }
  });

  it("unlocks only by closing the session, landing on welcome with aftercare", () => {
    const closed = applyClose(crisisView(), closeResponse(), strings.welcome.after_crisis);
    expect(closed.screen).toBe("welcome");
    expect(closed.session).toBeNull();
    expect(closed.banner).toBe(strings.welcome.after_crisis);
    expect(requestScreen(closed, "progress").screen).toBe("progress");
  });
});

describe("screen transitions", () => {
  it("grounding stays inside the practice screen", () => {
    const view = applyServerStep(
      initialView(),
      "s0001",
      action({ kind: "begin_grounding" }),
      summary({ phase: "grounding" }),
    );
    expect(view.screen).toBe("practice");
  });

  it("practice without a session routes to check-in", () => {
    expect(requestScreen(initialView(), "practice").screen).toBe("checkin");
  });

  it("a non-crisis close keeps the summary on the practice screen", () => {
    const inSession = applyServerStep(initialView(), "s0001", action(), summary());
    const closed = applyClose(inSession, closeResponse(), strings.welcome.after_crisis);
    expect(closed.screen).toBe("practice");
    expect(closed.lastClose).not.toBeNull();
  });
});

describe("export control", () => {
  it("exists on the progress screen and nowhere else", () => {
    const screens: Screen[] = [
      "welcome",
      "intake",
      "checkin",
      "practice",
      "real_world",
      "weekly_open",
      "crisis",
    ];
    for (const screen of screens) {
      expect(canExport({ ...initialView(), screen })).toBe(false);
    }
    expect(canExport({ ...initialView(), screen: "progress" })).toBe(true);
  });
});

describe("session clock", () => {
  it("never lets a timestamp repeat or run backwards", () => {
    const samples = [100, 50, 50, 99, 200];
    let i = 0;
    const clock = new SessionClock(() => samples[Math.min(i++, samples.length - 1)]!);
    const out = [clock.now(), clock.now(), clock.now(), clock.now(), clock.now()];
    expect(out).toEqual([100, 101, 102, 103, 200]);
    for (let k = 1; k < out.length; k += 1) {
      expect(out[k]!).toBeGreaterThan(out[k - 1]!);
    }
  });
});

describe("copy", () => {
  it("keeps every string free of contemplative-tradition vocabulary", () => {
    const banned =
      /\b(buddh\w*|vedan\w*|dharma|dhamma|sutta|sutra|vipassana|jhana|zen|satipatthana|metta|nirvana|nibbana|karma|mindful\w*|meditat\w*)\b/i;
    const walk = (value: unknown, path: string): void => {
      if (typeof value === "string") {
        expect(value, `strings.json:${path}`).not.toMatch(banned);
      } else if (Array.isArray(value)) {
        value.forEach((v, i) => walk(v, `${path}[${i}]`));
      } else if (value && typeof value === "object") {
        for (const [k, v] of Object.entries(value)) walk(v, `${path}.${k}`);
      }
    };
    walk(strings, "");
  });

  it("spells the consent phrase exactly as the service expects it", () => {
    expect(strings.progress.export_phrase).toBe("SHARE MY SUMMARY");
  });
});
