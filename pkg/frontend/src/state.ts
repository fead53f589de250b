/**
 * Pure view-state transitions, kept separate from the DOM so the rules that
 * matter clinically are testable as plain functions:
 *
 *  - the crisis screen can never be dismissed back into practice;
 *  - the export control exists only on the progress screen.
 */

import type { CloseResponse, ServerAction, StateSummary } from "./types.js";

export type Screen =
  | "welcome"
  | "intake"
  | "checkin"
  | "practice"
  | "real_world"
  | "weekly_open"
  | "progress"
  | "crisis";

export interface SessionBinding {
  sessionId: string;
  state: StateSummary;
  /** Most recent action from the service; null right after a resume/re-sync. */
  action: ServerAction | null;
  /** Client-side capture of when the feeling-tone prompt was rendered. */
  promptRenderedAtMs: number | null;
}

export interface ViewState {
  screen: Screen;
  intakeComplete: boolean;
  banner: string | null;
  session: SessionBinding | null;
  lastClose: CloseResponse | null;
}

export function initialView(): ViewState {
  return {
    screen: "welcome",
    intakeComplete: false,
    banner: null,
    session: null,
    lastClose: null,
  };
}

/** True while an open session sits in the crisis phase. */
export function crisisLocked(view: ViewState): boolean {
  return view.session !== null && view.session.state.phase === "crisis";
}

/**
 * Navigate. A crisis-locked view ignores every request except staying put:
 * the only way forward is closing the session.
 */
export function requestScreen(view: ViewState, target: Screen): ViewState {
  if (crisisLocked(view) && target !== "crisis") return view;
  if (target === "practice" && view.session === null && view.lastClose === null) {
    return { ...view, screen: "checkin" };
  }
  return { ...view, screen: target, banner: null };
}

/** Fold one service response into the view. Crisis always wins the screen. */
export function applyServerStep(
  view: ViewState,
  sessionId: string,
  action: ServerAction | null,
  state: StateSummary,
): ViewState {
  const screen: Screen =
    state.phase === "crisis" || action?.kind === "enter_crisis" ? "crisis" : "practice";
  return {
    ...view,
    screen,
    session: { sessionId, state, action, promptRenderedAtMs: null },
    lastClose: null,
  };
}

/** A closed crisis session lands on welcome with an aftercare note, never back in practice. */
export function applyClose(
  view: ViewState,
  close: CloseResponse,
  aftercareNote: string,
): ViewState {
  const wasCrisis = view.screen === "crisis" || crisisLocked(view);
  return {
    ...view,
    screen: wasCrisis ? "welcome" : "practice",
    banner: wasCrisis ? aftercareNote : null,
    session: null,
    lastClose: close,
  };
}

/** The export control renders on the progress screen and nowhere else. */
export function canExport(view: ViewState): boolean {
  return view.screen === "progress";
}
