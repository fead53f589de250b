/** Wire types for the local session service (JSON over loopback HTTP). */

export type ActionKind =
  | "show_prompt"
  | "show_stimulus"
  | "begin_grounding"
  | "enter_crisis"
  | "advance_layer"
  | "next_contact_event"
  | "close_session";

export type Phase =
  | "checkin"
  | "settling"
  | "contact_presented"
  | "awaiting_feeling_tone"
  | "layer1"
  | "layer2"
  | "layer3"
  | "grounding"
  | "crisis"
  | "closing"
  | "closed";

export type SessionType = "daily" | "weekly_deep" | "real_world";

export type FeelingTone = "pleasant" | "unpleasant" | "neutral";

export interface CrisisResource {
  label: string;
  contact: string;
}

export interface ServerAction {
  kind: ActionKind;
  prompt_text: string | null;
  stimulus_text: string | null;
  stimulus_level: number | null;
  layer: number | null;
  pause_seconds: number | null;
  resources: CrisisResource[];
}

export interface StateSummary {
  session_id: string;
  session_type: SessionType;
  phase: Phase;
  stimulus_level: number;
  events_completed: number;
  event_budget: number;
  current_layer_reached: number;
}

export interface LadderPositionDict {
  current_daily_level: number;
  consecutive_stable_sessions: number;
}

export interface TriggerDict {
  category: string;
  intensity: number;
}

export interface ProfileDict {
  patient_id: string;
  trauma_domain: string;
  triggers: TriggerDict[];
  avoidance_patterns: string[];
  prior_practice: "none" | "some" | "extensive";
  baseline_severity: number;
}

export interface PatientInputDict {
  timestamp_ms: number;
  structured_choice?: FeelingTone | null;
  layer_ack?: "layer2_confirm" | "layer3_belief_named" | null;
  free_text?: string | null;
  self_report_activation?: number | null;
  proceed?: boolean;
}

export interface StartRequest {
  session_type: SessionType;
  checkin_activation: number;
  timestamp_ms: number;
  body_markers?: string[];
}

export interface StartResponse {
  session_id: string;
  action: ServerAction;
  state: StateSummary;
}

export interface StepResponse {
  action: ServerAction;
  state: StateSummary;
}

export interface RecordDict {
  session_id: string;
  session_type: SessionType;
  stimulus_level: number;
  opened_at_ms: number;
  closed_at_ms: number;
  stable: boolean;
  max_layer_reached: number;
  opening_activation: number;
  closing_activation: number;
  step_back_count: number;
  crisis: boolean;
  distress_reported: boolean;
  latencies_ms: number[];
  categories: string[];
}

export interface LadderDecisionDict {
  action: "advance" | "hold" | "regress";
  new_level: number;
  reason: string;
}

export interface CloseResponse {
  record: RecordDict;
  ladder_decision: LadderDecisionDict;
  position: LadderPositionDict;
}

export interface HealthResponse {
  status: string;
  intake_complete: boolean;
  sessions_recorded: number;
  open_session: string | null;
}

export interface IntakeResponse {
  profile: ProfileDict;
  ladder_levels: Record<string, number>;
  position: LadderPositionDict;
}

export interface WindowStatsDict {
  start_ms: number;
  end_ms: number;
  sessions: number;
  reached_layer2: number;
  reached_layer3: number;
  proportion_layer2: number;
  proportion_layer3: number;
  mean_opening_activation: number;
  median_latency_ms: number | null;
}

export interface ProxyReportDict {
  trajectory: [number, number][];
  slope_per_week: number;
  percent_change: number;
  windows: WindowStatsDict[];
  window_days: number;
}

export interface MonthlySummaryDict {
  month: number;
  session_counts: Record<string, number>;
  proportion_layer2: number;
  proportion_layer3: number;
  max_stimulus_level: number;
  median_latency_ms: number | null;
}

export interface ProgressResponse {
  proxies: ProxyReportDict;
  months: MonthlySummaryDict[];
  position: LadderPositionDict;
  sessions_recorded: number;
}

export interface ExportResponse {
  path: string;
  months: number;
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    state?: StateSummary;
  };
}
