/**
 * The companion client: one screen at a time, driven entirely by what the
 * local service says to render next. All copy lives in strings.json.
 */

import { ServiceClient, ServiceError, ServiceUnreachable } from "./api.js";
import { SessionClock } from "./clock.js";
import { monthBarsHtml, trendChartSvg } from "./charts.js";
import {
  applyClose,
  applyServerStep,
  canExport,
  initialView,
  requestScreen,
  type Screen,
  type ViewState,
} from "./state.js";
import strings from "./strings.json";
import type {
  FeelingTone,
  PatientInputDict,
  ProfileDict,
  ProgressResponse,
  SessionType,
} from "./types.js";

export interface AppOptions {
  /** Progress-screen refresh interval; 0 disables polling. */
  progressPollMs?: number;
}

type Attrs = Record<string, string | boolean>;

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
      else node.removeAttribute(key);
      if (key === "disabled") (node as unknown as { disabled: boolean }).disabled = value;
    } else if (key === "class") {
      node.className = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export class App {
  view: ViewState = initialView();
  /** Latency between feeling-tone prompt render and submit, captured client-side. */
  lastLatencyMs: number | null = null;

  private clock: SessionClock | null = null;
  private queue: Promise<void> = Promise.resolve();
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private progressReport: ProgressResponse | null | undefined;
  private pendingSessionType: SessionType = "daily";
  private exportNotice: { kind: "done" | "error"; text: string } | null = null;
  private readonly pollMs: number;

  constructor(
    private readonly root: HTMLElement,
    readonly client: ServiceClient,
    options: AppOptions = {},
  ) {
    this.pollMs = options.progressPollMs ?? 15_000;
  }

  async start(): Promise<void> {
    try {
      const health = await this.client.healthz();
      this.view = { ...this.view, intakeComplete: health.intake_complete };
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.view = { ...this.view, banner: strings.app.unreachable };
      } else {
        throw err;
      }
    }
    this.render();
  }

  /** Resolves once every queued user action has been processed. */
  async settle(): Promise<void> {
    let seen: Promise<void>;
    do {
      seen = this.queue;
      await seen;
    } while (seen !== this.queue);
  }

  dispose(): void {
    this.stopPolling();
  }

  private run(work: () => Promise<void>): void {
    this.queue = this.queue.then(async () => {
      try {
        await work();
      } catch (err) {
        const text =
          err instanceof ServiceUnreachable
            ? strings.app.unreachable
            : strings.errors.generic_prefix + (err instanceof Error ? err.message : String(err));
        this.view = { ...this.view, banner: text };
        this.render();
      }
    });
  }

  // --- navigation -----------------------------------------------------------

  private nav(target: Screen): void {
    this.view = requestScreen(this.view, target);
    if (this.view.screen === "progress") {
      this.exportNotice = null;
      this.run(() => this.refreshProgress());
      this.startPolling();
    } else {
      this.stopPolling();
    }
    this.render();
  }

  private startPolling(): void {
    // Background polling exists for the progress screen only.
    if (this.pollMs > 0 && this.pollTimer === null) {
      this.pollTimer = setInterval(() => {
        if (this.view.screen === "progress") this.run(() => this.refreshProgress());
      }, this.pollMs);
    }
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  // --- service round-trips --------------------------------------------------

  private async submitIntake(profile: ProfileDict): Promise<void> {
    try {
      await this.client.intake(profile, Date.now());
    } catch (err) {
      if (err instanceof ServiceError) {
        const slot = this.root.querySelector('[data-testid="intake-error"]');
        if (slot) slot.textContent = strings.intake.error_prefix + err.message;
        return;
      }
      throw err;
    }
    this.view = { ...this.view, intakeComplete: true };
    this.pendingSessionType = "daily";
    this.view = requestScreen(this.view, "checkin");
    this.render();
  }

  private async beginSession(
    sessionType: SessionType,
    activation: number,
    markers: string[],
  ): Promise<void> {
    this.clock = new SessionClock();
    this.lastLatencyMs = null;
    try {
      const res = await this.client.startSession({
        session_type: sessionType,
        checkin_activation: activation,
        timestamp_ms: this.clock.now(),
        body_markers: markers,
      });
      this.view = { ...applyServerStep(this.view, res.session_id, res.action, res.state), banner: null };
    } catch (err) {
      if (err instanceof ServiceError && err.code === "session_already_open" && err.state) {
        // Resume the open session from its authoritative state.
        this.view = applyServerStep(this.view, err.state.session_id, null, err.state);
        this.view = { ...this.view, banner: strings.checkin.resume_note };
      } else {
        throw err;
      }
    }
    this.render();
  }

  private async sendInput(partial: Omit<PatientInputDict, "timestamp_ms">): Promise<void> {
    const binding = this.view.session;
    if (!binding) return;
    const clock = (this.clock ??= new SessionClock());
    if (
      !partial.proceed &&
      binding.state.phase === "awaiting_feeling_tone" &&
      binding.promptRenderedAtMs !== null
    ) {
      this.lastLatencyMs = Date.now() - binding.promptRenderedAtMs;
    }
    try {
      const res = await this.client.respond(binding.sessionId, {
        ...partial,
        timestamp_ms: clock.now(),
      });
      this.view = { ...applyServerStep(this.view, binding.sessionId, res.action, res.state), banner: null };
    } catch (err) {
      if (err instanceof ServiceError && err.code === "phase_mismatch" && err.state) {
        // The service's state wins; drop our stale action and re-render.
        this.view = applyServerStep(this.view, binding.sessionId, null, err.state);
        this.view = { ...this.view, banner: strings.errors.resync };
      } else {
        throw err;
      }
    }
    this.render();
  }

  private async closeOpenSession(): Promise<void> {
    const binding = this.view.session;
    if (!binding) return;
    const clock = (this.clock ??= new SessionClock());
    const res = await this.client.closeSession(binding.sessionId, clock.now());
    this.view = applyClose(this.view, res, strings.welcome.after_crisis);
    this.clock = null;
    this.render();
  }

  private async refreshProgress(): Promise<void> {
    this.progressReport = await this.client.progress();
    this.render();
  }

  private async performExport(phrase: string, recipient: string, outPath: string): Promise<void> {
    try {
      const token = await this.client.consent(phrase);
      const res = await this.client.exportSummaries(token, recipient, outPath, Date.now());
      this.exportNotice = {
        kind: "done",
        text: strings.progress.export_done
          .replace("{path}", res.path)
          .replace("{months}", String(res.months)),
      };
    } catch (err) {
      this.exportNotice = {
        kind: "error",
        text:
          strings.progress.export_error_prefix + (err instanceof Error ? err.message : String(err)),
      };
    }
    this.render();
  }

  // --- rendering ------------------------------------------------------------

  render(): void {
    this.root.textContent = "";
    const header = h("header", {}, h("h1", {}, strings.app.title));
    if (this.view.screen === "welcome") {
      header.append(h("p", { class: "subtitle" }, strings.app.subtitle));
    }
    this.root.append(header);

    if (this.view.banner) {
      this.root.append(h("div", { class: "banner", "data-testid": "banner" }, this.view.banner));
    }

    switch (this.view.screen) {
      case "welcome":
        this.renderWelcome();
        break;
      case "intake":
        this.renderIntake();
        break;
      case "checkin":
        this.renderCheckin();
        break;
      case "weekly_open":
        this.renderWeeklyOpen();
        break;
      case "real_world":
        this.renderRealWorld();
        break;
      case "practice":
        this.renderPractice();
        break;
      case "crisis":
        this.renderCrisis();
        break;
      case "progress":
        this.renderProgress();
        break;
    }
  }

  private navButton(label: string, testid: string, target: Screen): HTMLButtonElement {
    const button = h("button", { "data-testid": testid }, label);
    button.addEventListener("click", () => {
      this.nav(target);
    });
    return button;
  }

  private renderWelcome(): void {
    const panel = h("section", { class: "screen welcome", "data-testid": "screen-welcome" });
    if (!this.view.intakeComplete) {
      panel.append(
        h("h2", {}, strings.welcome.first_heading),
        h("p", {}, strings.welcome.first_body),
        this.navButton(strings.welcome.setup_button, "nav-setup", "intake"),
        this.navButton(strings.welcome.progress_button, "nav-progress", "progress"),
      );
    } else {
      const daily = this.navButton(strings.welcome.daily_button, "nav-daily", "checkin");
      daily.addEventListener("click", () => {
        this.pendingSessionType = "daily";
      });
      panel.append(
        h("h2", {}, strings.welcome.heading),
        daily,
        this.navButton(strings.welcome.real_world_button, "nav-real-world", "real_world"),
        this.navButton(strings.welcome.weekly_button, "nav-weekly", "weekly_open"),
        this.navButton(strings.welcome.progress_button, "nav-progress", "progress"),
      );
    }
    this.root.append(panel);
  }

  private renderIntake(): void {
    const panel = h("section", { class: "screen intake", "data-testid": "screen-intake" });
    panel.append(h("h2", {}, strings.intake.heading), h("p", {}, strings.intake.body));

    const code = h("input", { type: "text", "data-testid": "intake-code" });
    const domain = h("input", { type: "text", "data-testid": "intake-domain" });
    const triggerRows = h("div", { class: "trigger-rows" });
    const addTriggerRow = () => {
      const index = triggerRows.children.length;
      triggerRows.append(
        h(
          "div",
          { class: "trigger-row" },
          h("input", {
            type: "text",
            placeholder: strings.intake.trigger_category,
            "data-testid": `intake-trigger-category-${index}`,
          }),
          h("input", {
            type: "number",
            min: "0",
            max: "10",
            step: "0.5",
            placeholder: strings.intake.trigger_intensity,
            "data-testid": `intake-trigger-intensity-${index}`,
          }),
        ),
      );
    };
    addTriggerRow();
    const addButton = h("button", { "data-testid": "intake-add-trigger" }, strings.intake.add_trigger);
    addButton.addEventListener("click", addTriggerRow);

    const avoidance = h("input", { type: "text", "data-testid": "intake-avoidance" });
    const prior = h("select", { "data-testid": "intake-prior" });
    prior.append(
      h("option", { value: "none" }, strings.intake.prior_none),
      h("option", { value: "some" }, strings.intake.prior_some),
      h("option", { value: "extensive" }, strings.intake.prior_extensive),
    );
    const severity = h("input", { type: "number", min: "0", "data-testid": "intake-severity" });

    const error = h("p", { class: "error", "data-testid": "intake-error" });
    const submit = h("button", { "data-testid": "intake-submit" }, strings.intake.submit);
    submit.addEventListener("click", () => {
      const triggers = Array.from(triggerRows.querySelectorAll(".trigger-row"))
        .map((row) => {
          const [cat, intensity] = Array.from(row.querySelectorAll("input"));
          return { category: cat?.value.trim() ?? "", intensity: Number(intensity?.value ?? "") };
        })
        .filter((t) => t.category !== "" && Number.isFinite(t.intensity));
      const profile: ProfileDict = {
        patient_id: code.value.trim(),
        trauma_domain: domain.value.trim(),
        triggers,
        avoidance_patterns: avoidance.value
          .split(",")
          .map((s) => s.trim())
          .filter((s) => s !== ""),
        prior_practice: prior.value as ProfileDict["prior_practice"],
        baseline_severity: Number(severity.value || "0"),
      };
      this.run(() => this.submitIntake(profile));
    });

    panel.append(
      this.labelled(strings.intake.setup_code, code),
      this.labelled(strings.intake.domain, domain),
      h("h3", {}, strings.intake.triggers),
      triggerRows,
      addButton,
      this.labelled(strings.intake.avoidance, avoidance),
      this.labelled(strings.intake.prior_practice, prior),
      this.labelled(strings.intake.severity, severity),
      error,
      submit,
    );
    this.root.append(panel, this.homeLink());
  }

  private renderCheckinForm(panel: HTMLElement, sessionType: SessionType): void {
    const slider = h("input", {
      type: "range",
      min: "0",
      max: "10",
      step: "0.1",
      value: "5",
      "data-testid": "checkin-activation",
    });
    const readout = h("span", { class: "readout", "data-testid": "checkin-readout" }, "–");
    const submit = h(
      "button",
      { "data-testid": "checkin-submit", disabled: true },
      strings.checkin.submit,
    );
    // No selection yet → submit stays disabled.
    slider.addEventListener("input", () => {
      readout.textContent = Number(slider.value).toFixed(1);
      submit.disabled = false;
    });

    const markerBoxes: HTMLInputElement[] = [];
    const markers = h("fieldset", { class: "markers" }, h("legend", {}, strings.checkin.markers_label));
    for (const marker of strings.checkin.markers) {
      const box = h("input", { type: "checkbox", value: marker, "data-testid": `checkin-marker-${marker}` });
      markerBoxes.push(box);
      markers.append(h("label", { class: "marker" }, box, marker));
    }

    submit.addEventListener("click", () => {
      const chosen = markerBoxes.filter((b) => b.checked).map((b) => b.value);
      this.run(() => this.beginSession(sessionType, Number(slider.value), chosen));
    });

    panel.append(
      h("label", {}, strings.checkin.activation_label),
      h("div", { class: "slider-row" }, slider, readout),
      markers,
      submit,
    );
  }

  private renderCheckin(): void {
    const panel = h("section", { class: "screen checkin", "data-testid": "screen-checkin" });
    panel.append(h("h2", {}, strings.checkin.heading));
    this.renderCheckinForm(panel, this.pendingSessionType);
    this.root.append(panel, this.homeLink());
  }

  private renderWeeklyOpen(): void {
    const panel = h("section", { class: "screen weekly", "data-testid": "screen-weekly" });
    panel.append(
      h("h2", {}, strings.checkin.weekly_heading),
      h("p", {}, strings.checkin.weekly_note),
    );
    this.renderCheckinForm(panel, "weekly_deep");
    this.root.append(panel, this.homeLink());
  }

  private renderRealWorld(): void {
    const panel = h("section", { class: "screen real-world", "data-testid": "screen-real-world" });
    panel.append(h("h2", {}, strings.real_world.heading), h("p", {}, strings.real_world.body));
    const options: [string, string, number][] = [
      [strings.real_world.mild, "rw-mild", 3.0],
      [strings.real_world.strong, "rw-strong", 6.0],
      [strings.real_world.overwhelmed, "rw-overwhelmed", 9.0],
    ];
    for (const [label, testid, activation] of options) {
      // One oversized tap per choice: this screen is used mid-activation.
      const button = h("button", { class: "oversized", "data-testid": testid }, label);
      button.addEventListener("click", () => {
        this.run(() => this.beginSession("real_world", activation, []));
      });
      panel.append(button);
    }
    panel.append(h("p", { class: "note" }, strings.real_world.clinician_note));
    this.root.append(panel, this.homeLink());
  }

  private renderPractice(): void {
    const binding = this.view.session;
    const panel = h("section", { class: "screen practice", "data-testid": "screen-practice" });

    if (!binding) {
      this.renderSessionSummary(panel);
      this.root.append(panel);
      return;
    }

    const { state, action } = binding;
    panel.setAttribute("data-phase", state.phase);
    panel.append(this.layerIndicator(state.current_layer_reached));

    const prompt = action?.prompt_text ?? strings.practice.resume_prompt;

    switch (state.phase) {
      case "settling": {
        panel.append(h("p", { class: "prompt", "data-testid": "practice-prompt" }, prompt));
        panel.append(this.inputButton(strings.practice.continue, "practice-continue", { proceed: true }));
        break;
      }
      case "contact_presented": {
        const text = action?.stimulus_text ?? strings.practice.resume_contact;
        panel.append(
          h(
            "p",
            { class: "level-badge", "data-testid": "practice-level" },
            strings.practice.level_badge.replace(
              "{level}",
              String(action?.stimulus_level ?? state.stimulus_level),
            ),
          ),
          h("p", { class: "stimulus", "data-testid": "practice-stimulus" }, text),
          this.inputButton(strings.practice.continue, "practice-continue", { proceed: true }),
        );
        break;
      }
      case "awaiting_feeling_tone": {
        if (binding.promptRenderedAtMs === null) binding.promptRenderedAtMs = Date.now();
        panel.append(
          h(
            "p",
            { class: "prompt", "data-testid": "practice-prompt" },
            action?.prompt_text ?? strings.practice.tone_question_fallback,
          ),
        );
        this.renderToneControls(panel);
        break;
      }
      case "layer1":
      case "layer2": {
        panel.append(h("p", { class: "prompt", "data-testid": "practice-prompt" }, prompt));
        this.renderLayerControls(panel, state.phase);
        break;
      }
      case "layer3": {
        panel.append(
          h("p", { class: "prompt", "data-testid": "practice-prompt" }, prompt),
          this.inputButton(strings.practice.complete, "practice-continue", { proceed: true }),
        );
        break;
      }
      case "grounding": {
        // Grounding replaces the stimulus entirely.
        panel.append(
          h(
            "div",
            { class: "grounding", "data-testid": "grounding-panel" },
            h("h3", {}, strings.practice.grounding_heading),
            h("p", { class: "prompt", "data-testid": "practice-prompt" }, prompt),
            this.inputButton(strings.practice.grounding_done, "grounding-done", { proceed: true }),
          ),
        );
        break;
      }
      case "closing": {
        const close = h("button", { "data-testid": "close-session" }, strings.practice.close_button);
        close.addEventListener("click", () => {
          this.run(() => this.closeOpenSession());
        });
        panel.append(
          h("h3", {}, strings.practice.closing_heading),
          h("p", { class: "prompt", "data-testid": "practice-prompt" }, prompt),
          close,
        );
        break;
      }
      default: {
        panel.append(h("p", { class: "prompt", "data-testid": "practice-prompt" }, prompt));
        break;
      }
    }
    this.root.append(panel);
  }

  private renderToneControls(panel: HTMLElement): void {
    let selected: FeelingTone | null = null;
    const tones: [FeelingTone, string][] = [
      ["pleasant", strings.practice.tone_pleasant],
      ["unpleasant", strings.practice.tone_unpleasant],
      ["neutral", strings.practice.tone_neutral],
    ];
    const submit = h(
      "button",
      { "data-testid": "tone-submit", disabled: true },
      strings.practice.submit_response,
    );
    const row = h("div", { class: "tone-row" });
    for (const [tone, label] of tones) {
      const button = h("button", { class: "tone", "data-testid": `tone-${tone}` }, label);
      button.addEventListener("click", () => {
        selected = tone;
        for (const sibling of Array.from(row.children)) sibling.classList.remove("selected");
        button.classList.add("selected");
        submit.disabled = false;
      });
      row.append(button);
    }
    const slider = h("input", {
      type: "range",
      min: "0",
      max: "10",
      step: "0.1",
      value: "5",
      "data-testid": "tone-activation",
    });
    const freeText = h("textarea", { "data-testid": "tone-free-text" });
    submit.addEventListener("click", () => {
      if (!selected) return;
      const note = freeText.value.trim();
      this.run(() =>
        this.sendInput({
          structured_choice: selected,
          self_report_activation: Number(slider.value),
          free_text: note === "" ? null : note,
        }),
      );
    });
    panel.append(
      row,
      h("label", {}, strings.practice.activation_label),
      slider,
      h("label", {}, strings.practice.free_text_label),
      freeText,
      submit,
    );
  }

  private renderLayerControls(panel: HTMLElement, phase: "layer1" | "layer2"): void {
    const moveOn = this.inputButton(strings.practice.layer_continue, "layer-continue", {
      structured_choice: "neutral",
    });
    if (phase === "layer1") {
      panel.append(
        this.inputButton(strings.practice.layer_deepen, "layer-deepen", {
          layer_ack: "layer2_confirm",
        }),
        moveOn,
      );
      return;
    }
    // layer2: naming the belief is what opens the deepest step.
    const invite = h("button", { "data-testid": "belief-invite" }, strings.practice.belief_invite);
    const beliefBox = h("div", { class: "belief hidden" });
    const beliefText = h("textarea", { "data-testid": "belief-text" });
    const beliefSubmit = h("button", { "data-testid": "belief-submit" }, strings.practice.belief_submit);
    invite.addEventListener("click", () => {
      beliefBox.classList.remove("hidden");
    });
    beliefSubmit.addEventListener("click", () => {
      const text = beliefText.value.trim();
      this.run(() =>
        this.sendInput({
          layer_ack: "layer3_belief_named",
          free_text: text === "" ? null : text,
        }),
      );
    });
    beliefBox.append(h("label", {}, strings.practice.belief_label), beliefText, beliefSubmit);
    panel.append(invite, beliefBox, moveOn);
  }

  private renderSessionSummary(panel: HTMLElement): void {
    const close = this.view.lastClose;
    if (!close) return;
    const record = close.record;
    const decisionText =
      close.ladder_decision.action === "advance"
        ? strings.practice.ladder_advance
        : close.ladder_decision.action === "regress"
          ? strings.practice.ladder_step_back
          : strings.practice.ladder_hold;
    const progress = this.navButton(
      strings.practice.view_progress,
      "nav-progress-after",
      "progress",
    );
    panel.append(
      h("div", { class: "summary", "data-testid": "summary-panel" },
        h("h3", {}, strings.practice.summary_heading),
        h("p", {}, record.stable ? strings.practice.summary_steady : strings.practice.summary_wobbly),
        h("p", {}, `${strings.practice.summary_level}: ${record.stimulus_level}`),
        h("p", {}, `${strings.practice.summary_layers}: ${record.max_layer_reached}`),
        h("p", { "data-testid": "summary-ladder" }, decisionText),
      ),
      progress,
      this.homeLink(),
    );
  }

  private renderCrisis(): void {
    const binding = this.view.session;
    const panel = h("section", { class: "screen crisis", "data-testid": "crisis-screen" });
    panel.append(h("h2", {}, strings.crisis.heading), h("p", {}, strings.crisis.body));

    // Resources render immediately; nothing further is asked of the patient.
    const list = h("ul", { class: "resources", "data-testid": "crisis-resources" });
    const resources = binding?.action?.resources ?? [];
    if (resources.length === 0) {
      list.append(h("li", {}, strings.crisis.fallback_contact));
    }
    for (const resource of resources) {
      list.append(h("li", {}, `${resource.label}: ${resource.contact}`));
    }
    panel.append(h("p", { class: "clinician-lead" }, strings.crisis.clinician_lead), list);

    if (binding) {
      const close = h("button", { "data-testid": "crisis-close" }, strings.crisis.close_button);
      close.addEventListener("click", () => {
        this.run(() => this.closeOpenSession());
      });
      panel.append(close);
    }
    // Deliberately no home link and no navigation: crisis is not dismissable
    // back into practice.
    this.root.append(panel);
  }

  private renderProgress(): void {
    const panel = h("section", { class: "screen progress", "data-testid": "screen-progress" });
    panel.append(h("h2", {}, strings.progress.heading));
    const report = this.progressReport;

    if (report === null || report === undefined) {
      panel.append(
        h(
          "div",
          { class: "empty", "data-testid": "progress-empty" },
          h("p", {}, strings.progress.empty),
          h("p", {}, strings.progress.empty_cta),
        ),
      );
      this.root.append(panel, this.homeLink());
      return;
    }

    const trend = h("div", { class: "trend", "data-testid": "progress-trend" });
    trend.innerHTML = trendChartSvg(report.proxies.trajectory);
    const months = h("div", { class: "months", "data-testid": "progress-months" });
    months.innerHTML = monthBarsHtml(report.months, {
      month: strings.progress.month_label,
      sessions: strings.progress.sessions_label,
      depth2: strings.progress.depth2_label,
      depth3: strings.progress.depth3_label,
    });

    panel.append(
      h("h3", {}, strings.progress.trend_heading),
      trend,
      h("h3", {}, strings.progress.months_heading),
      months,
      h(
        "p",
        { "data-testid": "progress-position" },
        `${strings.progress.position_label}: ${report.position.current_daily_level}`,
      ),
    );

    if (canExport(this.view)) {
      this.renderExportControls(panel);
    }
    this.root.append(panel, this.homeLink());
  }

  private renderExportControls(panel: HTMLElement): void {
    if (this.exportNotice) {
      panel.append(
        h(
          "p",
          {
            class: this.exportNotice.kind === "done" ? "export-done" : "error",
            "data-testid": this.exportNotice.kind === "done" ? "export-result" : "export-error",
          },
          this.exportNotice.text,
        ),
      );
    }

    const open = h("button", { "data-testid": "export-open" }, strings.progress.export_button);
    const dialog = h("div", { class: "export-dialog hidden", "data-testid": "export-dialog" });
    open.addEventListener("click", () => {
      dialog.classList.remove("hidden");
    });

    const phrase = h("input", { type: "text", "data-testid": "export-phrase" });
    const recipient = h("input", { type: "text", "data-testid": "export-recipient" });
    const outPath = h("input", {
      type: "text",
      value: "summary-export.json",
      "data-testid": "export-path",
    });
    const confirm = h(
      "button",
      { "data-testid": "export-confirm", disabled: true },
      strings.progress.export_confirm,
    );
    // Nothing is sent anywhere until the phrase is typed out in full. The
    // guard repeats inside the handler so a synthetic click on the disabled
    // button still sends nothing.
    const phraseTyped = () =>
      phrase.value.trim().toUpperCase() === strings.progress.export_phrase;
    phrase.addEventListener("input", () => {
      confirm.disabled = !phraseTyped();
    });
    confirm.addEventListener("click", () => {
      if (confirm.disabled || !phraseTyped()) return;
      this.run(() => this.performExport(phrase.value, recipient.value.trim(), outPath.value.trim()));
    });
    const cancel = h("button", { "data-testid": "export-cancel" }, strings.progress.export_cancel);
    cancel.addEventListener("click", () => {
      dialog.classList.add("hidden");
    });

    dialog.append(
      h("h4", {}, strings.progress.export_heading),
      h("p", {}, strings.progress.export_body),
      h("p", { class: "phrase" }, strings.progress.export_phrase),
      this.labelled(strings.progress.export_type_label, phrase),
      this.labelled(strings.progress.export_recipient, recipient),
      this.labelled(strings.progress.export_path, outPath),
      confirm,
      cancel,
    );
    panel.append(open, dialog);
  }

  // --- small helpers --------------------------------------------------------

  private labelled(text: string, control: HTMLElement): HTMLElement {
    return h("div", { class: "field" }, h("label", {}, text), control);
  }

  private layerIndicator(reached: number): HTMLElement {
    const row = h("div", {
      class: "layer-indicator",
      "data-testid": "layer-indicator",
      "data-reached": String(reached),
      "aria-label": strings.practice.layer_indicator_label,
    });
    for (let layer = 1; layer <= 3; layer += 1) {
      row.append(h("span", { class: layer <= reached ? "dot filled" : "dot" }));
    }
    return row;
  }

  private inputButton(
    label: string,
    testid: string,
    input: Omit<PatientInputDict, "timestamp_ms">,
  ): HTMLButtonElement {
    const button = h("button", { "data-testid": testid }, label);
    button.addEventListener("click", () => {
      this.run(() => this.sendInput(input));
    });
    return button;
  }

  private homeLink(): HTMLElement {
    const link = h("button", { class: "home-link", "data-testid": "nav-home" }, strings.app.home);
    link.addEventListener("click", () => {
      this.nav("welcome");
    });
    return link;
  }
}
