/** Dependency-free SVG/HTML fragments for the progress screen. */

import type { MonthlySummaryDict } from "./types.js";

const WIDTH = 360;
const HEIGHT = 130;
const PAD = 18;

/** Opening-activation trend as an inline SVG polyline (x = time, y = 0..10). */
export function trendChartSvg(trajectory: [number, number][]): string {
  const points = [...trajectory].sort((a, b) => a[0] - b[0]);
  if (points.length === 0) return "";
  const t0 = points[0]![0];
  const t1 = points[points.length - 1]![0];
  const span = Math.max(t1 - t0, 1);
  const x = (t: number) => PAD + ((t - t0) / span) * (WIDTH - 2 * PAD);
  const y = (a: number) => HEIGHT - PAD - (Math.min(Math.max(a, 0), 10) / 10) * (HEIGHT - 2 * PAD);

  const path = points.map(([t, a]) => `${x(t).toFixed(1)},${y(a).toFixed(1)}`).join(" ");
  const first = points[0]![1];
  const last = points[points.length - 1]![1];
  return (
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="activation trend">` +
    `<line x1="${PAD}" y1="${HEIGHT - PAD}" x2="${WIDTH - PAD}" y2="${HEIGHT - PAD}" stroke="#bbb"/>` +
    (points.length > 1
      ? `<polyline points="${path}" fill="none" stroke="#4a7" stroke-width="2"/>`
      : `<circle cx="${x(points[0]![0])}" cy="${y(first)}" r="3" fill="#4a7"/>`) +
    `<text x="${PAD}" y="12" font-size="10">${first.toFixed(1)}</text>` +
    `<text x="${WIDTH - PAD}" y="12" font-size="10" text-anchor="end">${last.toFixed(1)}</text>` +
    `</svg>`
  );
}

/** One horizontal proportion bar, 0..1. */
function bar(label: string, proportion: number, cssClass: string): string {
  const pct = Math.round(Math.min(Math.max(proportion, 0), 1) * 100);
  return (
    `<div class="bar-row"><span class="bar-label">${label}</span>` +
    `<span class="bar-track"><span class="bar-fill ${cssClass}" style="width:${pct}%"></span></span>` +
    `<span class="bar-value">${pct}%</span></div>`
  );
}

export function monthBarsHtml(
  months: MonthlySummaryDict[],
  labels: { month: string; sessions: string; depth2: string; depth3: string },
): string {
  return months
    .map((m) => {
      const sessions = Object.values(m.session_counts).reduce((a, b) => a + b, 0);
      return (
        `<div class="month-block" data-month="${m.month}">` +
        `<h4>${labels.month.replace("{n}", String(m.month))}</h4>` +
        `<p class="month-sessions">${labels.sessions.replace("{n}", String(sessions))}</p>` +
        bar(labels.depth2, m.proportion_layer2, "depth2") +
        bar(labels.depth3, m.proportion_layer3, "depth3") +
        `</div>`
      );
    })
    .join("");
}
