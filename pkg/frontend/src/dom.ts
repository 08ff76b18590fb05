// DOM rendering: turns ConsoleState into markup. Kept free of business
// logic so the controller stays testable without a browser.

import type { ConsoleState } from "./controller.js";
import { curveGeometry, DEFAULT_LAYOUT, yScale } from "./curve.js";
import type { QueryInstance } from "./types.js";

const esc = (value: unknown): string =>
  String(value).replace(/[&<>"]/g, (c) =>
    c === "&" ? "&amp;" : c === "<" ? "&lt;" : c === ">" ? "&gt;" : "&quot;",
  );

function formatNumber(value: number | string, digits = 4): string {
  if (typeof value === "string") {
    return value;
  }
  return Number.isInteger(value) ? String(value) : value.toFixed(digits);
}

function renderCard(card: QueryInstance, strategy: string): string {
  const rows = card.features
    .map(
      (f) =>
        `<tr><td>${esc(f.name)}</td><td>${esc(formatNumber(f.decoded))}</td>` +
        `<td class="num">${f.normalized.toFixed(4)}</td></tr>`,
    )
    .join("");
  const posterior =
    card.posterior === null
      ? `<span class="muted">no model yet</span>`
      : `<div class="gauge"><div class="gauge-fill" style="width:${(card.posterior * 100).toFixed(1)}%"></div></div>` +
        `<span class="num">${card.posterior.toFixed(3)}</span>`;
  return `
    <div class="card" data-instance="${card.id}">
      <div class="card-head">
        <span class="badge">#${card.id}</span>
        <span class="badge strategy">${esc(strategy)}</span>
        <span class="badge lof">LOF ${card.lof_score.toFixed(2)}</span>
      </div>
      <div class="posterior">attack posterior: ${posterior}</div>
      <table class="features">
        <thead><tr><th>feature</th><th>value</th><th>normalized</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
      <div class="actions">
        <button class="attack" data-action="attack" data-id="${card.id}">attack (a)</button>
        <button class="normal" data-action="normal" data-id="${card.id}">normal (n)</button>
      </div>
    </div>`;
}

function renderChart(state: ConsoleState): string {
  const layout = DEFAULT_LAYOUT;
  if (!state.curve.length) {
    return `<div class="placeholder">no retraining rounds yet</div>`;
  }
  const geometry = curveGeometry(state.curve, state.metrics?.stop_rule ?? null, layout);
  const thresholdLines = geometry.thresholds
    .map(
      (t) =>
        `<line class="threshold ${t.metric}" x1="${t.x1}" y1="${t.y.toFixed(2)}" ` +
        `x2="${t.x2}" y2="${t.y.toFixed(2)}"></line>` +
        `<text class="threshold-label" x="${t.x2 - 4}" y="${(t.y - 4).toFixed(2)}">` +
        `${t.metric} &ge; ${t.value}</text>`,
    )
    .join("");
  const gridY = [0, 0.25, 0.5, 0.75, 1]
    .map((v) => {
      const y = yScale(v, layout).toFixed(2);
      return `<line class="grid" x1="${layout.marginLeft}" y1="${y}" x2="${layout.width - layout.marginRight}" y2="${y}"></line>` +
        `<text class="axis" x="${layout.marginLeft - 6}" y="${y}">${v}</text>`;
    })
    .join("");
  return `
    <svg viewBox="0 0 ${layout.width} ${layout.height}" role="img" aria-label="learning curve">
      ${gridY}
      <path class="line precision" d="${geometry.precisionPath}"></path>
      <path class="line recall" d="${geometry.recallPath}"></path>
      ${thresholdLines}
    </svg>
    <div class="legend">
      <span class="key precision">precision</span>
      <span class="key recall">recall</span>
      <span class="muted">x: labels used (max ${geometry.maxLabels})</span>
    </div>`;
}

export function render(root: HTMLElement, state: ConsoleState): void {
  const banner = state.sessionMissing
    ? `<div class="banner error">session not found</div>`
    : state.connectionLost
      ? `<div class="banner warn">connection lost, retrying&hellip;</div>`
      : state.status === "stopped_success"
        ? `<div class="banner success">target reached: precision ${state.metrics?.latest?.precision.toFixed(3)}, recall ${state.metrics?.latest?.recall.toFixed(3)} after ${state.metrics?.labels_used} labels</div>`
        : state.status === "stopped_budget"
          ? `<div class="banner warn">label budget exhausted</div>`
          : "";
  const cards = state.pending.length
    ? renderCard(state.pending[0], state.strategy)
    : state.status.startsWith("stopped_")
      ? `<div class="placeholder">labeling finished</div>`
      : `<div class="placeholder">waiting for the next query&hellip;</div>`;
  const stats = state.metrics
    ? `<div class="stats">
        <span>status: <b>${esc(state.status)}</b></span>
        <span>labels used: <b>${state.metrics.labels_used}</b> / ${state.metrics.stop_rule.label_budget}</span>
        <span>pool: <b>${state.metrics.pool_size}</b></span>
        <span>round: <b>${state.metrics.round}</b></span>
      </div>`
    : "";
  root.innerHTML = `
    ${banner}
    ${stats}
    <div class="columns">
      <section class="query-pane">${cards}</section>
      <section class="chart-pane">${renderChart(state)}</section>
    </div>`;
}

export function bindActions(
  root: HTMLElement,
  onLabel: (id: number, choice: "attack" | "normal") => void,
): void {
  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    if (action === "attack" || action === "normal") {
      const id = Number(target.dataset.id);
      target.setAttribute("disabled", "true");
      onLabel(id, action);
    }
  });
}
