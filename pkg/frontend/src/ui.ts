// DOM rendering. Deliberately dumb: reads UiState, writes elements.

import type { AnswerValue } from "./types.js";
import {
  ChartBar,
  UiState,
  canStart,
  chartBars,
  entropyGauge,
  filteredCatalog,
} from "./state.js";

export interface Handlers {
  onSearch(value: string): void;
  onToggleFinding(id: number): void;
  onStart(): void;
  onAnswer(answer: AnswerValue): void;
  onToggleDistribution(): void;
  onRetry(): void;
  onNewSession(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderBanner(state: UiState, handlers: Handlers, root: HTMLElement) {
  if (!state.banner) return;
  const banner = el("div", "banner", state.banner);
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", () => handlers.onRetry());
  banner.appendChild(retry);
  root.appendChild(banner);
}

function renderPicker(state: UiState, handlers: Handlers, root: HTMLElement) {
  const panel = el("section", "picker");
  panel.appendChild(el("h2", undefined, "What symptoms are you experiencing?"));

  const search = el("input", "search") as HTMLInputElement;
  search.placeholder = "Search findings...";
  search.value = state.search;
  search.addEventListener("input", () => handlers.onSearch(search.value));
  panel.appendChild(search);

  const list = el("div", "finding-list");
  for (const f of filteredCatalog(state)) {
    const item = el("label", "finding-item");
    const box = el("input") as HTMLInputElement;
    box.type = "checkbox";
    box.checked = state.selected.has(f.id);
    box.addEventListener("change", () => handlers.onToggleFinding(f.id));
    item.appendChild(box);
    item.appendChild(el("span", `kind-${f.kind}`, `${f.name} (${f.kind})`));
    list.appendChild(item);
  }
  panel.appendChild(list);

  const start = el("button", "start", `Start consultation (${state.selected.size} selected)`);
  start.disabled = !canStart(state);
  start.addEventListener("click", () => handlers.onStart());
  panel.appendChild(start);
  root.appendChild(panel);
}

function renderChart(state: UiState, handlers: Handlers, panel: HTMLElement) {
  const chart = el("div", "chart");
  chart.appendChild(el("h3", undefined, "Disease distribution"));
  const bars: ChartBar[] = chartBars(state, (id) => `#${id}`);
  const maxProb = Math.max(...bars.map((b) => b.prob), 1e-9);
  for (const bar of bars) {
    const row = el("div", "bar-row");
    row.appendChild(el("span", "bar-label", bar.label));
    const track = el("div", "bar-track");
    const fill = el("div", "bar-fill");
    fill.style.width = `${(100 * bar.prob) / maxProb}%`;
    fill.title = bar.prob.toFixed(4);
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(el("span", "bar-value", bar.prob.toFixed(3)));
    chart.appendChild(row);
  }
  const toggle = el(
    "button",
    "toggle",
    state.showFullDistribution ? "Show top diseases" : "Show full distribution",
  );
  toggle.addEventListener("click", () => handlers.onToggleDistribution());
  chart.appendChild(toggle);

  const gauge = entropyGauge(state);
  const gaugeBox = el("div", "gauge");
  gaugeBox.appendChild(
    el(
      "div",
      "gauge-text",
      `entropy ${gauge.entropy.toFixed(4)} vs threshold K ${gauge.threshold.toFixed(4)} of top disease`,
    ),
  );
  const track = el("div", "gauge-track");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${(100 * gauge.entropy) / gauge.scale}%`;
  const marker = el("div", "gauge-marker");
  marker.style.left = `${(100 * gauge.threshold) / gauge.scale}%`;
  track.appendChild(fill);
  track.appendChild(marker);
  gaugeBox.appendChild(track);
  chart.appendChild(gaugeBox);
  panel.appendChild(chart);
}

function renderTrace(state: UiState, panel: HTMLElement) {
  if (!state.trace.length) return;
  const table = el("table", "trace");
  const head = el("tr");
  for (const col of ["Turn", "Finding", "Answer", "Entropy after"]) {
    head.appendChild(el("th", undefined, col));
  }
  table.appendChild(head);
  for (const row of state.trace) {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, String(row.turn)));
    tr.appendChild(el("td", undefined, row.finding.name));
    tr.appendChild(el("td", `answer-${row.answer}`, row.answer.replace("_", "'")));
    tr.appendChild(el("td", undefined, row.entropyAfter.toFixed(4)));
    table.appendChild(tr);
  }
  panel.appendChild(el("h3", undefined, "Consultation trace"));
  panel.appendChild(table);
}

function renderConsult(state: UiState, handlers: Handlers, root: HTMLElement) {
  const panel = el("section", "consult");
  panel.appendChild(
    el("div", "progress", `Turn ${state.turn} of ${state.maxTurns}`),
  );
  if (state.pendingInquiry) {
    const q = el("div", "inquiry");
    q.appendChild(el("h2", undefined, `Do you have: ${state.pendingInquiry.name}?`));
    q.appendChild(el("div", "kind", state.pendingInquiry.kind));
    const buttons = el("div", "answers");
    const options: [AnswerValue, string][] = [
      ["positive", "Yes"],
      ["negative", "No"],
      ["cant_say", "Can't say"],
    ];
    for (const [value, label] of options) {
      const btn = el("button", `answer ${value}`, label);
      btn.disabled = state.busy;
      btn.addEventListener("click", () => handlers.onAnswer(value));
      buttons.appendChild(btn);
    }
    q.appendChild(buttons);
    panel.appendChild(q);
  }
  renderChart(state, handlers, panel);
  renderTrace(state, panel);
  root.appendChild(panel);
}

function renderDiagnosis(state: UiState, handlers: Handlers, root: HTMLElement) {
  const panel = el("section", "diagnosed");
  if (!state.diagnosis) return;
  panel.appendChild(el("h2", undefined, `Diagnosis: ${state.diagnosis.name}`));
  panel.appendChild(
    el(
      "div",
      "detail",
      `entropy ${state.diagnosis.entropy.toFixed(4)} after ${state.diagnosis.turn} turns`,
    ),
  );
  if (state.timedOut) {
    panel.appendChild(el("div", "notice", "Diagnosis at step limit: the turn budget ran out."));
  }
  renderChart(state, handlers, panel);
  renderTrace(state, panel);
  const again = el("button", "start", "New consultation");
  again.addEventListener("click", () => handlers.onNewSession());
  panel.appendChild(again);
  root.appendChild(panel);
}

export function render(state: UiState, handlers: Handlers, root: HTMLElement) {
  root.innerHTML = "";
  renderBanner(state, handlers, root);
  switch (state.phase) {
    case "loading":
      root.appendChild(el("div", "loading", "Loading finding catalog..."));
      break;
    case "picking":
      renderPicker(state, handlers, root);
      break;
    case "consulting":
      renderConsult(state, handlers, root);
      break;
    case "diagnosed":
      renderDiagnosis(state, handlers, root);
      break;
    case "fatal":
      break;
  }
}
