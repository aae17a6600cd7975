// Client-side view state. Pure data + transition functions so the logic is
// testable without a DOM; every number shown comes from server responses.

import type {
  AnswerValue,
  DistributionSummary,
  FindingInfo,
  SessionView,
  StepResponse,
} from "./types.js";

export interface TraceRow {
  turn: number;
  finding: FindingInfo;
  answer: AnswerValue;
  entropyAfter: number;
}

export type Phase = "loading" | "picking" | "consulting" | "diagnosed" | "fatal";

export interface UiState {
  phase: Phase;
  banner: string | null;
  catalog: FindingInfo[];
  search: string;
  selected: Set<number>;
  sessionId: string | null;
  turn: number;
  maxTurns: number;
  entropy: number;
  threshold: number;
  distribution: DistributionSummary | null;
  pendingInquiry: FindingInfo | null;
  trace: TraceRow[];
  diagnosis: { name: string; diseaseId: number; entropy: number; turn: number } | null;
  timedOut: boolean;
  busy: boolean;
  showFullDistribution: boolean;
}

export function initialState(): UiState {
  return {
    phase: "loading",
    banner: null,
    catalog: [],
    search: "",
    selected: new Set(),
    sessionId: null,
    turn: 0,
    maxTurns: 0,
    entropy: 0,
    threshold: 0,
    distribution: null,
    pendingInquiry: null,
    trace: [],
    diagnosis: null,
    timedOut: false,
    busy: false,
    showFullDistribution: false,
  };
}

export function catalogLoaded(state: UiState, catalog: FindingInfo[]): UiState {
  return { ...state, phase: "picking", catalog, banner: null };
}

export function toggleFinding(state: UiState, id: number): UiState {
  const selected = new Set(state.selected);
  if (selected.has(id)) {
    selected.delete(id);
  } else {
    selected.add(id);
  }
  return { ...state, selected };
}

export function setSearch(state: UiState, search: string): UiState {
  return { ...state, search };
}

export function filteredCatalog(state: UiState): FindingInfo[] {
  const needle = state.search.trim().toLowerCase();
  if (!needle) return state.catalog;
  return state.catalog.filter((f) => f.name.toLowerCase().includes(needle));
}

export function canStart(state: UiState): boolean {
  return state.phase === "picking" && state.selected.size > 0 && !state.busy;
}

function inquiryOf(step: StepResponse): FindingInfo | null {
  return step.first_inquiry ?? step.next_inquiry ?? null;
}

/** Entropy-stop vs step-limit: the engine stops early only when the reported
 * entropy lies strictly below the top disease's threshold. */
export function isTimeoutDiagnosis(step: StepResponse): boolean {
  return step.stopped && !(step.entropy < step.threshold_of_top_disease);
}

function applyStep(state: UiState, step: StepResponse): UiState {
  const next: UiState = {
    ...state,
    busy: false,
    banner: null,
    sessionId: step.session_id,
    turn: step.turn,
    maxTurns: step.max_turns,
    entropy: step.entropy,
    threshold: step.threshold_of_top_disease,
    distribution: step.distribution_summary,
    pendingInquiry: inquiryOf(step),
  };
  if (step.stopped && step.diagnosis) {
    next.phase = "diagnosed";
    next.pendingInquiry = null;
    next.diagnosis = {
      name: step.diagnosis.name,
      diseaseId: step.diagnosis.disease_id,
      entropy: step.diagnosis.entropy,
      turn: step.diagnosis.turn,
    };
    next.timedOut = isTimeoutDiagnosis(step);
  } else {
    next.phase = "consulting";
  }
  return next;
}

export function sessionStarted(state: UiState, step: StepResponse): UiState {
  return applyStep({ ...state, trace: [] }, step);
}

export function answerSubmitted(state: UiState): UiState {
  return { ...state, busy: true };
}

export function stepReceived(state: UiState, answered: FindingInfo, answer: AnswerValue, step: StepResponse): UiState {
  const trace = [
    ...state.trace,
    { turn: step.turn, finding: answered, answer, entropyAfter: step.entropy },
  ];
  return applyStep({ ...state, trace }, step);
}

export function sessionRestored(state: UiState, view: SessionView): UiState {
  const trace: TraceRow[] = view.history.map((row) => ({
    turn: row.turn,
    finding: row.finding,
    answer: row.answer,
    entropyAfter: row.entropy_after,
  }));
  return applyStep({ ...state, trace }, view);
}

export function errorShown(state: UiState, message: string): UiState {
  return { ...state, busy: false, banner: message };
}

export function toggleFullDistribution(state: UiState): UiState {
  return { ...state, showFullDistribution: !state.showFullDistribution };
}

export interface ChartBar {
  label: string;
  prob: number;
}

/** Bars for the disease chart: server-provided top-k, or the full
 * distribution (still server numbers) behind the toggle. */
export function chartBars(state: UiState, diseaseNames: (id: number) => string): ChartBar[] {
  const dist = state.distribution;
  if (!dist) return [];
  if (!state.showFullDistribution) {
    return dist.top.map((t) => ({ label: t.name, prob: t.prob }));
  }
  return dist.probs.map((p, id) => ({ label: diseaseNames(id), prob: p }));
}

/** Data for the stopping gauge: the current entropy against the threshold of
 * the top disease, scaled into [0, 1] for rendering. */
export function entropyGauge(state: UiState): { entropy: number; threshold: number; scale: number } {
  const scale = Math.max(state.entropy, state.threshold, 1e-9);
  return { entropy: state.entropy, threshold: state.threshold, scale };
}
