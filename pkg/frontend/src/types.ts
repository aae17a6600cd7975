// Wire types mirroring the consultation service JSON contract.

export interface FindingInfo {
  id: number;
  name: string;
  kind: "symptom" | "examination";
}

export interface TopDisease {
  disease_id: number;
  name: string;
  prob: number;
}

export interface DistributionSummary {
  top: TopDisease[];
  probs: number[];
}

export interface Diagnosis {
  disease_id: number;
  name: string;
  entropy: number;
  turn: number;
}

export interface StepResponse {
  session_id: string;
  turn: number;
  max_turns: number;
  entropy: number;
  threshold_of_top_disease: number;
  distribution_summary: DistributionSummary;
  stopped: boolean;
  status: string;
  first_inquiry?: FindingInfo;
  next_inquiry?: FindingInfo;
  diagnosis?: Diagnosis;
}

export interface HistoryRow {
  turn: number;
  finding: FindingInfo;
  answer: AnswerValue;
  entropy_after: number;
}

export interface SessionView extends StepResponse {
  self_reports: FindingInfo[];
  initial_entropy: number;
  history: HistoryRow[];
  pending_inquiry?: FindingInfo;
}

export type AnswerValue = "positive" | "negative" | "cant_say";

export interface ApiErrorBody {
  code: string;
  message: string;
}
