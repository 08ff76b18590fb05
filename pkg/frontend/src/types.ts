// Wire formats of the labeling service. Field names match the JSON payloads
// exactly; the console never recomputes anything the server already sent.

export interface FeatureRow {
  name: string;
  decoded: number | string;
  normalized: number;
}

export interface QueryInstance {
  id: number;
  features: FeatureRow[];
  posterior: number | null;
  lof_score: number;
}

export interface QueryResponse {
  strategy: string;
  ids: number[];
  instances: QueryInstance[];
}

export interface CurvePoint {
  round: number;
  labels_used: number;
  precision: number;
  recall: number;
  degenerate?: boolean;
}

export interface StopRule {
  precision_min: number;
  recall_min: number;
  label_budget: number;
  max_rounds: number;
}

export interface Metrics {
  status: string;
  labels_used: number;
  round: number;
  pool_size: number;
  latest: CurvePoint | null;
  stop_rule: StopRule;
  strategy: string;
}

export interface LabelResponse {
  status: string;
  pending_remaining: number;
  disagreement: boolean;
  point: CurvePoint | null;
}

export type LabelChoice = "attack" | "normal";

export const choiceToLabel = (choice: LabelChoice): 0 | 1 =>
  choice === "attack" ? 1 : 0;
