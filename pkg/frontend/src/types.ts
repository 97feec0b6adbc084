/** Wire types for the elicitation session service. */

export type Assignment = Record<string, number>;

export interface ProblemInfo {
  id: string;
  kind: string;
  variables: number;
  features: number;
  parts: string[];
  metadata: Record<string, unknown>;
}

export interface Gauge {
  label: string;
  value: number;
  unit: string;
}

export interface TurnContext {
  neighbors: Record<string, Assignment>;
  global_summaries: Record<string, number>;
  gauges: Gauge[];
}

export interface Recommendation {
  phase: string;
  t: number;
  part?: number;
  part_name?: string;
  assignment?: Assignment;
  context?: TurnContext;
  final?: Assignment;
}

export interface TurnResult {
  accepted: boolean;
  t: number;
  satisfied: boolean;
  update_set: "I" | "J";
  converged: boolean;
  phase: string;
  clean_streak: number;
}

export interface TraceRow {
  t: number;
  part: string | null;
  satisfied: boolean;
  update_set: string;
  est_gain_I: number;
  est_gain_J: number;
}

export interface SessionState {
  session_id: string;
  problem: string;
  phase: string;
  t: number;
  weights: number[];
  x: Assignment;
  clean_streak: number;
  trace: TraceRow[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: string[];
}
