// Wire types mirror the annotation service's JSON API.

export interface CandidateView {
  id: string;
  text: string;
  score: number;
  rank: number;
}

export interface TaskView {
  task_id: string;
  faq: { id: string; text: string };
  candidates: CandidateView[];
  required_raters: number;
}

export type JudgmentLabel = "match" | "no_match";

export interface JudgmentRequest {
  task_id: string;
  candidate_id: string;
  annotator: string;
  label: JudgmentLabel;
  rewrite?: string;
}

export interface JudgmentAck {
  status: "accepted" | "duplicate";
  pair_complete: boolean;
}

// Per-candidate local state. A candidate starts undecided; "no-match"
// carries a rewrite draft pre-filled with the original text, or an explicit
// no-rewrite flag.
export type Decision =
  | { kind: "undecided" }
  | { kind: "match" }
  | { kind: "no-match"; rewrite: string; noRewrite: boolean };
