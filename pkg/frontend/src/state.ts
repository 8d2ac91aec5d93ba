import type { Decision, JudgmentRequest, TaskView } from "./types.js";

export interface SessionSnapshot {
  taskId: string;
  decisions: Record<string, Decision>;
  acknowledged: string[];
}

/**
 * Local decision state for one task.
 *
 * Submit is allowed only when every candidate is decided and every no-match
 * either has a non-empty rewrite or an explicit no-rewrite flag. Labels are
 * only ever created by an explicit decide() call.
 */
export class TaskSession {
  private readonly decisions = new Map<string, Decision>();
  private readonly acknowledged = new Set<string>();

  constructor(
    readonly task: TaskView,
    readonly annotator: string,
  ) {
    for (const candidate of task.candidates) {
      this.decisions.set(candidate.id, { kind: "undecided" });
    }
  }

  decision(candidateId: string): Decision {
    const decision = this.decisions.get(candidateId);
    if (!decision) throw new Error(`unknown candidate ${candidateId}`);
    return decision;
  }

  decide(candidateId: string, kind: "match" | "no-match"): void {
    const current = this.decision(candidateId);
    if (kind === "match") {
      this.decisions.set(candidateId, { kind: "match" });
      return;
    }
    if (current.kind === "no-match") return; // keep the rewrite draft
    // Pre-fill the rewrite with the original text so the annotator edits
    // minimally instead of writing from scratch.
    const original = this.task.candidates.find((c) => c.id === candidateId);
    this.decisions.set(candidateId, {
      kind: "no-match",
      rewrite: original ? original.text : "",
      noRewrite: false,
    });
  }

  setRewrite(candidateId: string, text: string): void {
    const current = this.decision(candidateId);
    if (current.kind !== "no-match") {
      throw new Error("rewrite only applies to a no-match decision");
    }
    this.decisions.set(candidateId, { ...current, rewrite: text, noRewrite: false });
  }

  setNoRewrite(candidateId: string, flag: boolean): void {
    const current = this.decision(candidateId);
    if (current.kind !== "no-match") {
      throw new Error("no-rewrite flag only applies to a no-match decision");
    }
    this.decisions.set(candidateId, { ...current, noRewrite: flag });
  }

  /** Candidate ids blocking submission, in presentation order. */
  blockers(): string[] {
    const blocked: string[] = [];
    for (const candidate of this.task.candidates) {
      const decision = this.decision(candidate.id);
      if (decision.kind === "undecided") {
        blocked.push(candidate.id);
      } else if (
        decision.kind === "no-match" &&
        decision.rewrite.trim() === "" &&
        !decision.noRewrite
      ) {
        blocked.push(candidate.id);
      }
    }
    return blocked;
  }

  canSubmit(): boolean {
    return this.blockers().length === 0;
  }

  /** One judgment per candidate; only callable once the view is complete. */
  judgments(): JudgmentRequest[] {
    if (!this.canSubmit()) {
      throw new Error("cannot build judgments while candidates are undecided");
    }
    return this.task.candidates.map((candidate) => {
      const decision = this.decision(candidate.id);
      const request: JudgmentRequest = {
        task_id: this.task.task_id,
        candidate_id: candidate.id,
        annotator: this.annotator,
        label: decision.kind === "match" ? "match" : "no_match",
      };
      if (decision.kind === "no-match" && !decision.noRewrite) {
        const rewrite = decision.rewrite.trim();
        if (rewrite !== "") request.rewrite = rewrite;
      }
      return request;
    });
  }

  markAcknowledged(candidateId: string): void {
    this.acknowledged.add(candidateId);
  }

  isAcknowledged(candidateId: string): boolean {
    return this.acknowledged.has(candidateId);
  }

  pendingJudgments(): JudgmentRequest[] {
    return this.judgments().filter((j) => !this.acknowledged.has(j.candidate_id));
  }

  allAcknowledged(): boolean {
    return this.task.candidates.every((c) => this.acknowledged.has(c.id));
  }

  snapshot(): SessionSnapshot {
    return {
      taskId: this.task.task_id,
      decisions: Object.fromEntries(this.decisions),
      acknowledged: [...this.acknowledged],
    };
  }

  /** Restore a draft saved for the same task; other drafts are ignored. */
  restore(snapshot: SessionSnapshot): boolean {
    if (snapshot.taskId !== this.task.task_id) return false;
    for (const [candidateId, decision] of Object.entries(snapshot.decisions)) {
      if (this.decisions.has(candidateId)) {
        this.decisions.set(candidateId, decision);
      }
    }
    for (const candidateId of snapshot.acknowledged) {
      if (this.decisions.has(candidateId)) {
        this.acknowledged.add(candidateId);
      }
    }
    return true;
  }
}
