import type { AnnotationApi } from "./api.js";
import { ApiError } from "./api.js";
import type { TaskSession } from "./state.js";

export interface SubmitOutcome {
  ok: boolean;
  failed: { candidateId: string; message: string }[];
}

/**
 * Send one judgment per not-yet-acknowledged candidate.
 *
 * The service treats identical resubmissions as idempotent duplicates, so a
 * retry after a mid-submit failure resends only the unacknowledged ones. A
 * 409 (the pair filled up or conflicts) is acknowledged rather than retried
 * forever; the server already holds a judgment for it.
 */
export async function submitDecisions(
  api: AnnotationApi,
  session: TaskSession,
): Promise<SubmitOutcome> {
  const failed: SubmitOutcome["failed"] = [];
  for (const judgment of session.pendingJudgments()) {
    try {
      await api.submitJudgment(judgment);
      session.markAcknowledged(judgment.candidate_id);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        session.markAcknowledged(judgment.candidate_id);
        continue;
      }
      failed.push({
        candidateId: judgment.candidate_id,
        message: error instanceof Error ? error.message : String(error),
      });
    }
  }
  return { ok: failed.length === 0, failed };
}
