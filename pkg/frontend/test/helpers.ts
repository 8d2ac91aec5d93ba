import type { TaskView } from "../src/types.js";

export function threeCandidateTask(): TaskView {
  return {
    task_id: "b0001-t0001",
    faq: { id: "faq-1", text: "what is the minimum age to work at ORG_NAME ?" },
    candidates: [
      { id: "uq-1", text: "minimum age to work", score: 9.1, rank: 1 },
      { id: "uq-2", text: "what minimum age should i have to apply ?", score: 7.4, rank: 2 },
      { id: "uq-3", text: "anyone know about parking ?", score: 1.2, rank: 3 },
    ],
    required_raters: 3,
  };
}

type JudgmentBody = Record<string, unknown>;

/** Fetch-shaped fake of the annotation service; records every judgment. */
export class FakeService {
  judgments: JudgmentBody[] = [];
  tasks: (TaskView | null)[];
  failFor = new Set<string>(); // candidate ids whose POST should 500 once

  constructor(tasks: (TaskView | null)[]) {
    this.tasks = [...tasks];
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    if (url.includes("/tasks/next")) {
      const task = this.tasks.length > 0 ? this.tasks.shift()! : null;
      return json({ task });
    }
    if (url.endsWith("/judgments")) {
      const body = JSON.parse(String(init?.body)) as JudgmentBody;
      const candidate = String(body.candidate_id);
      if (this.failFor.has(candidate)) {
        this.failFor.delete(candidate);
        return json({ detail: "injected failure" }, 500);
      }
      this.judgments.push(body);
      return json({ status: "accepted", pair_complete: false });
    }
    return json({ detail: "no route" }, 404);
  };
}

export function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
