import type { JudgmentAck, JudgmentRequest, TaskView } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin client over the annotation service; fetch is injectable for tests. */
export class AnnotationApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async nextTask(annotator: string): Promise<TaskView | null> {
    const url = `${this.baseUrl}/tasks/next?annotator=${encodeURIComponent(annotator)}`;
    const response = await this.request(url, { method: "GET" });
    const body = (await response.json()) as { task: TaskView | null };
    return body.task;
  }

  async submitJudgment(judgment: JudgmentRequest): Promise<JudgmentAck> {
    const response = await this.request(`${this.baseUrl}/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(judgment),
    });
    return (await response.json()) as JudgmentAck;
  }

  private async request(url: string, init: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(url, init);
    } catch (cause) {
      throw new ApiError(`network failure: ${String(cause)}`);
    }
    if (!response.ok) {
      let detail = "";
      try {
        const body = (await response.json()) as { detail?: string };
        detail = body.detail ?? "";
      } catch {
        // non-JSON error body; keep the status only
      }
      throw new ApiError(detail || `HTTP ${response.status}`, response.status);
    }
    return response;
  }
}
