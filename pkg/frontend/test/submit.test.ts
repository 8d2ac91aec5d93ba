import { describe, expect, it } from "vitest";

import { AnnotationApi } from "../src/api.js";
import { TaskSession } from "../src/state.js";
import { submitDecisions } from "../src/submit.js";
import { FakeService, json, threeCandidateTask } from "./helpers.js";

function completedSession(): TaskSession {
  const session = new TaskSession(threeCandidateTask(), "alice");
  session.decide("uq-1", "match");
  session.decide("uq-2", "match");
  session.decide("uq-3", "no-match");
  session.setRewrite("uq-3", "what is the minimum age ?");
  return session;
}

describe("submitDecisions", () => {
  it("acceptance flow: 3 decisions produce exactly 3 judgment requests", async () => {
    const service = new FakeService([threeCandidateTask()]);
    const api = new AnnotationApi("", service.fetch);
    const session = completedSession();

    const outcome = await submitDecisions(api, session);

    expect(outcome.ok).toBe(true);
    expect(service.judgments).toHaveLength(3);
    const byCandidate = Object.fromEntries(
      service.judgments.map((j) => [j.candidate_id, j]),
    );
    expect(byCandidate["uq-1"]).toMatchObject({ label: "match" });
    expect(byCandidate["uq-2"]).toMatchObject({ label: "match" });
    expect(byCandidate["uq-3"]).toMatchObject({
      label: "no_match",
      rewrite: "what is the minimum age ?",
    });
    expect(byCandidate["uq-1"]!.rewrite).toBeUndefined();
    expect(session.allAcknowledged()).toBe(true);
  });

  it("mid-submit failure: retry resends only unacknowledged judgments", async () => {
    const service = new FakeService([threeCandidateTask()]);
    service.failFor.add("uq-2");
    const api = new AnnotationApi("", service.fetch);
    const session = completedSession();

    const first = await submitDecisions(api, session);
    expect(first.ok).toBe(false);
    expect(first.failed.map((f) => f.candidateId)).toEqual(["uq-2"]);
    expect(service.judgments).toHaveLength(2);

    const second = await submitDecisions(api, session);
    expect(second.ok).toBe(true);
    expect(service.judgments).toHaveLength(3);
    // uq-1 and uq-3 were NOT resent.
    const counts = service.judgments.reduce<Record<string, number>>((acc, j) => {
      const key = String(j.candidate_id);
      acc[key] = (acc[key] ?? 0) + 1;
      return acc;
    }, {});
    expect(counts).toEqual({ "uq-1": 1, "uq-2": 1, "uq-3": 1 });
  });

  it("treats a 409 as already-recorded rather than retrying forever", async () => {
    let calls = 0;
    const api = new AnnotationApi("", async () => {
      calls += 1;
      return json({ detail: "pair already has 3 judgments" }, 409);
    });
    const session = completedSession();
    const outcome = await submitDecisions(api, session);
    expect(outcome.ok).toBe(true);
    expect(calls).toBe(3);
    expect(session.allAcknowledged()).toBe(true);
  });

  it("refuses to build judgments for an incomplete view", async () => {
    const service = new FakeService([threeCandidateTask()]);
    const api = new AnnotationApi("", service.fetch);
    const session = new TaskSession(threeCandidateTask(), "alice");
    session.decide("uq-1", "match");
    await expect(submitDecisions(api, session)).rejects.toThrow(/undecided/);
    expect(service.judgments).toHaveLength(0);
  });
});
