import { AnnotationApi } from "./api.js";
import { TaskSession } from "./state.js";
import { LocalDraftStore } from "./storage.js";
import { submitDecisions } from "./submit.js";
import { bindKeyboard, TaskViewRenderer } from "./view.js";

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("annotator");
  if (fromQuery) {
    window.localStorage.setItem("faqpipe-annotator", fromQuery);
    return fromQuery;
  }
  let stored = window.localStorage.getItem("faqpipe-annotator");
  if (!stored) {
    stored = window.prompt("Annotator id:")?.trim() || `anon-${Date.now()}`;
    window.localStorage.setItem("faqpipe-annotator", stored);
  }
  return stored;
}

async function run(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const api = new AnnotationApi("");
  const drafts = new LocalDraftStore();
  const annotator = annotatorId();

  let session: TaskSession | null = null;
  let renderer: TaskViewRenderer | null = null;

  const persist = () => {
    if (session) drafts.save(annotator, session.snapshot());
  };

  const callbacks = {
    onDecide(candidateId: string, kind: "match" | "no-match") {
      session?.decide(candidateId, kind);
      persist();
      refresh();
    },
    onRewrite(candidateId: string, text: string) {
      session?.setRewrite(candidateId, text);
      persist();
    },
    onNoRewrite(candidateId: string, flag: boolean) {
      session?.setNoRewrite(candidateId, flag);
      persist();
      refresh();
    },
    async onSubmit() {
      if (!session || !renderer) return;
      if (!session.canSubmit()) {
        renderer.render(session, new Set(session.blockers()));
        return;
      }
      const outcome = await submitDecisions(api, session);
      persist();
      if (outcome.ok && session.allAcknowledged()) {
        drafts.clear(annotator);
        await advance();
      } else {
        renderer.render(session, new Set(outcome.failed.map((f) => f.candidateId)));
        renderer.renderError(
          `${outcome.failed.length} judgment(s) not accepted yet; retry resends only those.`,
        );
      }
    },
    async onRetry() {
      renderer?.clearError();
      if (session) {
        await callbacks.onSubmit();
      } else {
        await advance();
      }
    },
  };

  const refresh = () => {
    if (session && renderer) renderer.render(session);
  };

  async function advance(): Promise<void> {
    renderer = new TaskViewRenderer(root as HTMLElement, callbacks);
    try {
      const task = await api.nextTask(annotator);
      if (!task) {
        session = null;
        renderer.renderCompletion();
        return;
      }
      session = new TaskSession(task, annotator);
      const draft = drafts.load(annotator);
      if (draft) session.restore(draft);
      renderer.render(session);
    } catch (error) {
      // Keep whatever is on screen; the draft is already persisted.
      renderer.renderError(error instanceof Error ? error.message : String(error));
    }
  }

  bindKeyboard(root, callbacks);
  await advance();
}

run().catch((error) => {
  document.body.textContent = `failed to start: ${String(error)}`;
});
