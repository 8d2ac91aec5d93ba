import type { TaskSession } from "./state.js";
import type { CandidateView } from "./types.js";

export interface ViewCallbacks {
  onDecide(candidateId: string, kind: "match" | "no-match"): void;
  onRewrite(candidateId: string, text: string): void;
  onNoRewrite(candidateId: string, flag: boolean): void;
  onSubmit(): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text; // verbatim, never unmasked
  return node;
}

export class TaskViewRenderer {
  private banner: HTMLElement | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly callbacks: ViewCallbacks,
  ) {}

  renderCompletion(): void {
    this.root.replaceChildren(
      el("div", "done", "No work remaining. Thank you!"),
    );
  }

  renderError(message: string): void {
    // The error banner sits above the task; the in-progress rows stay put.
    this.clearError();
    const banner = el("div", "banner error");
    banner.append(el("span", undefined, message));
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", () => this.callbacks.onRetry());
    banner.append(retry);
    this.root.prepend(banner);
    this.banner = banner;
  }

  clearError(): void {
    this.banner?.remove();
    this.banner = null;
  }

  render(session: TaskSession, highlight: Set<string> = new Set()): void {
    this.root.replaceChildren();
    const faq = el("section", "faq");
    faq.append(el("h1", "faq-text", session.task.faq.text));
    faq.append(
      el("p", "hint", "Does each user question below ask the same thing as this FAQ?"),
    );
    this.root.append(faq);

    const list = el("ol", "candidates");
    for (const candidate of session.task.candidates) {
      list.append(this.renderRow(session, candidate, highlight.has(candidate.id)));
    }
    this.root.append(list);

    const submit = el("button", "submit", "Submit all decisions");
    submit.disabled = !session.canSubmit();
    submit.addEventListener("click", () => this.callbacks.onSubmit());
    this.root.append(submit);
  }

  private renderRow(
    session: TaskSession,
    candidate: CandidateView,
    highlighted: boolean,
  ): HTMLElement {
    const decision = session.decision(candidate.id);
    const row = el("li", "candidate" + (highlighted ? " blocked" : ""));
    row.dataset.candidateId = candidate.id;
    row.tabIndex = 0;

    const text = el("div", "candidate-text", candidate.text);
    row.append(text);

    const controls = el("div", "controls");
    const match = el("button", "match" + (decision.kind === "match" ? " active" : ""), "Match");
    match.addEventListener("click", () => this.callbacks.onDecide(candidate.id, "match"));
    const noMatch = el(
      "button",
      "no-match" + (decision.kind === "no-match" ? " active" : ""),
      "No match",
    );
    noMatch.addEventListener("click", () => this.callbacks.onDecide(candidate.id, "no-match"));
    controls.append(match, noMatch);
    row.append(controls);

    if (decision.kind === "no-match") {
      const editor = el("div", "rewrite");
      editor.append(
        el("label", undefined, "Rewrite with minimal changes so it matches the FAQ:"),
      );
      const input = el("textarea", "rewrite-input");
      input.value = decision.rewrite;
      input.addEventListener("input", () =>
        this.callbacks.onRewrite(candidate.id, input.value),
      );
      editor.append(input);

      const flagLabel = el("label", "no-rewrite");
      const flag = el("input");
      flag.type = "checkbox";
      flag.checked = decision.noRewrite;
      flag.addEventListener("change", () =>
        this.callbacks.onNoRewrite(candidate.id, flag.checked),
      );
      flagLabel.append(flag, document.createTextNode(" no sensible rewrite exists"));
      editor.append(flagLabel);
      row.append(editor);
    }
    return row;
  }
}

/** m = match, n = no-match on the focused row; Enter submits when enabled. */
export function bindKeyboard(root: HTMLElement, callbacks: ViewCallbacks): void {
  root.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLTextAreaElement) return;
    const row = (event.target as HTMLElement).closest?.("[data-candidate-id]");
    const candidateId = row instanceof HTMLElement ? row.dataset.candidateId : undefined;
    if (event.key === "m" && candidateId) {
      callbacks.onDecide(candidateId, "match");
    } else if (event.key === "n" && candidateId) {
      callbacks.onDecide(candidateId, "no-match");
    } else if (event.key === "Enter" && !candidateId) {
      callbacks.onSubmit();
    }
  });
}
