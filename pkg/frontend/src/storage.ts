import type { SessionSnapshot } from "./state.js";

export interface DraftStore {
  load(annotator: string): SessionSnapshot | null;
  save(annotator: string, snapshot: SessionSnapshot): void;
  clear(annotator: string): void;
}

const keyFor = (annotator: string) => `faqpipe-draft:${annotator}`;

/** Drafts survive a page refresh until every judgment is acknowledged. */
export class LocalDraftStore implements DraftStore {
  constructor(private readonly storage: Storage = window.localStorage) {}

  load(annotator: string): SessionSnapshot | null {
    const raw = this.storage.getItem(keyFor(annotator));
    if (!raw) return null;
    try {
      return JSON.parse(raw) as SessionSnapshot;
    } catch {
      return null;
    }
  }

  save(annotator: string, snapshot: SessionSnapshot): void {
    this.storage.setItem(keyFor(annotator), JSON.stringify(snapshot));
  }

  clear(annotator: string): void {
    this.storage.removeItem(keyFor(annotator));
  }
}

export class MemoryDraftStore implements DraftStore {
  private drafts = new Map<string, SessionSnapshot>();

  load(annotator: string): SessionSnapshot | null {
    return this.drafts.get(annotator) ?? null;
  }

  save(annotator: string, snapshot: SessionSnapshot): void {
    this.drafts.set(annotator, snapshot);
  }

  clear(annotator: string): void {
    this.drafts.delete(annotator);
  }
}
