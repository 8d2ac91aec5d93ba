"""Append-only annotation store.

Every mutation is one JSON event appended to a log file (fsync before the
caller sees an acknowledgment); in-memory state is a pure fold of that log,
so replaying the file reproduces the store exactly.

Assignment model: serving a task to an annotator places holds on its pairs
so that judgments plus active holds never exceed the per-pair rater quota.
An annotator's unfulfilled holds are released the next time they poll.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from ..corpus import Question, QuestionKind
from ..metrics import AgreementInput, fleiss_kappa
from ..ranker import Label, PairLabel

MAX_CANDIDATES = 10


class AnnotationError(ValueError):
    pass


class UnknownEntityError(AnnotationError):
    pass


class OverQuotaError(AnnotationError):
    pass


class ConflictError(AnnotationError):
    pass


@dataclass(frozen=True)
class CandidateRef:
    question: Question
    score: float


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    faq: Question
    candidates: tuple[CandidateRef, ...]
    required_raters: int


@dataclass(frozen=True)
class Judgment:
    task_id: str
    candidate_id: str
    annotator_id: str
    label: Label
    rewrite: str | None = None
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.label is Label.MATCH and self.rewrite is not None:
            raise AnnotationError("a match judgment cannot carry a rewrite")


@dataclass(frozen=True)
class RewriteRecord:
    faq_id: str
    source_user_q_id: str
    annotator_id: str
    text: str


@dataclass(frozen=True)
class ExportResult:
    labels: list[PairLabel]
    rewrites: list[RewriteRecord]
    complete_pairs: int
    skipped_incomplete: int


def _question_payload(q: Question) -> dict:
    payload = {"id": q.id, "text": q.text, "kind": q.kind.value}
    if q.source:
        payload["source"] = q.source
    if q.answer is not None:
        payload["answer"] = q.answer
    return payload


def _question_from_payload(payload: dict) -> Question:
    return Question(
        id=payload["id"],
        text=payload["text"],
        kind=QuestionKind(payload.get("kind", QuestionKind.USER_QUESTION.value)),
        source=payload.get("source", ""),
        answer=payload.get("answer"),
    )


@dataclass
class _Batch:
    batch_id: str
    r: int
    task_ids: list[str] = field(default_factory=list)


class AnnotationStore:
    """Single-writer annotation state over an append-only event log."""

    def __init__(self, log_path: str | Path, clock: Callable[[], float] = time.time):
        self._path = Path(log_path)
        self._clock = clock
        self._lock = threading.Lock()
        self._batches: dict[str, _Batch] = {}
        self._tasks: dict[str, AnnotationTask] = {}
        self._task_batch: dict[str, str] = {}
        # (task_id, candidate_id) -> annotator_id -> Judgment
        self._judgments: dict[tuple[str, str], dict[str, Judgment]] = {}
        # (task_id, candidate_id) -> set of annotators holding an assignment
        self._holds: dict[tuple[str, str], set[str]] = {}
        if self._path.exists():
            self._replay()

    # -- log plumbing ------------------------------------------------------

    def _replay(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise AnnotationError(f"log line {lineno}: invalid JSON") from exc
                self._apply(event)

    def _append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, ensure_ascii=False)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with open(self._path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "batch_created":
            batch = _Batch(batch_id=event["batch_id"], r=int(event["r"]))
            for task_payload in event["tasks"]:
                task = AnnotationTask(
                    task_id=task_payload["task_id"],
                    faq=_question_from_payload(task_payload["faq"]),
                    candidates=tuple(
                        CandidateRef(
                            question=_question_from_payload(c["question"]),
                            score=float(c["score"]),
                        )
                        for c in task_payload["candidates"]
                    ),
                    required_raters=batch.r,
                )
                self._tasks[task.task_id] = task
                self._task_batch[task.task_id] = batch.batch_id
                batch.task_ids.append(task.task_id)
                for candidate in task.candidates:
                    pair = (task.task_id, candidate.question.id)
                    self._judgments.setdefault(pair, {})
                    self._holds.setdefault(pair, set())
            self._batches[batch.batch_id] = batch
        elif kind == "task_assigned":
            annotator = event["annotator_id"]
            for candidate_id in event["candidate_ids"]:
                self._holds[(event["task_id"], candidate_id)].add(annotator)
        elif kind == "holds_released":
            annotator = event["annotator_id"]
            for pair in event["pairs"]:
                self._holds[(pair["task_id"], pair["candidate_id"])].discard(annotator)
        elif kind == "judgment_submitted":
            judgment = Judgment(
                task_id=event["task_id"],
                candidate_id=event["candidate_id"],
                annotator_id=event["annotator_id"],
                label=Label(event["label"]),
                rewrite=event.get("rewrite"),
                timestamp=float(event["ts"]),
            )
            pair = (judgment.task_id, judgment.candidate_id)
            self._judgments[pair][judgment.annotator_id] = judgment
            self._holds[pair].discard(judgment.annotator_id)
        else:
            raise AnnotationError(f"unknown event type {kind!r}")

    # -- operations --------------------------------------------------------

    def create_batch(
        self,
        pairs: Iterable[tuple[Question, list[tuple[Question, float]]]],
        r: int = 3,
    ) -> tuple[str, list[str]]:
        """Persist one task per (FAQ, candidate list); each pair needs ``r``
        judgments to complete. Candidates are presented score-descending."""
        pairs = list(pairs)
        if not pairs:
            raise AnnotationError("batch must contain at least one task")
        if r < 1:
            raise AnnotationError("required raters must be >= 1")
        with self._lock:
            batch_id = f"b{len(self._batches) + 1:04d}"
            task_payloads = []
            for i, (faq, candidates) in enumerate(pairs, start=1):
                if not 1 <= len(candidates) <= MAX_CANDIDATES:
                    raise AnnotationError(
                        f"task for FAQ {faq.id!r} must have 1..{MAX_CANDIDATES} candidates, "
                        f"got {len(candidates)}"
                    )
                ids = [q.id for q, _ in candidates]
                if len(set(ids)) != len(ids):
                    raise AnnotationError(f"task for FAQ {faq.id!r} has duplicate candidates")
                ordered = sorted(candidates, key=lambda c: (-c[1], c[0].id))
                task_payloads.append(
                    {
                        "task_id": f"{batch_id}-t{i:04d}",
                        "faq": _question_payload(faq),
                        "candidates": [
                            {"question": _question_payload(q), "score": score}
                            for q, score in ordered
                        ],
                    }
                )
            event = {
                "event": "batch_created",
                "batch_id": batch_id,
                "r": r,
                "tasks": task_payloads,
                "ts": self._clock(),
            }
            self._append(event)
            return batch_id, [t["task_id"] for t in task_payloads]

    def _pair_open_slots(self, pair: tuple[str, str], annotator_id: str) -> bool:
        judged = self._judgments[pair]
        if annotator_id in judged:
            return False
        task = self._tasks[pair[0]]
        held_by_others = self._holds[pair] - {annotator_id}
        return len(judged) + len(held_by_others) < task.required_raters

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        """Lowest-id task with at least one pair this annotator can judge.

        The returned view contains only the judgeable candidates; holds are
        recorded atomically so concurrent annotators never exceed the quota.
        Polling releases the annotator's previous unfulfilled holds.
        """
        if not annotator_id:
            raise AnnotationError("annotator id must be non-empty")
        with self._lock:
            released = [
                {"task_id": task_id, "candidate_id": candidate_id}
                for (task_id, candidate_id), holders in sorted(self._holds.items())
                if annotator_id in holders
            ]
            if released:
                self._append(
                    {
                        "event": "holds_released",
                        "annotator_id": annotator_id,
                        "pairs": released,
                        "ts": self._clock(),
                    }
                )
            for task_id in sorted(self._tasks):
                task = self._tasks[task_id]
                eligible = [
                    c
                    for c in task.candidates
                    if self._pair_open_slots((task_id, c.question.id), annotator_id)
                ]
                if not eligible:
                    continue
                self._append(
                    {
                        "event": "task_assigned",
                        "batch_id": self._task_batch[task_id],
                        "task_id": task_id,
                        "annotator_id": annotator_id,
                        "candidate_ids": [c.question.id for c in eligible],
                        "ts": self._clock(),
                    }
                )
                return AnnotationTask(
                    task_id=task_id,
                    faq=task.faq,
                    candidates=tuple(eligible),
                    required_raters=task.required_raters,
                )
            return None

    def submit_judgment(
        self,
        task_id: str,
        candidate_id: str,
        annotator_id: str,
        label: Label,
        rewrite: str | None = None,
    ) -> dict:
        """Append a judgment; duplicates are acknowledged idempotently.

        A resubmission with different content, an unknown task/candidate, or
        a pair already at quota is rejected.
        """
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise UnknownEntityError(f"unknown task {task_id!r}")
            pair = (task_id, candidate_id)
            if pair not in self._judgments:
                raise UnknownEntityError(
                    f"task {task_id!r} has no candidate {candidate_id!r}"
                )
            judgment = Judgment(
                task_id=task_id,
                candidate_id=candidate_id,
                annotator_id=annotator_id,
                label=label,
                rewrite=rewrite,
                timestamp=self._clock(),
            )
            existing = self._judgments[pair].get(annotator_id)
            if existing is not None:
                if existing.label is label and existing.rewrite == rewrite:
                    return {
                        "status": "duplicate",
                        "pair_complete": len(self._judgments[pair]) >= task.required_raters,
                    }
                raise ConflictError(
                    f"annotator {annotator_id!r} already judged {pair} differently"
                )
            held_by_others = self._holds[pair] - {annotator_id}
            if len(self._judgments[pair]) + len(held_by_others) >= task.required_raters:
                raise OverQuotaError(
                    f"pair {pair} already has {task.required_raters} judgments or holds"
                )
            event = {
                "event": "judgment_submitted",
                "task_id": task_id,
                "candidate_id": candidate_id,
                "annotator_id": annotator_id,
                "label": label.value,
                "ts": judgment.timestamp,
            }
            if rewrite is not None:
                event["rewrite"] = rewrite
            self._append(event)
            return {
                "status": "accepted",
                "pair_complete": len(self._judgments[pair]) >= task.required_raters,
            }

    # -- read-side ---------------------------------------------------------

    def _batch(self, batch_id: str) -> _Batch:
        batch = self._batches.get(batch_id)
        if batch is None:
            raise UnknownEntityError(f"unknown batch {batch_id!r}")
        return batch

    def _batch_pairs(self, batch: _Batch) -> list[tuple[str, str]]:
        pairs = []
        for task_id in batch.task_ids:
            for candidate in self._tasks[task_id].candidates:
                pairs.append((task_id, candidate.question.id))
        return pairs

    def progress(self, batch_id: str) -> dict:
        with self._lock:
            batch = self._batch(batch_id)
            pairs = self._batch_pairs(batch)
            complete = sum(1 for p in pairs if len(self._judgments[p]) >= batch.r)
            return {"complete_pairs": complete, "total_pairs": len(pairs)}

    def export_labels(self, batch_id: str, policy: str = "majority") -> ExportResult:
        """Consolidate complete pairs into labels plus a rewrites list.

        ``majority``: match when more than half the judgments say so;
        ``unanimous``: match only when all do. Incomplete pairs are skipped
        and counted.
        """
        if policy not in ("majority", "unanimous"):
            raise AnnotationError(f"unknown export policy {policy!r}")
        with self._lock:
            batch = self._batch(batch_id)
            labels: list[PairLabel] = []
            rewrites: list[RewriteRecord] = []
            skipped = 0
            for task_id, candidate_id in self._batch_pairs(batch):
                judged = self._judgments[(task_id, candidate_id)]
                if len(judged) < batch.r:
                    skipped += 1
                    continue
                votes = sum(1 for j in judged.values() if j.label is Label.MATCH)
                if policy == "majority":
                    is_match = votes * 2 > batch.r
                else:
                    is_match = votes == batch.r
                faq_id = self._tasks[task_id].faq.id
                labels.append(
                    PairLabel(
                        faq_id=faq_id,
                        user_q_id=candidate_id,
                        label=Label.MATCH if is_match else Label.NO_MATCH,
                    )
                )
                for annotator_id in sorted(judged):
                    judgment = judged[annotator_id]
                    if judgment.label is Label.NO_MATCH and judgment.rewrite:
                        rewrites.append(
                            RewriteRecord(
                                faq_id=faq_id,
                                source_user_q_id=candidate_id,
                                annotator_id=annotator_id,
                                text=judgment.rewrite,
                            )
                        )
            complete = len(labels)
            return ExportResult(
                labels=labels,
                rewrites=rewrites,
                complete_pairs=complete,
                skipped_incomplete=skipped,
            )

    def compute_agreement(self, batch_id: str) -> tuple[float, dict[str, int]]:
        """Fleiss's kappa over the batch's complete pairs with category totals."""
        with self._lock:
            batch = self._batch(batch_id)
            if batch.r < 2:
                raise AnnotationError("agreement undefined for a single-rater batch")
            items: list[dict[str, int]] = []
            ids: list[str] = []
            totals = {Label.MATCH.value: 0, Label.NO_MATCH.value: 0}
            for task_id, candidate_id in self._batch_pairs(batch):
                judged = self._judgments[(task_id, candidate_id)]
                if len(judged) < batch.r:
                    continue
                match_votes = sum(1 for j in judged.values() if j.label is Label.MATCH)
                items.append(
                    {
                        Label.MATCH.value: match_votes,
                        Label.NO_MATCH.value: batch.r - match_votes,
                    }
                )
                ids.append(f"{task_id}/{candidate_id}")
                totals[Label.MATCH.value] += match_votes
                totals[Label.NO_MATCH.value] += batch.r - match_votes
            if not items:
                raise AnnotationError("agreement undefined: no complete pairs")
            agreement = AgreementInput(
                items=tuple(items), rater_count=batch.r, item_ids=tuple(ids)
            )
            return fleiss_kappa(agreement), totals

    def state_snapshot(self) -> dict:
        """Comparable view of the derived state (for replay verification)."""
        with self._lock:
            return {
                "batches": {b.batch_id: {"r": b.r, "tasks": list(b.task_ids)} for b in self._batches.values()},
                "judgments": {
                    f"{t}/{c}": {
                        a: [j.label.value, j.rewrite] for a, j in sorted(judged.items())
                    }
                    for (t, c), judged in sorted(self._judgments.items())
                },
                "holds": {
                    f"{t}/{c}": sorted(holders)
                    for (t, c), holders in sorted(self._holds.items())
                },
            }
