"""HTTP front for the annotation store.

Routes: POST /batches, GET /tasks/next, POST /judgments,
GET /batches/{id}/export, GET /batches/{id}/agreement,
GET /batches/{id}/progress, plus optional static serving of the UI bundle.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..corpus import Question, QuestionKind
from ..ranker import Label
from .store import (
    AnnotationError,
    AnnotationStore,
    AnnotationTask,
    ConflictError,
    OverQuotaError,
    UnknownEntityError,
)


class QuestionBody(BaseModel):
    id: str
    text: str
    source: str = ""
    answer: str | None = None


class CandidateBody(BaseModel):
    question: QuestionBody
    score: float


class TaskBody(BaseModel):
    faq: QuestionBody
    candidates: list[CandidateBody]


class BatchBody(BaseModel):
    pairs: list[TaskBody]
    r: int = Field(default=3, ge=1)


class JudgmentBody(BaseModel):
    task_id: str
    candidate_id: str
    annotator: str
    label: str
    rewrite: str | None = None


def _to_question(body: QuestionBody, kind: QuestionKind) -> Question:
    return Question(
        id=body.id, text=body.text, kind=kind, source=body.source, answer=body.answer
    )


def _task_view(task: AnnotationTask) -> dict:
    return {
        "task_id": task.task_id,
        "faq": {"id": task.faq.id, "text": task.faq.text},
        "candidates": [
            {
                "id": c.question.id,
                "text": c.question.text,
                "score": c.score,
                "rank": rank,
            }
            for rank, c in enumerate(task.candidates, start=1)
        ],
        "required_raters": task.required_raters,
    }


def _http_error(exc: AnnotationError) -> HTTPException:
    if isinstance(exc, UnknownEntityError):
        return HTTPException(status_code=404, detail=str(exc))
    if isinstance(exc, (ConflictError, OverQuotaError)):
        return HTTPException(status_code=409, detail=str(exc))
    return HTTPException(status_code=400, detail=str(exc))


def create_app(store: AnnotationStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="faqpipe annotation service")

    @app.post("/batches")
    def create_batch(body: BatchBody) -> dict:
        try:
            pairs = [
                (
                    _to_question(task.faq, QuestionKind.ORG_FAQ),
                    [
                        (_to_question(c.question, QuestionKind.USER_QUESTION), c.score)
                        for c in task.candidates
                    ],
                )
                for task in body.pairs
            ]
            batch_id, task_ids = store.create_batch(pairs, r=body.r)
        except AnnotationError as exc:
            raise _http_error(exc) from exc
        return {"batch_id": batch_id, "task_ids": task_ids}

    @app.get("/tasks/next")
    def next_task(annotator: str = Query(min_length=1)) -> dict:
        try:
            task = store.next_task(annotator)
        except AnnotationError as exc:
            raise _http_error(exc) from exc
        return {"task": _task_view(task) if task else None}

    @app.post("/judgments")
    def submit_judgment(body: JudgmentBody) -> dict:
        try:
            label = Label(body.label)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=f"unknown label {body.label!r}") from exc
        try:
            return store.submit_judgment(
                task_id=body.task_id,
                candidate_id=body.candidate_id,
                annotator_id=body.annotator,
                label=label,
                rewrite=body.rewrite,
            )
        except AnnotationError as exc:
            raise _http_error(exc) from exc

    @app.get("/batches/{batch_id}/export")
    def export_labels(batch_id: str, policy: str = "majority") -> dict:
        try:
            result = store.export_labels(batch_id, policy=policy)
        except AnnotationError as exc:
            raise _http_error(exc) from exc
        return {
            "labels": [
                {"faq_id": l.faq_id, "user_q_id": l.user_q_id, "label": l.label.value}
                for l in result.labels
            ],
            "rewrites": [
                {
                    "faq_id": r.faq_id,
                    "source_user_q_id": r.source_user_q_id,
                    "annotator_id": r.annotator_id,
                    "text": r.text,
                }
                for r in result.rewrites
            ],
            "complete_pairs": result.complete_pairs,
            "skipped_incomplete": result.skipped_incomplete,
        }

    @app.get("/batches/{batch_id}/agreement")
    def agreement(batch_id: str) -> dict:
        try:
            kappa, counts = store.compute_agreement(batch_id)
        except UnknownEntityError as exc:
            raise _http_error(exc) from exc
        except AnnotationError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"kappa": kappa, "counts": counts}

    @app.get("/batches/{batch_id}/progress")
    def progress(batch_id: str) -> dict:
        try:
            return store.progress(batch_id)
        except AnnotationError as exc:
            raise _http_error(exc) from exc

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
