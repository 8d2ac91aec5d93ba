"""Annotation service: task assignment, judgment capture, export, agreement."""

from .store import (
    AnnotationError,
    AnnotationStore,
    AnnotationTask,
    CandidateRef,
    ConflictError,
    ExportResult,
    Judgment,
    OverQuotaError,
    RewriteRecord,
    UnknownEntityError,
)

__all__ = [
    "AnnotationError",
    "AnnotationStore",
    "AnnotationTask",
    "CandidateRef",
    "ConflictError",
    "ExportResult",
    "Judgment",
    "OverQuotaError",
    "RewriteRecord",
    "UnknownEntityError",
]
