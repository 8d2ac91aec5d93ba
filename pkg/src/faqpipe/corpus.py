"""Question corpora: ingestion, tokenization, and organization-name masking."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .jsonl import read_records, write_records

# Punctuation detached as standalone tokens; an apostrophe between two word
# characters stays attached ("i'd" is one token).
PUNCTUATION = frozenset(".,?!'\":;()")

MASK_TOKEN = "ORG_NAME"


class QuestionKind(str, Enum):
    USER_QUESTION = "user_question"
    ORG_FAQ = "org_faq"


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split into tokens.

    Splits on whitespace, detaches punctuation characters as standalone
    tokens, keeps in-word apostrophes attached, and drops empty tokens.
    """
    lowered = text.lower()
    tokens: list[str] = []
    current: list[str] = []
    for i, ch in enumerate(lowered):
        if ch.isspace():
            if current:
                tokens.append("".join(current))
                current = []
            continue
        if ch in PUNCTUATION:
            nxt = lowered[i + 1] if i + 1 < len(lowered) else ""
            in_word = (
                ch == "'"
                and bool(current)
                and bool(nxt)
                and not nxt.isspace()
                and nxt not in PUNCTUATION
            )
            if in_word:
                current.append(ch)
            else:
                if current:
                    tokens.append("".join(current))
                    current = []
                tokens.append(ch)
            continue
        current.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens


@dataclass(frozen=True)
class Question:
    """One text unit: a user question or an organizational FAQ.

    ``tokens`` is always derived from ``text`` at construction; it is never
    supplied by callers. ``answer`` is carried through verbatim and excluded
    from every metric and pipeline stage.
    """

    id: str
    text: str
    kind: QuestionKind
    source: str = ""
    answer: str | None = None
    tokens: tuple[str, ...] = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("question id must be non-empty")
        object.__setattr__(self, "tokens", tuple(tokenize(self.text)))


@dataclass
class Corpus:
    questions: list[Question]
    masks_applied: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for q in self.questions:
            if q.id in seen:
                raise ValueError(f"duplicate question id {q.id!r}")
            seen.add(q.id)

    def __len__(self) -> int:
        return len(self.questions)

    def by_id(self) -> dict[str, Question]:
        return {q.id: q for q in self.questions}


def _alias_pattern(alias: str) -> re.Pattern[str]:
    # Lookarounds rather than \b so aliases with non-word edges still anchor
    # to whole words.
    return re.compile(rf"(?<!\w){re.escape(alias)}(?!\w)", re.IGNORECASE)


def mask_org_names(corpus: Corpus, aliases: list[str]) -> Corpus:
    """Replace whole-word, case-insensitive alias occurrences with ORG_NAME.

    Applies to question text and answers; tokens are re-derived. Aliases are
    recorded in ``masks_applied`` (deduplicated, so masking is idempotent).
    """
    if not aliases:
        raise ValueError("alias list must be non-empty")
    for alias in aliases:
        if not alias or not alias.strip():
            raise ValueError("aliases must be non-empty strings")
        if alias.upper() == MASK_TOKEN:
            raise ValueError(f"alias {alias!r} would self-replace")

    patterns = [_alias_pattern(a) for a in aliases]

    def mask_text(text: str) -> str:
        for pattern in patterns:
            text = pattern.sub(MASK_TOKEN, text)
        return text

    questions = [
        Question(
            id=q.id,
            text=mask_text(q.text),
            kind=q.kind,
            source=q.source,
            answer=mask_text(q.answer) if q.answer is not None else None,
        )
        for q in corpus.questions
    ]
    masks = list(corpus.masks_applied)
    for alias in aliases:
        if alias not in masks:
            masks.append(alias)
    return Corpus(questions=questions, masks_applied=masks)


def _auto_id(kind: QuestionKind, ordinal: int) -> str:
    prefix = "faq" if kind is QuestionKind.ORG_FAQ else "uq"
    return f"{prefix}-{ordinal}"


def load_corpus(path: str | Path, kind: QuestionKind) -> Corpus:
    """Load a corpus file (one JSON object per line, fields id/text/source/answer).

    ``kind`` applies to every record. Records without an id get a sequential
    one. Malformed lines and duplicate ids raise ValueError.
    """
    questions: list[Question] = []
    seen: set[str] = set()
    ordinal = 0
    for lineno, record in read_records(path):
        ordinal += 1
        text = record.get("text")
        if not isinstance(text, str):
            raise ValueError(f"line {lineno}: missing or non-string 'text' field")
        qid = record.get("id")
        if qid is None:
            qid = _auto_id(kind, ordinal)
        elif not isinstance(qid, str) or not qid:
            raise ValueError(f"line {lineno}: 'id' must be a non-empty string")
        if qid in seen:
            raise ValueError(f"duplicate question id {qid!r}")
        seen.add(qid)
        source = record.get("source", "")
        if not isinstance(source, str):
            raise ValueError(f"line {lineno}: 'source' must be a string")
        answer = record.get("answer")
        if answer is not None and not isinstance(answer, str):
            raise ValueError(f"line {lineno}: 'answer' must be a string")
        questions.append(Question(id=qid, text=text, kind=kind, source=source, answer=answer))
    return Corpus(questions=questions)


def question_record(q: Question) -> dict:
    record: dict = {"id": q.id, "text": q.text}
    if q.source:
        record["source"] = q.source
    if q.answer is not None:
        record["answer"] = q.answer
    return record


def save_corpus(corpus: Corpus, path: str | Path, meta: dict | None = None) -> int:
    return write_records(path, (question_record(q) for q in corpus.questions), meta=meta)


def questions_from_texts(
    texts: Iterable[str], kind: QuestionKind, id_prefix: str
) -> list[Question]:
    """Build questions with deterministic ids ``{prefix}{i}`` from raw texts."""
    return [
        Question(id=f"{id_prefix}{i}", text=text, kind=kind)
        for i, text in enumerate(texts, start=1)
    ]
