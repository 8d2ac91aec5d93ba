"""Inverted index over question corpora with BM25 scoring and top-k retrieval."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError("k1 must be nonnegative")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")


@dataclass
class InvertedIndex:
    """Postings plus the corpus statistics BM25 needs.

    Immutable after build; queries are safe to run concurrently.
    """

    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    doc_count: int = 0
    avg_doc_length: float = 0.0

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def term_frequency(self, term: str, doc_id: str) -> int:
        for posting_doc, freq in self.postings.get(term, ()):
            if posting_doc == doc_id:
                return freq
        return 0


def build_index(corpus: Corpus) -> InvertedIndex:
    """Index every token of every question; an empty corpus gives an empty index."""
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for q in corpus.questions:
        doc_lengths[q.id] = len(q.tokens)
        for term, freq in Counter(q.tokens).items():
            postings.setdefault(term, []).append((q.id, freq))
    # Postings sorted by doc id so the index layout does not depend on
    # insertion order.
    for plist in postings.values():
        plist.sort(key=lambda entry: entry[0])
    doc_count = len(doc_lengths)
    avg = sum(doc_lengths.values()) / doc_count if doc_count else 0.0
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_count=doc_count,
        avg_doc_length=avg,
    )


def idf(index: InvertedIndex, term: str) -> float:
    """ln(1 + (N - df + 0.5) / (df + 0.5)); nonnegative for every df <= N."""
    df = index.document_frequency(term)
    return math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))


def _distinct_query_terms(query_tokens: list[str]) -> list[str]:
    # Query terms are deduplicated (plain term sum, no query-term-frequency
    # weighting); first-occurrence order keeps float summation deterministic.
    return list(dict.fromkeys(query_tokens))


def bm25_score(
    index: InvertedIndex,
    params: Bm25Params,
    query_tokens: list[str],
    doc_id: str,
) -> float:
    """BM25 score of one document for a tokenized query."""
    if doc_id not in index.doc_lengths:
        raise KeyError(f"unknown doc id {doc_id!r}")
    doc_length = index.doc_lengths[doc_id]
    score = 0.0
    for term in _distinct_query_terms(query_tokens):
        freq = index.term_frequency(term, doc_id)
        if freq == 0:
            continue
        norm = params.k1 * (1.0 - params.b + params.b * doc_length / index.avg_doc_length)
        score += idf(index, term) * (freq * (params.k1 + 1.0)) / (freq + norm)
    return score


def retrieve_top_k(
    index: InvertedIndex,
    params: Bm25Params,
    query_tokens: list[str],
    k: int,
) -> list[tuple[str, float]]:
    """Up to ``k`` (doc id, score) pairs, score descending, ties by ascending id.

    Documents scoring 0 are excluded, so fewer than k results is normal.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores: dict[str, float] = {}
    for term in _distinct_query_terms(query_tokens):
        plist = index.postings.get(term)
        if not plist:
            continue
        term_idf = idf(index, term)
        for doc_id, freq in plist:
            doc_length = index.doc_lengths[doc_id]
            norm = params.k1 * (
                1.0 - params.b + params.b * doc_length / index.avg_doc_length
            )
            contribution = term_idf * (freq * (params.k1 + 1.0)) / (freq + norm)
            scores[doc_id] = scores.get(doc_id, 0.0) + contribution
    ranked = [(doc_id, score) for doc_id, score in scores.items() if score > 0.0]
    ranked.sort(key=lambda entry: (-entry[1], entry[0]))
    return ranked[:k]


def save_index(index: InvertedIndex, path: str | Path) -> None:
    document = {
        "postings": {term: [[d, f] for d, f in plist] for term, plist in index.postings.items()},
        "doc_lengths": index.doc_lengths,
        "doc_count": index.doc_count,
        "avg_doc_length": index.avg_doc_length,
    }
    Path(path).write_text(json.dumps(document, sort_keys=True), encoding="utf-8")


def load_index(path: str | Path) -> InvertedIndex:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    return InvertedIndex(
        postings={
            term: [(d, int(f)) for d, f in plist]
            for term, plist in document["postings"].items()
        },
        doc_lengths={d: int(n) for d, n in document["doc_lengths"].items()},
        doc_count=int(document["doc_count"]),
        avg_doc_length=float(document["avg_doc_length"]),
    )
