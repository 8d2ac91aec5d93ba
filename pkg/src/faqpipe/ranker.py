"""Pair matching: lexical features, a logistic-regression pair classifier,
and the retrieve-then-re-rank stage that selects top matches per FAQ.

The in-core classifier is a stand-in for a fine-tuned transformer; the real
model stays reachable through the model-service protocol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .corpus import Question
from .jsonl import read_records, write_records
from .modelservice import ModelServiceClient
from .textindex import Bm25Params, InvertedIndex, bm25_score, retrieve_top_k

FEATURE_NAMES = (
    "unigram_jaccard",
    "bigram_jaccard",
    "bm25_score",
    "length_ratio",
    "first_token_match",
    "content_overlap_count",
)

# Tokens ignored by the content-overlap feature: function words plus
# punctuation-only tokens.
_FUNCTION_WORDS = frozenset(
    """a an the is are am was were be been being do does did i you he she it we
    they me my your their his her its our to of in on at for and or but not no
    yes can could will would should shall may might must have has had this that
    these those what how when where why who whom which if then than so as with
    about from by up down out over under again there here all any some
    """.split()
)


class Label(str, Enum):
    MATCH = "match"
    NO_MATCH = "no_match"


@dataclass(frozen=True)
class PairFeatures:
    unigram_jaccard: float
    bigram_jaccard: float
    bm25_score: float
    length_ratio: float
    first_token_match: float
    content_overlap_count: float

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)


@dataclass(frozen=True)
class PairLabel:
    faq_id: str
    user_q_id: str
    label: Label


def _jaccard(a: set, b: set) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def _bigrams(tokens: tuple[str, ...]) -> set[tuple[str, str]]:
    return {(tokens[i], tokens[i + 1]) for i in range(len(tokens) - 1)}


def _content_tokens(tokens: tuple[str, ...]) -> set[str]:
    return {
        t
        for t in tokens
        if t not in _FUNCTION_WORDS and any(ch.isalpha() for ch in t)
    }


def extract_features(
    faq: Question,
    uq: Question,
    index: InvertedIndex | None = None,
    params: Bm25Params | None = None,
) -> PairFeatures:
    """Deterministic lexical features for an (FAQ, user question) pair.

    The BM25 feature scores the user question against the FAQ tokens and is 0
    when no index is given or the question is not indexed.
    """
    faq_set = set(faq.tokens)
    uq_set = set(uq.tokens)
    retrieval = 0.0
    if index is not None and uq.id in index.doc_lengths:
        retrieval = bm25_score(index, params or Bm25Params(), list(faq.tokens), uq.id)
    max_len = max(len(faq.tokens), len(uq.tokens))
    if max_len == 0:
        length_ratio = 1.0
    else:
        length_ratio = min(len(faq.tokens), len(uq.tokens)) / max_len
    first_match = float(
        bool(faq.tokens) and bool(uq.tokens) and faq.tokens[0] == uq.tokens[0]
    )
    return PairFeatures(
        unigram_jaccard=_jaccard(faq_set, uq_set),
        bigram_jaccard=_jaccard(_bigrams(faq.tokens), _bigrams(uq.tokens)),
        bm25_score=retrieval,
        length_ratio=length_ratio,
        first_token_match=first_match,
        content_overlap_count=float(len(_content_tokens(faq.tokens) & _content_tokens(uq.tokens))),
    )


@dataclass(frozen=True)
class TrainingMeta:
    iterations: int
    learning_rate: float
    final_loss: float
    training_accuracy: float
    seed: int


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    iterations: int = 1000
    seed: int = 0


@dataclass(frozen=True)
class PairClassifier:
    """Logistic regression over PairFeatures; scores are always in (0, 1)."""

    weights: tuple[float, ...]
    bias: float
    training_meta: TrainingMeta

    def predict_proba(self, features: PairFeatures) -> float:
        z = float(np.dot(np.asarray(self.weights), features.as_vector()) + self.bias)
        if z >= 0:
            p = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            p = e / (1.0 + e)
        return min(max(p, 1e-15), 1.0 - 1e-15)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


def fit_logistic(
    X: np.ndarray, y: np.ndarray, config: TrainConfig = TrainConfig()
) -> tuple[np.ndarray, float, TrainingMeta]:
    """Full-batch gradient descent on log-loss; bit-reproducible given seed.

    Requires at least one example of each class. Also backs the pluggable
    text scorers in the metrics module.
    """
    if len(y) == 0:
        raise ValueError("no training examples")
    if y.min() == y.max():
        raise ValueError(
            f"training labels contain a single class ({int(y[0])})"
        )
    rng = np.random.default_rng(config.seed)
    w = rng.normal(0.0, 0.01, size=X.shape[1])
    b = 0.0
    n = len(y)
    for _ in range(config.iterations):
        p = _sigmoid(X @ w + b)
        error = p - y
        w -= config.learning_rate * (X.T @ error) / n
        b -= config.learning_rate * float(error.mean())
    p = _sigmoid(X @ w + b)
    eps = 1e-15
    loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    accuracy = float(np.mean((p > 0.5) == (y == 1.0)))
    meta = TrainingMeta(
        iterations=config.iterations,
        learning_rate=config.learning_rate,
        final_loss=loss,
        training_accuracy=accuracy,
        seed=config.seed,
    )
    return w, b, meta


def train_classifier(
    labels: list[PairLabel],
    feature_lookup: Callable[[str, str], PairFeatures],
    config: TrainConfig = TrainConfig(),
) -> PairClassifier:
    """Train the pair classifier; needs at least one example of each class."""
    if not labels:
        raise ValueError("no training labels")
    y = np.array([1.0 if l.label is Label.MATCH else 0.0 for l in labels])
    if y.min() == y.max():
        only = Label.MATCH.value if y[0] == 1.0 else Label.NO_MATCH.value
        raise ValueError(f"training labels contain a single class ({only})")
    X = np.stack([feature_lookup(l.faq_id, l.user_q_id).as_vector() for l in labels])
    w, b, meta = fit_logistic(X, y, config)
    return PairClassifier(weights=tuple(float(v) for v in w), bias=b, training_meta=meta)


def score_pair(
    model: PairClassifier | ModelServiceClient,
    faq: Question,
    uq: Question,
    index: InvertedIndex | None = None,
    params: Bm25Params | None = None,
) -> float:
    """Match score in (0, 1); external replies pass through verbatim."""
    if isinstance(model, ModelServiceClient):
        return model.score_pairs([(faq.text, uq.text)])[0]
    return model.predict_proba(extract_features(faq, uq, index, params))


def rerank_scored(
    faq: Question,
    candidates: Mapping[str, Question],
    index: InvertedIndex,
    params: Bm25Params,
    model: PairClassifier | ModelServiceClient,
    pool_size: int = 1000,
    top: int = 3,
) -> list[tuple[str, float]]:
    """BM25 pool of up to ``pool_size``, re-scored by the classifier.

    Returns up to ``top`` (user question id, classifier score) pairs, score
    descending, ties by ascending id. The output is always a subset of the
    BM25 pool.
    """
    pool = retrieve_top_k(index, params, list(faq.tokens), pool_size)
    if not pool:
        return []
    pool_ids = [doc_id for doc_id, _ in pool]
    if isinstance(model, ModelServiceClient):
        scores = model.score_pairs([(faq.text, candidates[d].text) for d in pool_ids])
    else:
        scores = [
            model.predict_proba(extract_features(faq, candidates[d], index, params))
            for d in pool_ids
        ]
    ranked = sorted(zip(pool_ids, scores), key=lambda entry: (-entry[1], entry[0]))
    return ranked[:top]


def rerank_top3(
    faq: Question,
    candidates: Mapping[str, Question],
    index: InvertedIndex,
    params: Bm25Params,
    model: PairClassifier | ModelServiceClient,
    pool_size: int = 1000,
) -> list[str]:
    return [doc_id for doc_id, _ in rerank_scored(faq, candidates, index, params, model, pool_size)]


def load_labels(path: str | Path) -> list[PairLabel]:
    """Read labels: {"faq_id", "user_q_id", "label": "match"|"no_match"}."""
    labels: list[PairLabel] = []
    seen: set[tuple[str, str]] = set()
    for lineno, record in read_records(path):
        try:
            label = PairLabel(
                faq_id=str(record["faq_id"]),
                user_q_id=str(record["user_q_id"]),
                label=Label(record["label"]),
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: invalid label record ({exc})") from exc
        key = (label.faq_id, label.user_q_id)
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate pair {key}")
        seen.add(key)
        labels.append(label)
    return labels


def save_labels(labels: list[PairLabel], path: str | Path, meta: dict | None = None) -> int:
    return write_records(
        path,
        (
            {"faq_id": l.faq_id, "user_q_id": l.user_q_id, "label": l.label.value}
            for l in labels
        ),
        meta=meta,
    )


def save_classifier(classifier: PairClassifier, path: str | Path) -> None:
    document = {
        "feature_names": list(FEATURE_NAMES),
        "weights": list(classifier.weights),
        "bias": classifier.bias,
        "training_meta": {
            "iterations": classifier.training_meta.iterations,
            "learning_rate": classifier.training_meta.learning_rate,
            "final_loss": classifier.training_meta.final_loss,
            "training_accuracy": classifier.training_meta.training_accuracy,
            "seed": classifier.training_meta.seed,
        },
    }
    Path(path).write_text(json.dumps(document, sort_keys=True, indent=2), encoding="utf-8")


def load_classifier(path: str | Path) -> PairClassifier:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    if document.get("feature_names") != list(FEATURE_NAMES):
        raise ValueError("classifier file has an incompatible feature set")
    meta = document["training_meta"]
    return PairClassifier(
        weights=tuple(float(w) for w in document["weights"]),
        bias=float(document["bias"]),
        training_meta=TrainingMeta(
            iterations=int(meta["iterations"]),
            learning_rate=float(meta["learning_rate"]),
            final_loss=float(meta["final_loss"]),
            training_accuracy=float(meta["training_accuracy"]),
            seed=int(meta["seed"]),
        ),
    )
