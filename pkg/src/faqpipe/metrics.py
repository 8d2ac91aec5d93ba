"""Descriptive and evaluation metrics.

ROUGE-1/2/L F1 with multi-reference max aggregation, Flesch-Kincaid grade
under a fixed syllable heuristic, corpus statistics, percent-by-rule scoring
with pluggable scorers, and Fleiss's kappa.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Sequence

if TYPE_CHECKING:
    from .ranker import TrainConfig

from .corpus import Corpus, Question, tokenize
from .jsonl import read_records

TokenSeq = Sequence[str]


@dataclass(frozen=True)
class RougeScore:
    rouge1_f: float
    rouge2_f: float
    rougeL_f: float

    def as_dict(self) -> dict[str, float]:
        return {
            "rouge1_f": self.rouge1_f,
            "rouge2_f": self.rouge2_f,
            "rougeL_f": self.rougeL_f,
        }


def _check_references(references: Sequence[TokenSeq]) -> None:
    if not references:
        raise ValueError("reference list must be non-empty")
    for ref in references:
        if not ref:
            raise ValueError("references must be non-empty token lists")


def _ngram_counts(tokens: TokenSeq, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge_n(candidate: TokenSeq, references: Sequence[TokenSeq], n: int) -> float:
    """ROUGE-n F1 (clipped multiset overlap), max over references."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    _check_references(references)
    candidate_counts = _ngram_counts(candidate, n)
    candidate_total = max(len(candidate) - n + 1, 0)
    best = 0.0
    for ref in references:
        ref_counts = _ngram_counts(ref, n)
        ref_total = max(len(ref) - n + 1, 0)
        if candidate_total == 0 or ref_total == 0:
            continue
        overlap = sum(min(count, ref_counts[gram]) for gram, count in candidate_counts.items())
        best = max(best, _f1(overlap / candidate_total, overlap / ref_total))
    return best


def lcs_length(a: TokenSeq, b: TokenSeq) -> int:
    """Longest common subsequence length (O(len(a)*len(b)) dynamic program)."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0] * (len(b) + 1)
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[len(b)]


def rouge_l(candidate: TokenSeq, references: Sequence[TokenSeq]) -> float:
    """Sentence-level ROUGE-L F1 over whole sequences, max over references."""
    _check_references(references)
    best = 0.0
    for ref in references:
        lcs = lcs_length(candidate, ref)
        if lcs == 0:
            continue
        best = max(best, _f1(lcs / len(candidate), lcs / len(ref)))
    return best


def rouge_all(candidate: TokenSeq, references: Sequence[TokenSeq]) -> RougeScore:
    return RougeScore(
        rouge1_f=rouge_n(candidate, references, 1),
        rouge2_f=rouge_n(candidate, references, 2),
        rougeL_f=rouge_l(candidate, references),
    )


_VOWELS = frozenset("aeiouy")
_SENTENCE_END = re.compile(r"[.?!]+")


def count_syllables(word: str) -> int:
    """Syllables as vowel-group runs (a,e,i,o,u,y), minus a terminal silent
    'e' unless that leaves zero; minimum 1."""
    letters = [ch for ch in word.lower() if ch.isalpha()]
    runs = 0
    previous_vowel = False
    for ch in letters:
        is_vowel = ch in _VOWELS
        if is_vowel and not previous_vowel:
            runs += 1
        previous_vowel = is_vowel
    if runs > 1 and letters and letters[-1] == "e":
        runs -= 1
    return max(runs, 1)


def _sentence_count(text: str) -> int:
    # Maximal segments terminated by . ? or !, minimum one sentence.
    count = 0
    segments = _SENTENCE_END.split(text)
    for segment in segments[:-1]:
        if any(ch.isalnum() for ch in segment):
            count += 1
    return max(count, 1)


def flesch_kincaid_grade(text: str) -> float:
    """0.39 * words/sentences + 11.8 * syllables/words - 15.59.

    Words are tokens containing at least one letter; punctuation tokens are
    excluded. Raises ValueError when the text has no words.
    """
    words = [t for t in tokenize(text) if any(ch.isalpha() for ch in t)]
    if not words:
        raise ValueError("text contains no words")
    sentences = _sentence_count(text)
    syllables = sum(count_syllables(w) for w in words)
    return 0.39 * (len(words) / sentences) + 11.8 * (syllables / len(words)) - 15.59


@dataclass(frozen=True)
class CorpusStats:
    first_word_dist: dict[str, float]
    first_word_covered_percent: float
    vocab_size: int
    mean_length: float

    def as_dict(self) -> dict:
        return {
            "first_word_dist": self.first_word_dist,
            "first_word_covered_percent": self.first_word_covered_percent,
            "vocab_size": self.vocab_size,
            "mean_length": self.mean_length,
        }


def corpus_stats(corpus: Corpus, threshold: float = 0.02) -> CorpusStats:
    """First-word distribution (entries >= threshold), vocabulary size, mean length.

    Lengths count tokens as produced by the tokenizer, punctuation included.
    """
    if not corpus.questions:
        raise ValueError("corpus is empty")
    total = len(corpus.questions)
    first_words = Counter(q.tokens[0] for q in corpus.questions if q.tokens)
    dist: dict[str, float] = {}
    for token, count in first_words.items():
        percent = 100.0 * count / total
        if percent >= threshold * 100.0:
            dist[token] = percent
    dist = dict(sorted(dist.items(), key=lambda item: (-item[1], item[0])))
    vocabulary: set[str] = set()
    token_total = 0
    for q in corpus.questions:
        vocabulary.update(q.tokens)
        token_total += len(q.tokens)
    return CorpusStats(
        first_word_dist=dist,
        first_word_covered_percent=sum(dist.values()),
        vocab_size=len(vocabulary),
        mean_length=token_total / total,
    )


# Grammar-error counting is interface-only: any callable text -> count
# plugs in (external correctors have no reproducible in-core contract).
GrammarErrorCounter = Callable[[str], int]


def null_grammar_counter(text: str) -> int:
    """In-core default: reports zero errors for any text."""
    return 0


def mean_grammar_errors(
    corpus: Corpus, counter: GrammarErrorCounter = null_grammar_counter
) -> float:
    """Mean errors per question under ``counter``; aborts naming a failing question."""
    if not corpus.questions:
        raise ValueError("corpus is empty")
    total = 0
    for q in corpus.questions:
        try:
            count = int(counter(q.text))
        except Exception as exc:
            raise RuntimeError(f"grammar counter failed on question {q.id!r}: {exc}") from exc
        if count < 0:
            raise ValueError(f"grammar counter returned {count} for question {q.id!r}")
        total += count
    return total / len(corpus.questions)


# Formality thresholds: > 3.75 formal, < 3.25 informal, the band between is
# neutral. binary-positive supports plain probability scorers.
CLASSIFY_RULES: dict[str, Callable[[float], bool]] = {
    "formal": lambda s: s > 3.75,
    "informal": lambda s: s < 3.25,
    "neutral": lambda s: 3.25 <= s <= 3.75,
    "binary-positive": lambda s: s > 0.5,
}


def classify_percent(
    corpus: Corpus,
    scorer: Callable[[Question], float],
    rule: str | Callable[[float], bool],
) -> float:
    """Percent of questions whose score satisfies ``rule``.

    ``rule`` is a built-in name from CLASSIFY_RULES or a predicate. A scorer
    failure aborts, naming the question.
    """
    if not corpus.questions:
        raise ValueError("corpus is empty")
    predicate = CLASSIFY_RULES[rule] if isinstance(rule, str) else rule
    matched = 0
    for q in corpus.questions:
        try:
            score = float(scorer(q))
        except Exception as exc:
            raise RuntimeError(f"scorer failed on question {q.id!r}: {exc}") from exc
        if predicate(score):
            matched += 1
    return 100.0 * matched / len(corpus.questions)


def train_token_scorer(
    labeled: Sequence[tuple[str, int]],
    dims: int = 512,
    config: "TrainConfig | None" = None,
) -> Callable[[Question], float]:
    """In-core scorer option: logistic regression over hashed token counts.

    ``labeled`` holds (text, 0/1) examples from a user-supplied file; the
    returned callable maps a question to a probability in (0, 1), ready for
    classify_percent with the binary-positive rule.
    """
    import hashlib

    import numpy as np

    from .ranker import TrainConfig, fit_logistic

    def vectorize(text: str) -> "np.ndarray":
        row = np.zeros(dims, dtype=np.float64)
        for token in tokenize(text):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            row[int.from_bytes(digest[:4], "big") % dims] += 1.0
        return row

    if not labeled:
        raise ValueError("no labeled examples")
    X = np.stack([vectorize(text) for text, _ in labeled])
    y = np.array([float(label) for _, label in labeled])
    w, b, _ = fit_logistic(X, y, config or TrainConfig())

    def scorer(question: Question) -> float:
        z = float(vectorize(question.text) @ w + b)
        if z >= 0:
            p = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            p = e / (1.0 + e)
        return min(max(p, 1e-15), 1.0 - 1e-15)

    return scorer


@dataclass(frozen=True)
class AgreementInput:
    """Per-item category counts for a fixed number of raters."""

    items: tuple[dict[str, int], ...]
    rater_count: int
    item_ids: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.rater_count < 2:
            raise ValueError("rater_count must be >= 2")
        if self.item_ids is not None and len(self.item_ids) != len(self.items):
            raise ValueError("item_ids must match items")
        categories: set[str] = set()
        for i, counts in enumerate(self.items):
            if sum(counts.values()) != self.rater_count:
                name = self.item_ids[i] if self.item_ids else f"item {i}"
                raise ValueError(
                    f"{name}: counts sum to {sum(counts.values())}, expected {self.rater_count}"
                )
            if any(c < 0 for c in counts.values()):
                raise ValueError("category counts must be nonnegative")
            categories.update(counts)
        if len(self.items) < 2 and len(categories) < 2:
            raise ValueError("need >= 2 items or >= 2 categories")


def fleiss_kappa(agreement: AgreementInput) -> float:
    """Fleiss's kappa; returns 1.0 when observed agreement is exactly perfect."""
    r = agreement.rater_count
    n_items = len(agreement.items)
    categories = sorted({c for counts in agreement.items for c in counts})
    totals = {c: 0 for c in categories}
    observed_sum = 0.0
    for counts in agreement.items:
        pair_agreements = sum(counts.get(c, 0) ** 2 for c in categories) - r
        observed_sum += pair_agreements / (r * (r - 1))
        for c in categories:
            totals[c] += counts.get(c, 0)
    observed = observed_sum / n_items
    if observed == 1.0:
        return 1.0
    proportions = [totals[c] / (n_items * r) for c in categories]
    expected = sum(p * p for p in proportions)
    return (observed - expected) / (1.0 - expected)


def load_agreement(path: str | Path) -> AgreementInput:
    """Read agreement items: {"item_id", "category_counts": {category: int}}."""
    items: list[dict[str, int]] = []
    ids: list[str] = []
    rater_count: int | None = None
    for lineno, record in read_records(path):
        counts = record.get("category_counts")
        if not isinstance(counts, dict):
            raise ValueError(f"line {lineno}: missing 'category_counts' object")
        counts = {str(k): int(v) for k, v in counts.items()}
        item_id = str(record.get("item_id", f"line {lineno}"))
        total = sum(counts.values())
        if rater_count is None:
            rater_count = total
        elif total != rater_count:
            raise ValueError(
                f"{item_id}: counts sum to {total}, expected {rater_count}"
            )
        items.append(counts)
        ids.append(item_id)
    if rater_count is None:
        raise ValueError("agreement file has no items")
    return AgreementInput(items=tuple(items), rater_count=rater_count, item_ids=tuple(ids))
