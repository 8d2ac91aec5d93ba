import math
import random
from collections import Counter

import pytest

from faqpipe.corpus import Corpus, Question, QuestionKind
from faqpipe.textindex import (
    Bm25Params,
    build_index,
    bm25_score,
    load_index,
    retrieve_top_k,
    save_index,
)


def corpus_of(texts_by_id: dict[str, str]) -> Corpus:
    return Corpus(
        [
            Question(id=doc_id, text=text, kind=QuestionKind.USER_QUESTION)
            for doc_id, text in texts_by_id.items()
        ]
    )


def oracle_scores(
    docs: dict[str, list[str]], query: list[str], k1: float, b: float
) -> dict[str, float]:
    """Direct evaluation of the BM25 formula over raw token lists."""
    n = len(docs)
    avgdl = sum(len(tokens) for tokens in docs.values()) / n
    df: dict[str, int] = {}
    for tokens in docs.values():
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    scores = {}
    for doc_id, tokens in docs.items():
        counts = Counter(tokens)
        score = 0.0
        for term in dict.fromkeys(query):
            freq = counts.get(term, 0)
            if freq == 0:
                continue
            term_df = df.get(term, 0)
            term_idf = math.log(1.0 + (n - term_df + 0.5) / (term_df + 0.5))
            norm = k1 * (1.0 - b + b * len(tokens) / avgdl)
            score += term_idf * (freq * (k1 + 1.0)) / (freq + norm)
        scores[doc_id] = score
    return scores


def oracle_rank(docs, query, k1=1.2, b=0.75):
    scores = oracle_scores(docs, query, k1, b)
    ranked = [(d, s) for d, s in scores.items() if s > 0.0]
    ranked.sort(key=lambda entry: (-entry[1], entry[0]))
    return ranked


def random_corpus(rng: random.Random, max_docs: int = 200) -> dict[str, list[str]]:
    vocab = [f"w{i}" for i in range(30)]
    n_docs = rng.randint(1, max_docs)
    return {
        f"d{i:03d}": [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
        for i in range(n_docs)
    }


class TestBuild:
    def test_two_doc_postings(self):
        index = build_index(corpus_of({"d1": "a b", "d2": "b c"}))
        assert index.postings == {
            "a": [("d1", 1)],
            "b": [("d1", 1), ("d2", 1)],
            "c": [("d2", 1)],
        }
        assert index.avg_doc_length == 2.0

    def test_empty_corpus(self):
        index = build_index(Corpus([]))
        assert index.doc_count == 0
        assert retrieve_top_k(index, Bm25Params(), ["x"], 5) == []

    def test_term_frequency_counted(self):
        index = build_index(corpus_of({"d": "b b b"}))
        assert index.postings["b"] == [("d", 3)]
        assert index.doc_lengths["d"] == 3

    def test_posting_frequencies_sum_to_doc_length(self):
        rng = random.Random(5)
        docs = random_corpus(rng, max_docs=50)
        index = build_index(corpus_of({d: " ".join(t) for d, t in docs.items()}))
        by_doc: dict[str, int] = {}
        for plist in index.postings.values():
            for doc_id, freq in plist:
                by_doc[doc_id] = by_doc.get(doc_id, 0) + freq
        assert by_doc == index.doc_lengths
        assert index.avg_doc_length == sum(index.doc_lengths.values()) / index.doc_count


class TestScore:
    def test_no_shared_terms_scores_zero(self):
        index = build_index(corpus_of({"d1": "hello world"}))
        assert bm25_score(index, Bm25Params(), ["zebra"], "d1") == 0.0

    def test_single_doc_hand_value(self):
        index = build_index(corpus_of({"d1": "hello world"}))
        score = bm25_score(index, Bm25Params(k1=1.2, b=0.75), ["hello"], "d1")
        assert score == pytest.approx(math.log(4 / 3), abs=1e-12)

    def test_unknown_doc_raises(self):
        index = build_index(corpus_of({"d1": "hello"}))
        with pytest.raises(KeyError):
            bm25_score(index, Bm25Params(), ["hello"], "nope")

    def test_matches_oracle_on_three_doc_corpus(self):
        docs = {"d1": ["a", "b", "a"], "d2": ["b", "c"], "d3": ["a", "c", "c", "d"]}
        index = build_index(corpus_of({d: " ".join(t) for d, t in docs.items()}))
        expected = oracle_scores(docs, ["a", "c"], 1.2, 0.75)
        for doc_id in docs:
            assert bm25_score(index, Bm25Params(), ["a", "c"], doc_id) == expected[doc_id]

    def test_nonnegative(self):
        rng = random.Random(11)
        docs = random_corpus(rng, max_docs=40)
        index = build_index(corpus_of({d: " ".join(t) for d, t in docs.items()}))
        for doc_id in docs:
            assert bm25_score(index, Bm25Params(), ["w0", "w1", "w2"], doc_id) >= 0.0


class TestRetrieve:
    def test_up_to_k_semantics(self):
        index = build_index(corpus_of({"d1": "apple pie", "d2": "apple cake", "d3": "stone"}))
        hits = retrieve_top_k(index, Bm25Params(), ["apple"], 10)
        assert {d for d, _ in hits} == {"d1", "d2"}

    def test_exact_match_ranks_first_alone(self):
        index = build_index(
            corpus_of({"d1": "alpha beta", "d2": "gamma delta", "d3": "epsilon zeta"})
        )
        hits = retrieve_top_k(index, Bm25Params(), ["gamma", "delta"], 5)
        assert [d for d, _ in hits] == ["d2"]

    def test_ties_break_by_ascending_doc_id(self):
        index = build_index(corpus_of({"z": "same text", "a": "same text"}))
        hits = retrieve_top_k(index, Bm25Params(), ["same"], 5)
        assert [d for d, _ in hits] == ["a", "z"]

    def test_k_must_be_positive(self):
        index = build_index(corpus_of({"d1": "x"}))
        with pytest.raises(ValueError):
            retrieve_top_k(index, Bm25Params(), ["x"], 0)

    def test_equals_bruteforce_oracle_on_random_corpora(self):
        rng = random.Random(99)
        for _ in range(10):
            docs = random_corpus(rng, max_docs=100)
            index = build_index(corpus_of({d: " ".join(t) for d, t in docs.items()}))
            query = [rng.choice([f"w{i}" for i in range(30)]) for _ in range(rng.randint(1, 6))]
            got = retrieve_top_k(index, Bm25Params(), query, len(docs))
            assert got == oracle_rank(docs, query)

    def test_invariant_under_insertion_order(self):
        texts = {"d1": "a b c", "d2": "b c d", "d3": "c d e", "d4": "a e"}
        forward = build_index(corpus_of(texts))
        reversed_corpus = Corpus(
            [
                Question(id=d, text=t, kind=QuestionKind.USER_QUESTION)
                for d, t in reversed(list(texts.items()))
            ]
        )
        backward = build_index(reversed_corpus)
        query = ["a", "c", "e"]
        assert retrieve_top_k(forward, Bm25Params(), query, 4) == retrieve_top_k(
            backward, Bm25Params(), query, 4
        )

    def test_extra_occurrence_never_decreases_score(self):
        # Same doc length; one occurrence of the query term swapped in for a
        # filler token.
        base = corpus_of({"d1": "q x x x", "d2": "y y z z"})
        more = corpus_of({"d1": "q q x x", "d2": "y y z z"})
        score_base = bm25_score(build_index(base), Bm25Params(), ["q"], "d1")
        score_more = bm25_score(build_index(more), Bm25Params(), ["q"], "d1")
        assert score_more >= score_base


class TestSerialization:
    def test_round_trip(self, tmp_path):
        docs = {"d1": "a b a", "d2": "b c", "d3": "c d e"}
        index = build_index(corpus_of(docs))
        path = tmp_path / "index.json"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded == index
        query = ["a", "c"]
        assert retrieve_top_k(loaded, Bm25Params(), query, 3) == retrieve_top_k(
            index, Bm25Params(), query, 3
        )
