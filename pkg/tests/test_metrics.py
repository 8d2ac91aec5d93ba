import random

import pytest
from hypothesis import given, strategies as st

from faqpipe.corpus import Corpus, Question, QuestionKind
from faqpipe.metrics import (
    AgreementInput,
    classify_percent,
    corpus_stats,
    count_syllables,
    flesch_kincaid_grade,
    fleiss_kappa,
    lcs_length,
    load_agreement,
    mean_grammar_errors,
    null_grammar_counter,
    rouge_l,
    rouge_n,
    train_token_scorer,
)

# -- independent oracles -------------------------------------------------


def oracle_rouge_n(candidate, references, n):
    """Clipped n-gram overlap by explicit greedy multiset removal."""

    def grams(tokens):
        return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]

    best = 0.0
    candidate_grams = grams(candidate)
    for ref in references:
        ref_grams = grams(ref)
        if not candidate_grams or not ref_grams:
            continue
        remaining = list(ref_grams)
        overlap = 0
        for gram in candidate_grams:
            if gram in remaining:
                remaining.remove(gram)
                overlap += 1
        p = overlap / len(candidate_grams)
        r = overlap / len(ref_grams)
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        best = max(best, f1)
    return best


def _is_subsequence(sub, seq):
    iterator = iter(seq)
    return all(token in iterator for token in sub)


def oracle_lcs(a, b):
    """Exhaustive common-subsequence search (sequences up to ~10 tokens)."""
    best = 0
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    for mask in range(1 << len(short)):
        sub = [short[i] for i in range(len(short)) if mask >> i & 1]
        if len(sub) > best and _is_subsequence(sub, long_):
            best = len(sub)
    return best


def random_tokens(rng, max_len=10, vocab=("a", "b", "c", "d")):
    return [rng.choice(vocab) for _ in range(rng.randint(1, max_len))]


# -- ROUGE ----------------------------------------------------------------


class TestRougeN:
    def test_identity_scores_one(self):
        tokens = "where are you located ?".split()
        assert rouge_n(tokens, [tokens], 1) == 1.0
        assert rouge_n(tokens, [tokens], 2) == 1.0

    def test_generated_vs_target_pair(self):
        candidate = "how can i get tested ?".split()
        reference = "where can i go to get tested ?".split()
        assert rouge_n(candidate, [reference], 1) == pytest.approx(5 / 7, abs=1e-12)

    def test_disjoint_is_zero(self):
        assert rouge_n(["a", "b"], [["c", "d"]], 1) == 0.0
        assert rouge_n(["a", "b"], [["c", "d"]], 2) == 0.0

    def test_empty_reference_list_rejected(self):
        with pytest.raises(ValueError):
            rouge_n(["a"], [], 1)

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            rouge_n(["a"], [[]], 1)

    def test_single_token_has_no_bigrams(self):
        assert rouge_n(["a"], [["a"]], 2) == 0.0

    def test_clipping_limits_repeats(self):
        # candidate repeats "a" three times; reference has it once.
        assert rouge_n(["a", "a", "a"], [["a", "b", "c"]], 1) == pytest.approx(
            2 * (1 / 3) * (1 / 3) / (2 / 3), abs=1e-12
        )

    def test_adding_reference_never_decreases(self):
        rng = random.Random(7)
        for _ in range(50):
            candidate = random_tokens(rng)
            refs = [random_tokens(rng)]
            base = rouge_n(candidate, refs, 1)
            refs.append(random_tokens(rng))
            assert rouge_n(candidate, refs, 1) >= base

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(13)
        for _ in range(300):
            candidate = random_tokens(rng, max_len=6)
            references = [random_tokens(rng, max_len=6) for _ in range(rng.randint(1, 3))]
            for n in (1, 2):
                assert rouge_n(candidate, references, n) == pytest.approx(
                    oracle_rouge_n(candidate, references, n), abs=1e-12
                )


class TestRougeL:
    def test_identity(self):
        tokens = "where are you located ?".split()
        assert rouge_l(tokens, [tokens]) == 1.0

    def test_swap_example(self):
        assert rouge_l(["a", "b", "c", "d"], [["a", "c", "b", "d"]]) == pytest.approx(
            0.75, abs=1e-12
        )

    def test_strict_subsequence(self):
        candidate = ["b", "d"]
        reference = ["a", "b", "c", "d"]
        expected = 2 * 1.0 * (2 / 4) / (1.0 + 2 / 4)
        assert rouge_l(candidate, [reference]) == pytest.approx(expected, abs=1e-12)
        assert rouge_l(candidate, [reference]) == pytest.approx(
            2 * len(candidate) / (len(candidate) + len(reference)), abs=1e-12
        )

    def test_no_common_subsequence_is_zero(self):
        assert rouge_l(["a"], [["b"]]) == 0.0

    def test_lcs_matches_exhaustive_search(self):
        rng = random.Random(29)
        for _ in range(200):
            a = random_tokens(rng, max_len=10)
            b = random_tokens(rng, max_len=10)
            assert lcs_length(a, b) == oracle_lcs(a, b)

    def test_empty_reference_list_rejected(self):
        with pytest.raises(ValueError):
            rouge_l(["a"], [])

    @given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=8))
    def test_identity_property(self, tokens):
        assert rouge_l(tokens, [tokens]) == 1.0
        assert rouge_n(tokens, [tokens], 1) == 1.0


# -- Flesch-Kincaid ---------------------------------------------------------

# Hand-scored under the declared heuristic: (text, words, syllables, sentences).
HAND_SCORED = [
    ("where are you located ?", 4, 6, 1),
    ("go.", 1, 1, 1),
    ("is it okay to donate blood", 6, 8, 1),
    ("how can i get a coronavirus test ?", 7, 11, 1),
    ("can pets get the coronavirus ? people were seeking information .", 9, 17, 2),
]


class TestFleschKincaid:
    @pytest.mark.parametrize("text,words,syllables,sentences", HAND_SCORED)
    def test_hand_scored_sentences(self, text, words, syllables, sentences):
        expected = 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59
        assert flesch_kincaid_grade(text) == pytest.approx(expected, abs=0.01)

    def test_located_example_value(self):
        assert flesch_kincaid_grade("where are you located ?") == pytest.approx(3.67, abs=0.01)

    def test_monosyllabic_word(self):
        assert flesch_kincaid_grade("go.") == pytest.approx(-3.40, abs=0.01)

    def test_no_words_rejected(self):
        with pytest.raises(ValueError):
            flesch_kincaid_grade("?!")

    @pytest.mark.parametrize(
        "word,expected",
        [
            ("where", 1),
            ("located", 3),
            ("you", 1),
            ("the", 1),
            ("people", 1),
            ("coronavirus", 5),
            ("okay", 2),
            ("donate", 2),
            ("bee", 1),
            ("hmm", 1),
            ("i'd", 1),
        ],
    )
    def test_syllable_heuristic(self, word, expected):
        assert count_syllables(word) == expected


# -- corpus stats -------------------------------------------------------------


def _corpus(texts):
    return Corpus(
        [
            Question(id=f"q{i}", text=t, kind=QuestionKind.ORG_FAQ)
            for i, t in enumerate(texts)
        ]
    )


class TestCorpusStats:
    def test_first_word_percentages(self):
        texts = ["how a", "how b", "how c"] + [f"what x{i}" for i in range(7)]
        stats = corpus_stats(_corpus(texts))
        assert stats.first_word_dist["how"] == pytest.approx(30.0)
        assert stats.first_word_dist["what"] == pytest.approx(70.0)
        assert stats.first_word_covered_percent == pytest.approx(100.0)

    def test_single_question(self):
        stats = corpus_stats(_corpus(["how do i apply ?"]))
        assert stats.vocab_size == 5
        assert stats.mean_length == 5
        assert stats.first_word_dist == {"how": 100.0}

    def test_threshold_filters_rare_first_words(self):
        texts = ["how x"] * 98 + ["why y", "who z"]
        stats = corpus_stats(_corpus(texts), threshold=0.02)
        assert set(stats.first_word_dist) == {"how"}
        assert stats.first_word_covered_percent == pytest.approx(98.0)

    def test_reported_entries_respect_threshold_and_sum(self):
        rng = random.Random(3)
        texts = [f"{rng.choice('how what why can is do'.split())} q{i}" for i in range(200)]
        stats = corpus_stats(_corpus(texts), threshold=0.05)
        assert all(p >= 5.0 for p in stats.first_word_dist.values())
        assert stats.first_word_covered_percent <= 100.0 + 1e-9

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            corpus_stats(Corpus([]))


class TestClassifyPercent:
    def test_constant_formal(self):
        assert classify_percent(_corpus(["a", "b"]), lambda q: 4.0, "formal") == 100.0

    def test_neutral_band_excluded_from_formal(self):
        assert classify_percent(_corpus(["a", "b"]), lambda q: 3.5, "formal") == 0.0

    def test_three_of_four(self):
        scores = {"q0": 1.0, "q1": 1.0, "q2": 1.0, "q3": 0.0}
        corpus = _corpus(["a", "b", "c", "d"])
        assert classify_percent(corpus, lambda q: scores[q.id], "binary-positive") == 75.0

    def test_formal_informal_neutral_partition(self):
        rng = random.Random(17)
        corpus = _corpus([f"t{i}" for i in range(50)])
        scores = {q.id: rng.uniform(2.0, 5.0) for q in corpus.questions}
        scorer = lambda q: scores[q.id]
        total = sum(
            classify_percent(corpus, scorer, rule)
            for rule in ("formal", "informal", "neutral")
        )
        assert total == pytest.approx(100.0)

    def test_scorer_failure_names_question(self):
        def bad(q):
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError, match="q0"):
            classify_percent(_corpus(["a"]), bad, "formal")


class TestGrammarErrors:
    def test_null_counter_means_zero(self):
        assert mean_grammar_errors(_corpus(["a b", "c d"])) == 0.0
        assert null_grammar_counter("anything at all") == 0

    def test_pluggable_counter_mean(self):
        counter = lambda text: text.count("teh")
        corpus = _corpus(["teh question", "fine question", "teh teh"])
        assert mean_grammar_errors(corpus, counter) == pytest.approx(1.0)

    def test_counter_failure_names_question(self):
        def bad(text):
            raise RuntimeError("service down")

        with pytest.raises(RuntimeError, match="q0"):
            mean_grammar_errors(_corpus(["a"]), bad)

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError, match="q0"):
            mean_grammar_errors(_corpus(["a"]), lambda text: -1)


class TestTokenScorer:
    def test_separates_two_styles(self):
        formal = [
            "what is the minimum age requirement to work at our organization ?",
            "how do i check the status of my application ?",
            "does the organization offer relocation assistance ?",
            "what should i expect in my interview ?",
        ]
        informal = [
            "hey anyone got the job yet lol",
            "plz help me out thanks guys",
            "anyone know whats up with this",
            "lol ok thanks anyway guys",
        ]
        labeled = [(t, 1) for t in formal] + [(t, 0) for t in informal]
        scorer = train_token_scorer(labeled)
        formal_q = Question(
            id="f", text="what is the minimum age requirement ?", kind=QuestionKind.ORG_FAQ
        )
        informal_q = Question(id="u", text="lol thanks guys", kind=QuestionKind.USER_QUESTION)
        assert scorer(formal_q) > 0.5 > scorer(informal_q)

    def test_plugs_into_classify_percent(self):
        labeled = [("alpha beta gamma", 1), ("zig zag zog", 0)] * 3
        scorer = train_token_scorer(labeled)
        corpus = _corpus(["alpha beta gamma", "zig zag zog"])
        percent = classify_percent(corpus, scorer, "binary-positive")
        assert percent == 50.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            train_token_scorer([("a", 1), ("b", 1)])


# -- Fleiss kappa ------------------------------------------------------------


class TestFleissKappa:
    def test_perfect_agreement_convention(self):
        agreement = AgreementInput(
            items=({"match": 3}, {"no_match": 3}), rater_count=3
        )
        assert fleiss_kappa(agreement) == 1.0

    def test_hand_derived_fixture(self):
        agreement = AgreementInput(
            items=(
                {"match": 3, "no_match": 0},
                {"match": 2, "no_match": 1},
                {"match": 0, "no_match": 3},
            ),
            rater_count=3,
        )
        assert fleiss_kappa(agreement) == pytest.approx(22 / 40, abs=1e-12)

    def test_chance_level_fixture_is_zero(self):
        agreement = AgreementInput(
            items=({"a": 2}, {"b": 2}, {"a": 1, "b": 1}, {"a": 1, "b": 1}),
            rater_count=2,
        )
        assert fleiss_kappa(agreement) == pytest.approx(0.0, abs=1e-12)

    def test_counts_not_summing_to_r_rejected(self):
        with pytest.raises(ValueError, match="item 0"):
            AgreementInput(items=({"a": 2, "b": 2},), rater_count=3)

    def test_error_names_item_id(self):
        with pytest.raises(ValueError, match="pair-7"):
            AgreementInput(
                items=({"a": 3}, {"a": 1}),
                rater_count=3,
                item_ids=("pair-3", "pair-7"),
            )

    def test_kappa_within_bounds_on_random_inputs(self):
        rng = random.Random(23)
        for _ in range(100):
            r = rng.randint(2, 5)
            items = []
            for _ in range(rng.randint(2, 12)):
                a = rng.randint(0, r)
                items.append({"x": a, "y": r - a})
            value = fleiss_kappa(AgreementInput(items=tuple(items), rater_count=r))
            assert -1.0 - 1e-9 <= value <= 1.0 + 1e-9

    def test_load_agreement_file(self, tmp_path):
        path = tmp_path / "agreement.jsonl"
        path.write_text(
            '{"item_id": "p1", "category_counts": {"match": 3}}\n'
            '{"item_id": "p2", "category_counts": {"match": 2, "no_match": 1}}\n'
            '{"item_id": "p3", "category_counts": {"no_match": 3}}\n'
        )
        agreement = load_agreement(path)
        assert agreement.rater_count == 3
        assert fleiss_kappa(agreement) == pytest.approx(22 / 40, abs=1e-12)
