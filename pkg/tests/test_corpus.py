import json

import pytest
from hypothesis import given, strategies as st

from faqpipe.corpus import (
    Corpus,
    Question,
    QuestionKind,
    load_corpus,
    mask_org_names,
    save_corpus,
    tokenize,
)


class TestTokenize:
    def test_detaches_question_mark(self):
        assert tokenize("Where are you located?") == ["where", "are", "you", "located", "?"]

    def test_empty_text(self):
        assert tokenize("") == []

    def test_in_word_apostrophe_stays_attached(self):
        assert tokenize("I'd like a respirator") == ["i'd", "like", "a", "respirator"]

    def test_leading_and_trailing_apostrophes_detach(self):
        assert tokenize("'tis") == ["'", "tis"]
        assert tokenize("dogs' toys") == ["dogs", "'", "toys"]

    def test_punctuation_and_parens(self):
        assert tokenize('he said: "hi" (loudly)!') == [
            "he", "said", ":", '"', "hi", '"', "(", "loudly", ")", "!",
        ]

    def test_hyphens_stay_attached(self):
        assert tokenize("covid-19 test") == ["covid-19", "test"]

    @given(st.text(max_size=80))
    def test_idempotent_on_joined_output(self, text):
        tokens = tokenize(text)
        assert tokenize(" ".join(tokens)) == tokens


class TestMasking:
    def _corpus(self, text, answer=None):
        return Corpus(
            [Question(id="q1", text=text, kind=QuestionKind.ORG_FAQ, answer=answer)]
        )

    def test_direct_substitution(self):
        masked = mask_org_names(self._corpus("does Acme hire interns?"), ["Acme"])
        assert masked.questions[0].text == "does ORG_NAME hire interns?"
        assert masked.masks_applied == ["Acme"]

    def test_no_occurrence_is_unchanged(self):
        masked = mask_org_names(self._corpus("minimum age to work"), ["Acme"])
        assert masked.questions[0].text == "minimum age to work"

    def test_answers_masked_too(self):
        masked = mask_org_names(
            self._corpus(
                "I have applied before and was rejected. Should I try again?",
                answer="Acme recruits on a post-by-post basis",
            ),
            ["Acme"],
        )
        assert masked.questions[0].answer == "ORG_NAME recruits on a post-by-post basis"

    def test_case_insensitive_whole_word(self):
        masked = mask_org_names(self._corpus("ACME and AcmeCorp differ"), ["Acme"])
        assert masked.questions[0].text == "ORG_NAME and AcmeCorp differ"

    def test_multi_word_alias(self):
        masked = mask_org_names(self._corpus("ask Acme Corp about it"), ["Acme Corp"])
        assert masked.questions[0].text == "ask ORG_NAME about it"

    def test_tokens_rederived(self):
        masked = mask_org_names(self._corpus("does Acme hire?"), ["Acme"])
        assert masked.questions[0].tokens == ("does", "org_name", "hire", "?")

    def test_self_replacing_alias_rejected(self):
        with pytest.raises(ValueError, match="self-replace"):
            mask_org_names(self._corpus("x"), ["ORG_NAME"])
        with pytest.raises(ValueError, match="self-replace"):
            mask_org_names(self._corpus("x"), ["org_name"])

    def test_empty_alias_list_rejected(self):
        with pytest.raises(ValueError):
            mask_org_names(self._corpus("x"), [])

    def test_idempotent(self):
        once = mask_org_names(self._corpus("Acme hires at Acme"), ["Acme"])
        twice = mask_org_names(once, ["Acme"])
        assert once == twice

    def test_no_whole_word_alias_remains(self):
        corpus = Corpus(
            [
                Question(id=f"q{i}", text=t, kind=QuestionKind.USER_QUESTION)
                for i, t in enumerate(
                    ["Acme is hiring", "I love aCme!", "acme, acme", "nothing here"]
                )
            ]
        )
        masked = mask_org_names(corpus, ["Acme"])
        import re

        pattern = re.compile(r"(?<!\w)acme(?!\w)", re.IGNORECASE)
        for q in masked.questions:
            assert not pattern.search(q.text)


class TestLoadSave:
    def test_three_line_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            "\n".join(
                json.dumps(r)
                for r in [
                    {"id": "a", "text": "one?"},
                    {"text": "two"},
                    {"id": "c", "text": "three", "source": "forum", "answer": "yes"},
                ]
            )
        )
        corpus = load_corpus(path, QuestionKind.USER_QUESTION)
        assert len(corpus) == 3
        assert corpus.questions[1].id == "uq-2"
        assert corpus.questions[2].answer == "yes"

    def test_duplicate_id_error_names_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "q1", "text": "a"}\n{"id": "q1", "text": "b"}\n')
        with pytest.raises(ValueError, match="q1"):
            load_corpus(path, QuestionKind.ORG_FAQ)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        assert len(load_corpus(path, QuestionKind.ORG_FAQ)) == 0

    def test_malformed_line_cites_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"text": "ok"}\nnot json\n')
        with pytest.raises(ValueError, match="line 2"):
            load_corpus(path, QuestionKind.ORG_FAQ)

    def test_missing_text_cites_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a"}\n')
        with pytest.raises(ValueError, match="line 1"):
            load_corpus(path, QuestionKind.ORG_FAQ)

    def test_round_trip_fixed_point(self, tmp_path, toy_faqs_path):
        first = load_corpus(toy_faqs_path, QuestionKind.ORG_FAQ)
        out = tmp_path / "again.jsonl"
        save_corpus(first, out)
        second = load_corpus(out, QuestionKind.ORG_FAQ)
        assert first == second
        out2 = tmp_path / "third.jsonl"
        save_corpus(second, out2)
        assert out.read_text() == out2.read_text()

    def test_header_line_skipped(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"_meta": {"stage": "ingest", "seed": 0}}\n{"text": "hi"}\n')
        assert len(load_corpus(path, QuestionKind.USER_QUESTION)) == 1
