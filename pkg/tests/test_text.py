import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierlabel.errors import EmptyPostError
from hierlabel.text import MAX_SENTENCE_WORDS, preprocess, split_sentences


class TestPreprocess:
    def test_documented_rule_set(self):
        # frozen by applying the keep/collapse rules by hand
        assert preprocess("It's NICE!!  ") == "it's nice!"

    def test_fixed_point(self):
        assert preprocess("abc") == "abc"

    def test_symbols_only_is_empty_post(self):
        with pytest.raises(EmptyPostError):
            preprocess("@#$%")

    def test_punctuation_only_is_empty_post(self):
        with pytest.raises(EmptyPostError):
            preprocess("... !!!")

    def test_keeps_digits_and_apostrophes(self):
        assert preprocess("Women's 9-5 job") == "women's 9 5 job"

    def test_collapses_whitespace_runs(self):
        assert preprocess("a\t\tb \n c") == "a b c"

    def test_mixed_punctuation_run_keeps_first_mark(self):
        assert preprocess("what?!") == "what?"

    def test_space_before_punctuation_collapses(self):
        assert preprocess("so unfair .") == "so unfair."

    @given(st.text(min_size=0, max_size=80))
    @settings(max_examples=500, deadline=None)
    def test_idempotent(self, text):
        try:
            once = preprocess(text)
        except EmptyPostError:
            return
        assert preprocess(once) == once


class TestSplitSentences:
    def test_two_sentences(self):
        assert split_sentences("a b. c") == [["a", "b"], ["c"]]

    def test_exclamation_and_question_split(self):
        assert split_sentences("stop it! why me? ok") == [
            ["stop", "it"],
            ["why", "me"],
            ["ok"],
        ]

    def test_long_sentence_hard_wrapped(self):
        words = " ".join(f"w{i}" for i in range(80))
        chunks = split_sentences(words)
        assert [len(c) for c in chunks] == [35, 35, 10]
        assert [w for c in chunks for w in c] == [f"w{i}" for i in range(80)]

    def test_empty_sentences_dropped(self):
        assert split_sentences("a. . b") == [["a"], ["b"]]

    @given(
        st.lists(
            st.lists(
                st.sampled_from(["it", "was", "so", "unfair", "at", "work", "today"]),
                min_size=1,
                max_size=60,
            ),
            min_size=1,
            max_size=6,
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_wrap_bound_holds(self, sentences):
        text = ". ".join(" ".join(words) for words in sentences)
        out = split_sentences(preprocess(text))
        assert out, "nonempty input must yield sentences"
        assert max(len(s) for s in out) <= MAX_SENTENCE_WORDS

    def test_order_preserved_across_wraps(self):
        text = " ".join(f"w{i}" for i in range(40)) + ". tail here"
        chunks = split_sentences(text)
        flat = [w for c in chunks for w in c]
        assert flat == [f"w{i}" for i in range(40)] + ["tail", "here"]
