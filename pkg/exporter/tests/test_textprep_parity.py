"""Splitting parity between this package's reimplementation and the engine.

The engine package is the reference implementation of the documented
rules; these tests pin byte-level agreement on a shared conformance corpus.
"""

import pytest

import embexport.textprep as ours

engine_text = pytest.importorskip(
    "hierlabel.text", reason="engine package required for parity checks"
)
engine_data = pytest.importorskip("hierlabel.data")

from embexport.dataset import read_dataset  # noqa: E402


def test_preprocess_parity_on_conformance_corpus(conformance_corpus):
    raw_lines = conformance_corpus.read_text(encoding="utf-8").splitlines()[1:]
    for line in raw_lines:
        _, _, text = line.split("\t")
        assert ours.preprocess(text) == engine_text.preprocess(text)


def test_sentence_parity_word_for_word(conformance_corpus):
    engine_posts, _ = engine_data.load_dataset(conformance_corpus)
    engine_sents = {p.id: p.sentences() for p in engine_posts}
    our_posts = read_dataset(conformance_corpus)
    assert {p.id for p in our_posts} == set(engine_sents)
    for post in our_posts:
        assert post.sentences == engine_sents[post.id], post.id


def test_sentence_counts_match(conformance_corpus):
    engine_posts, _ = engine_data.load_dataset(conformance_corpus)
    engine_counts = {p.id: len(p.sentences()) for p in engine_posts}
    our_counts = {p.id: len(p.sentences) for p in read_dataset(conformance_corpus)}
    assert our_counts == engine_counts


def test_wrap_bound(conformance_corpus):
    for post in read_dataset(conformance_corpus):
        assert all(1 <= len(s) <= 35 for s in post.sentences)


def test_hand_cases_match_engine():
    for text in ("It's NICE!!  ", "a . . b", "what?! ok", "A  B\tC. d"):
        assert ours.preprocess(text) == engine_text.preprocess(text)
        assert ours.split_sentences(ours.preprocess(text)) == engine_text.split_sentences(
            engine_text.preprocess(text)
        )
