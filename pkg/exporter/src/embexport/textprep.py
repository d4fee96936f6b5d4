"""Text normalization and sentence splitting, matching the engine's
documented rules byte for byte.

Rules: lower-case; keep only letters, digits, whitespace, the sentence
marks ``. ! ?`` and apostrophes; collapse whitespace that precedes a
sentence mark; collapse runs of sentence marks to their first mark;
collapse whitespace runs to single spaces; strip.  Sentences split on the
three marks, tokenize on whitespace, and hard-wrap at 35 words.

Deliberately reimplemented here (not imported from the engine) so the
exporter stands alone; the test suite pins parity against the engine on a
conformance corpus.
"""

from __future__ import annotations

import re

MAX_SENTENCE_WORDS = 35

_DROP_RE = re.compile(r"[^0-9a-z\s.!?']+")
_SPACE_BEFORE_PUNCT_RE = re.compile(r"\s+([.!?])")
_PUNCT_RUN_RE = re.compile(r"([.!?])[.!?]+")
_WS_RE = re.compile(r"\s+")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]")


class EmptyTextError(ValueError):
    pass


def preprocess(text: str) -> str:
    out = text.lower()
    out = _DROP_RE.sub(" ", out)
    out = _SPACE_BEFORE_PUNCT_RE.sub(r"\1", out)
    out = _PUNCT_RUN_RE.sub(r"\1", out)
    out = _WS_RE.sub(" ", out)
    out = out.strip()
    if not out or not re.search(r"[0-9a-z]", out):
        raise EmptyTextError(f"text empty after preprocessing: {text!r}")
    return out


def split_sentences(text: str) -> list[list[str]]:
    sentences = []
    for chunk in _SENTENCE_SPLIT_RE.split(text):
        words = chunk.split()
        if not words:
            continue
        for start in range(0, len(words), MAX_SENTENCE_WORDS):
            sentences.append(words[start : start + MAX_SENTENCE_WORDS])
    return sentences


def sentences_of(raw_text: str) -> list[list[str]]:
    return split_sentences(preprocess(raw_text))
