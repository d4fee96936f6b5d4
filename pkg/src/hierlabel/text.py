"""Text normalization and sentence splitting.

The keep-set is fixed: letters, digits, whitespace, the sentence marks
``. ! ?`` and apostrophes.  Runs of sentence marks collapse to their first
mark, whitespace runs collapse to one space, and everything is lower-cased.
Sentences longer than MAX_SENTENCE_WORDS are hard-wrapped.
"""

from __future__ import annotations

import re

from .errors import EmptyPostError

MAX_SENTENCE_WORDS = 35

_DROP_RE = re.compile(r"[^0-9a-z\s.!?']+")
_PUNCT_RUN_RE = re.compile(r"([.!?])[.!?]+")
_SPACE_BEFORE_PUNCT_RE = re.compile(r"\s+([.!?])")
_WS_RE = re.compile(r"\s+")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]")


def preprocess(text: str) -> str:
    """Lower-case, drop characters outside the keep-set, collapse repeated
    sentence punctuation and whitespace.  Idempotent."""
    out = text.lower()
    out = _DROP_RE.sub(" ", out)
    out = _SPACE_BEFORE_PUNCT_RE.sub(r"\1", out)
    out = _PUNCT_RUN_RE.sub(r"\1", out)
    out = _WS_RE.sub(" ", out)
    out = out.strip()
    if not out or not re.search(r"[0-9a-z]", out):
        raise EmptyPostError(f"text empty after preprocessing: {text!r}")
    return out


def split_sentences(text: str) -> list[list[str]]:
    """Split preprocessed text on sentence punctuation, tokenize on
    whitespace, and wrap any sentence longer than MAX_SENTENCE_WORDS into
    consecutive chunks.  Empty sentences are dropped."""
    sentences = []
    for chunk in _SENTENCE_SPLIT_RE.split(text):
        words = chunk.split()
        if not words:
            continue
        for start in range(0, len(words), MAX_SENTENCE_WORDS):
            sentences.append(words[start : start + MAX_SENTENCE_WORDS])
    return sentences
