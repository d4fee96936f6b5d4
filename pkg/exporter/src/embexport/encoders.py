"""Encoder backends.

``stub:<dim>`` is a deterministic hash-seeded encoder used for tests and
pipeline dry-runs.  ``hf:<path-or-name>`` wraps a transformers checkpoint
(mean-pooled last hidden state for sentences, per-occurrence token vectors
for words); transformers/torch are imported lazily so the stub path has no
heavy dependencies.
"""

from __future__ import annotations

import hashlib

import numpy as np


class EncoderError(ValueError):
    pass


def _hash_rng(*parts: str) -> np.random.Generator:
    digest = hashlib.blake2b("\x1f".join(parts).encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


class StubEncoder:
    """Deterministic sentence/word encoder: every string hashes to a fixed
    pseudo-random vector, and occurrence vectors mix in a little context so
    per-type averaging is exercised."""

    def __init__(self, dim: int):
        if dim < 1:
            raise EncoderError("stub dim must be positive")
        self.dim = dim

    def _base(self, key: str) -> np.ndarray:
        return _hash_rng("stub", key).standard_normal(self.dim).astype(np.float32)

    def encode_sentence(self, words) -> np.ndarray:
        if not words:
            raise EncoderError("cannot encode an empty sentence")
        return np.mean([self._base(w) for w in words], axis=0).astype(np.float32)

    def encode_word_occurrence(self, words, index: int) -> np.ndarray:
        token = words[index]
        vec = self._base(token)
        neighbors = [words[i] for i in (index - 1, index + 1) if 0 <= i < len(words)]
        if neighbors:
            vec = vec + 0.25 * np.mean([self._base(n) for n in neighbors], axis=0)
        return vec.astype(np.float32)


class HfEncoder:
    """transformers checkpoint wrapper; requires the ``hf`` extra."""

    def __init__(self, model_path: str):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(
                "the hf: backend needs the 'hf' extra (transformers + torch)"
            ) from exc
        self._torch = __import__("torch")
        self.tokenizer = AutoTokenizer.from_pretrained(model_path)
        self.model = AutoModel.from_pretrained(model_path)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def _hidden_states(self, text: str):
        torch = self._torch
        with torch.no_grad():
            encoded = self.tokenizer(
                text, return_tensors="pt", truncation=True, max_length=128
            )
            out = self.model(**encoded)
        return encoded, out.last_hidden_state[0]

    def encode_sentence(self, words) -> np.ndarray:
        if not words:
            raise EncoderError("cannot encode an empty sentence")
        _, hidden = self._hidden_states(" ".join(words))
        return hidden.mean(dim=0).numpy().astype(np.float32)

    def encode_word_occurrence(self, words, index: int) -> np.ndarray:
        encoded, hidden = self._hidden_states(" ".join(words))
        span = encoded.word_to_tokens(0, index)
        if span is None:  # token vanished under the subword tokenizer
            return hidden.mean(dim=0).numpy().astype(np.float32)
        return hidden[span.start : span.end].mean(dim=0).numpy().astype(np.float32)


def resolve_encoder(spec: str):
    """``stub:<dim>`` or ``hf:<checkpoint>``."""
    kind, _, arg = spec.partition(":")
    if kind == "stub":
        try:
            return StubEncoder(int(arg))
        except ValueError as exc:
            raise EncoderError(f"bad stub dim {arg!r}") from exc
    if kind == "hf":
        if not arg:
            raise EncoderError("hf: needs a checkpoint path or model name")
        return HfEncoder(arg)
    raise EncoderError(f"unknown encoder backend {spec!r} (use stub:<dim> or hf:<path>)")
