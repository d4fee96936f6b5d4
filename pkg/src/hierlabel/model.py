"""Assemble the full two-level model from an architecture expression and
run it over batches.

Word level: each wl group runs biLSTM+attention over its concatenated word
embeddings, each wc group runs convolution+max-pooling; every group yields
one vector per sentence.  Sentence level: group outputs and encoder
sentence embeddings are concatenated per sentence, passed through a
post-level biLSTM+attention, and a dense head maps the post vector to
per-class probabilities (sigmoid head for the binary-cross-entropy loss,
softmax otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as T
from .arch import ArchExpr, Group, parse_arch
from .data import PostBatch
from .errors import ConfigError, DimensionError, ExplainError
from .layers import AttentionLayer, BiLstmLayer, ConvBlock, DenseLayer
from .tensor import Tensor
from .text import MAX_SENTENCE_WORDS

LOSS_KINDS = ("ebce", "nce", "lp_ce")


@dataclass
class ModelConfig:
    lstm_dim: int = 100
    attn_dim: int = 200
    filters_per_kernel: int = 100
    max_sentences: int = 8
    max_words: int = MAX_SENTENCE_WORDS
    dropout: float = 0.25
    loss: str = "ebce"
    seed: int = 13

    def validate(self):
        for name in ("lstm_dim", "attn_dim", "filters_per_kernel", "max_sentences", "max_words"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.max_words > MAX_SENTENCE_WORDS:
            raise ConfigError(
                f"max_words {self.max_words} exceeds the splitter bound "
                f"{MAX_SENTENCE_WORDS}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        return self


@dataclass
class AttentionTrace:
    """Detached attention weights from one forward pass."""

    word_weights: list  # [(group label, (B, S, W) array)] for wl groups only
    sent_weights: np.ndarray  # (B, S)


@dataclass
class Explanation:
    post_id: str
    # one entry per valid sentence: list of (word, score), best first
    top_words: list
    # sentence indices ranked by sentence-level attention, best first
    sentence_ranking: list


class _WordGroup:
    def __init__(self, group: Group, input_dim: int, cfg: ModelConfig, rng):
        self.group = group
        self.label = group.render()
        self.input_dim = input_dim
        if group.kind == "wl":
            self.lstm = BiLstmLayer(input_dim, cfg.lstm_dim, rng)
            self.attn = AttentionLayer(self.lstm.output_size, cfg.attn_dim, rng)
            self.output_dim = self.lstm.output_size
        else:
            self.conv = ConvBlock(input_dim, cfg.filters_per_kernel, rng)
            self.output_dim = self.conv.output_size

    def parameters(self, prefix):
        if self.group.kind == "wl":
            return self.lstm.parameters(f"{prefix}.lstm") + self.attn.parameters(f"{prefix}.attn")
        return self.conv.parameters(f"{prefix}.conv")


class Model:
    """Resolved layers for one architecture expression."""

    def __init__(self, arch: ArchExpr, cfg: ModelConfig, dims: dict, n_outputs: int):
        cfg.validate()
        if n_outputs < 1:
            raise ConfigError("model needs at least one output class")
        self.arch = arch
        self.cfg = cfg
        self.dims = dict(dims)
        self.n_outputs = n_outputs
        rng = np.random.default_rng(cfg.seed)

        missing = [s for s in arch.word_sources + arch.sentence_sources if s not in dims]
        if missing:
            raise ConfigError(f"no declared dimension for sources: {missing}")
        if any(g.kind == "wc" for g in arch.groups) and cfg.max_words < 4:
            raise ConfigError("wc groups need max_words >= 4")

        self.word_groups = []
        for group in arch.groups:
            width = sum(dims[s] for s in group.sources)
            if width < 1:
                raise ConfigError(f"zero-width concatenation in {group.render()}")
            self.word_groups.append(_WordGroup(group, width, cfg, rng))

        self.sentence_width = sum(g.output_dim for g in self.word_groups) + sum(
            dims[s] for s in arch.sentence_sources
        )
        if self.sentence_width < 1:
            raise ConfigError("sentence-level concatenation has zero width")
        self.post_lstm = BiLstmLayer(self.sentence_width, cfg.lstm_dim, rng)
        self.post_attn = AttentionLayer(self.post_lstm.output_size, cfg.attn_dim, rng)
        self.head = DenseLayer(self.post_lstm.output_size, n_outputs, rng)
        self._dropout_rng = np.random.default_rng(cfg.seed + 1)

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, group in enumerate(self.word_groups):
            out += group.parameters(f"group{i}")
        out += self.post_lstm.parameters("post.lstm")
        out += self.post_attn.parameters("post.attn")
        out += self.head.parameters("head")
        return out

    def reseed_dropout(self, seed: int):
        self._dropout_rng = np.random.default_rng(seed)

    def cast_parameters(self, dtype):
        for _, p in self.parameters():
            p.data = p.data.astype(dtype)
            p.grad = np.zeros_like(p.data)

    @property
    def dtype(self):
        return self.parameters()[0][1].data.dtype

    # -- forward ------------------------------------------------------------

    def _group_input(self, batch: PostBatch, group: Group, train: bool):
        arrays = []
        for src in group.sources:
            if src not in batch.word_arrays:
                raise DimensionError(f"batch lacks word source {src!r}")
            arrays.append(batch.word_arrays[src])
        data = np.concatenate(arrays, axis=-1).astype(self.dtype)
        x = Tensor(data)
        x.data = data  # keep the model's dtype regardless of the default
        return T.dropout(x, self.cfg.dropout, train, self._dropout_rng)

    def forward(self, batch: PostBatch, train: bool = False):
        """Returns (probs tensor (B, n_outputs), AttentionTrace)."""
        cfg = self.cfg
        b, s, w = batch.word_mask.shape
        if (s, w) != (cfg.max_sentences, cfg.max_words):
            raise DimensionError(
                f"batch padded to (S={s}, W={w}), model expects "
                f"(S={cfg.max_sentences}, W={cfg.max_words})"
            )
        sent_mask = batch.sent_mask
        word_mask_flat = batch.word_mask.reshape(b * s, w).copy()
        # padded sentences get one dummy-valid word so masked reductions
        # stay well-defined; their outputs are zeroed below
        empty_rows = word_mask_flat.sum(axis=1) == 0
        word_mask_flat[empty_rows, 0] = 1.0
        sent_gate = sent_mask.reshape(b * s, 1).astype(self.dtype)

        sentence_parts = []
        word_traces = []
        for group in self.word_groups:
            x = self._group_input(batch, group.group, train)
            expected = (b, s, w, group.input_dim)
            if tuple(x.shape) != expected:
                raise DimensionError(f"group input {x.shape} != expected {expected}")
            flat = T.reshape(x, (b * s, w, group.input_dim))
            if group.group.kind == "wl":
                states = group.lstm.forward(flat, word_mask_flat)
                vec, weights = group.attn.forward(states, word_mask_flat)
                word_traces.append(
                    (
                        group.label,
                        (weights.data * batch.word_mask.reshape(b * s, w)).reshape(b, s, w),
                    )
                )
            else:
                vec = group.conv.forward(flat, batch.word_mask.reshape(b * s, w))
            vec = T.mul(vec, sent_gate)  # zero padded sentences
            assert vec.shape == (b * s, group.output_dim)
            sentence_parts.append(T.reshape(vec, (b, s, group.output_dim)))

        for src in self.arch.sentence_sources:
            if src not in batch.sent_arrays:
                raise DimensionError(f"batch lacks sentence source {src!r}")
            arr = batch.sent_arrays[src].astype(self.dtype)
            if arr.shape != (b, s, self.dims[src]):
                raise DimensionError(
                    f"sentence source {src!r} has shape {arr.shape}, expected "
                    f"{(b, s, self.dims[src])}"
                )
            part = Tensor(arr)
            part.data = arr
            part = T.dropout(part, cfg.dropout, train, self._dropout_rng)
            # padded sentences carry no encoder signal
            sentence_parts.append(T.mul(part, sent_mask[:, :, None].astype(self.dtype)))

        sentences = (
            sentence_parts[0]
            if len(sentence_parts) == 1
            else T.concat_last_axis(sentence_parts)
        )
        assert sentences.shape == (b, s, self.sentence_width)

        states = self.post_lstm.forward(sentences, sent_mask)
        post_vec, sent_weights = self.post_attn.forward(states, sent_mask)
        post_vec = T.dropout(post_vec, cfg.dropout, train, self._dropout_rng)
        logits = self.head.forward(post_vec)
        if cfg.loss == "ebce":
            probs = T.sigmoid(logits)
        else:
            probs = T.softmax(logits)
        trace = AttentionTrace(word_traces, sent_weights.data.copy())
        return probs, trace


def build(arch: ArchExpr | str, cfg: ModelConfig, dims: dict, n_outputs: int) -> Model:
    if isinstance(arch, str):
        arch = parse_arch(arch)
    return Model(arch, cfg, dims, n_outputs)


def explain(trace: AttentionTrace, batch: PostBatch, k: int = 2) -> list[Explanation]:
    """Combine word-level attention across wl groups by element-wise max,
    then report the top-k valid words per sentence and the post's sentences
    ranked by sentence-level attention."""
    if not trace.word_weights:
        raise ExplainError("model has no wl group; word-level attention unavailable")
    combined = trace.word_weights[0][1]
    for _, weights in trace.word_weights[1:]:
        combined = np.maximum(combined, weights)
    out = []
    for i, post_id in enumerate(batch.ids):
        n_sent = len(batch.tokens[i])
        per_sentence = []
        for s in range(n_sent):
            words = batch.tokens[i][s]
            scores = combined[i, s, : len(words)]
            order = np.argsort(-scores, kind="stable")[: min(k, len(words))]
            per_sentence.append([(words[j], float(scores[j])) for j in order])
        ranking = np.argsort(-trace.sent_weights[i, :n_sent], kind="stable").tolist()
        out.append(Explanation(post_id, per_sentence, ranking))
    return out
