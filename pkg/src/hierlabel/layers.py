"""Reusable building blocks: biLSTM, additive attention, convolutional
sentence block, and a dense output layer.

All layers are plain parameter containers.  Forward methods take a batch
of sequences plus a numpy mask marking a contiguous valid prefix per row;
masked steps never influence outputs or receive gradient.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import DegenerateLengthError, DimensionError, EmptySupportError
from .tensor import Tensor

KERNEL_SIZES = (2, 3, 4)


def glorot_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _check_prefix_mask(mask: np.ndarray):
    # valid steps must form a contiguous prefix per row
    diffs = np.diff(mask.astype(np.int8), axis=-1)
    if (diffs > 0).any():
        raise DimensionError("mask must mark a contiguous valid prefix")


class BiLstmLayer:
    """Standard LSTM (no peepholes) run in both directions.

    Gate layout along the 4H axis is [input, forget, candidate, output];
    the forget-gate bias starts at 1.0.  Output width is 2 * hidden_size.
    """

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        if input_size < 1 or hidden_size < 1:
            raise DimensionError("BiLstmLayer sizes must be positive")
        self.input_size = input_size
        self.hidden_size = hidden_size
        self._dirs = {}
        for direction in ("fw", "bw"):
            w = Tensor(glorot_uniform(rng, (input_size, 4 * hidden_size)), requires_grad=True)
            u = Tensor(glorot_uniform(rng, (hidden_size, 4 * hidden_size)), requires_grad=True)
            bias = np.zeros(4 * hidden_size)
            bias[hidden_size : 2 * hidden_size] = 1.0
            b = Tensor(bias, requires_grad=True)
            self._dirs[direction] = (w, u, b)

    @property
    def output_size(self) -> int:
        return 2 * self.hidden_size

    def parameters(self, prefix: str = "bilstm"):
        out = []
        for direction, (w, u, b) in self._dirs.items():
            out += [
                (f"{prefix}.{direction}.w", w),
                (f"{prefix}.{direction}.u", u),
                (f"{prefix}.{direction}.b", b),
            ]
        return out

    def _run_direction(self, steps, mask, direction):
        """steps: list of (N, D) tensors in time order; returns list of
        (N, H) hidden states for the same time order."""
        w, u, b = self._dirs[direction]
        h_dim = self.hidden_size
        n = steps[0].shape[0]
        dtype = w.data.dtype
        order = range(len(steps)) if direction == "fw" else range(len(steps) - 1, -1, -1)
        h = Tensor(np.zeros((n, h_dim), dtype=dtype))
        c = Tensor(np.zeros((n, h_dim), dtype=dtype))
        outputs = [None] * len(steps)
        for t in order:
            gates = T.add(T.add(T.matmul(steps[t], w), T.matmul(h, u)), b)
            i = T.sigmoid(T.slice_last(gates, 0, h_dim))
            f = T.sigmoid(T.slice_last(gates, h_dim, 2 * h_dim))
            g = T.tanh(T.slice_last(gates, 2 * h_dim, 3 * h_dim))
            o = T.sigmoid(T.slice_last(gates, 3 * h_dim, 4 * h_dim))
            c_new = T.add(T.mul(f, c), T.mul(i, g))
            h_new = T.mul(o, T.tanh(c_new))
            col = mask[:, t : t + 1]
            if col.all():
                h, c = h_new, c_new
            else:
                # rows past their valid prefix keep the previous state
                m = col.astype(dtype)
                keep = 1.0 - m
                h = T.add(T.mul(h_new, m), T.mul(h, keep))
                c = T.add(T.mul(c_new, m), T.mul(c, keep))
            outputs[t] = h
        return outputs

    def forward(self, seq: Tensor, mask: np.ndarray) -> Tensor:
        """seq: (N, T, D); mask: (N, T) contiguous-prefix.  -> (N, T, 2H),
        exactly zero at masked steps."""
        if seq.ndim != 3 or seq.shape[-1] != self.input_size:
            raise DimensionError(
                f"bilstm expects (N, T, {self.input_size}), got {seq.shape}"
            )
        mask = np.asarray(mask)
        if mask.shape != seq.shape[:2]:
            raise DimensionError(f"mask shape {mask.shape} != batch shape {seq.shape[:2]}")
        _check_prefix_mask(mask)
        lengths = mask.sum(axis=1).astype(int)
        t_eff = int(lengths.max())
        if t_eff == 0:
            raise DegenerateLengthError("bilstm over an empty valid prefix")
        steps = [T.take_time(seq, t) for t in range(t_eff)]
        fw = self._run_direction(steps, mask, "fw")
        bw = self._run_direction(steps, mask, "bw")
        both = [T.concat_last_axis([fw[t], bw[t]]) for t in range(t_eff)]
        out = T.stack_time(both)
        out = T.pad_time(out, seq.shape[1])
        return T.mul(out, mask[:, :, None].astype(out.data.dtype))

    def forward_single(self, seq: Tensor, mask: np.ndarray) -> Tensor:
        """Single sequence (T, D) -> (T, 2H)."""
        out = self.forward(T.reshape(seq, (1,) + tuple(seq.shape)), np.asarray(mask)[None, :])
        return T.reshape(out, out.shape[1:])


class AttentionLayer:
    """Additive attention: score each timestep against a learned context
    vector, softmax over valid steps, return the weighted state sum."""

    def __init__(self, input_size: int, attn_dim: int, rng: np.random.Generator):
        if input_size < 1 or attn_dim < 1:
            raise DimensionError("AttentionLayer sizes must be positive")
        self.input_size = input_size
        self.attn_dim = attn_dim
        self.w = Tensor(glorot_uniform(rng, (input_size, attn_dim)), requires_grad=True)
        self.b = Tensor(np.zeros(attn_dim), requires_grad=True)
        self.context = Tensor(glorot_uniform(rng, (attn_dim, 1)), requires_grad=True)

    def parameters(self, prefix: str = "attn"):
        return [
            (f"{prefix}.w", self.w),
            (f"{prefix}.b", self.b),
            (f"{prefix}.context", self.context),
        ]

    def forward(self, states: Tensor, mask: np.ndarray):
        """states: (N, T, h); mask: (N, T).  Returns (vec (N, h),
        weights (N, T)); weights are a probability vector over valid steps."""
        if states.ndim != 3 or states.shape[-1] != self.input_size:
            raise DimensionError(
                f"attention expects (N, T, {self.input_size}), got {states.shape}"
            )
        mask = np.asarray(mask)
        if not (mask != 0).any(axis=-1).all():
            raise EmptySupportError("attention over a fully masked sequence")
        n, t, _ = states.shape
        u = T.tanh(T.add(T.matmul(states, self.w), self.b))
        scores = T.reshape(T.matmul(u, self.context), (n, t))
        weights = T.softmax(scores, mask=mask)
        vec = T.tsum(T.mul(states, T.reshape(weights, (n, t, 1))), axis=1)
        return vec, weights

    def forward_single(self, states: Tensor, mask: np.ndarray):
        vec, weights = self.forward(
            T.reshape(states, (1,) + tuple(states.shape)), np.asarray(mask)[None, :]
        )
        return T.reshape(vec, vec.shape[1:]), T.reshape(weights, weights.shape[1:])


class ConvBlock:
    """Bigram/trigram/4-gram convolutions with max-over-time pooling.

    Output width is 3 * filters_per_kernel.  A kernel size with no fully
    valid window contributes zeros for that row.
    """

    def __init__(self, input_size: int, filters_per_kernel: int, rng: np.random.Generator):
        if input_size < 1 or filters_per_kernel < 1:
            raise DimensionError("ConvBlock sizes must be positive")
        self.input_size = input_size
        self.filters_per_kernel = filters_per_kernel
        self.filters = {}
        self.biases = {}
        for k in KERNEL_SIZES:
            # Glorot with the full receptive field (k * D) as fan-in
            limit = np.sqrt(6.0 / (k * input_size + filters_per_kernel))
            self.filters[k] = Tensor(
                rng.uniform(-limit, limit, size=(k, input_size, filters_per_kernel)),
                requires_grad=True,
            )
            self.biases[k] = Tensor(np.zeros(filters_per_kernel), requires_grad=True)

    @property
    def output_size(self) -> int:
        return 3 * self.filters_per_kernel

    def parameters(self, prefix: str = "conv"):
        out = []
        for k in KERNEL_SIZES:
            out += [(f"{prefix}.k{k}.w", self.filters[k]), (f"{prefix}.k{k}.b", self.biases[k])]
        return out

    def forward(self, words: Tensor, mask: np.ndarray) -> Tensor:
        """words: (N, W, D); mask: (N, W) contiguous-prefix.  -> (N, 3F)."""
        if words.ndim != 3 or words.shape[-1] != self.input_size:
            raise DimensionError(
                f"conv block expects (N, W, {self.input_size}), got {words.shape}"
            )
        mask = np.asarray(mask)
        if words.shape[1] < max(KERNEL_SIZES):
            raise DegenerateLengthError(
                f"conv block needs at least {max(KERNEL_SIZES)} word positions, "
                f"got {words.shape[1]}"
            )
        lengths = mask.sum(axis=1)
        pooled = []
        for k in KERNEL_SIZES:
            fmap = T.add(T.conv1d_batch(words, self.filters[k], mask), self.biases[k])
            m = T.max_axis(fmap, 1)
            # rows without a single valid window contribute zeros
            has_window = (lengths >= k).astype(m.data.dtype)[:, None]
            pooled.append(T.mul(m, has_window))
        return T.concat_last_axis(pooled)

    def forward_single(self, words: Tensor, mask: np.ndarray) -> Tensor:
        out = self.forward(
            T.reshape(words, (1,) + tuple(words.shape)), np.asarray(mask)[None, :]
        )
        return T.reshape(out, out.shape[1:])


def conv_sentence_vec(block: ConvBlock, words: Tensor, mask: np.ndarray) -> Tensor:
    """Sentence vector from one sentence's words: (W, D) -> (3F,)."""
    return block.forward_single(words, mask)


class DenseLayer:
    """Fully connected y = x W + b."""

    def __init__(self, input_size: int, output_size: int, rng: np.random.Generator):
        self.w = Tensor(glorot_uniform(rng, (input_size, output_size)), requires_grad=True)
        self.b = Tensor(np.zeros(output_size), requires_grad=True)

    def parameters(self, prefix: str = "dense"):
        return [(f"{prefix}.w", self.w), (f"{prefix}.b", self.b)]

    def forward(self, x: Tensor) -> Tensor:
        return T.add(T.matmul(x, self.w), self.b)
