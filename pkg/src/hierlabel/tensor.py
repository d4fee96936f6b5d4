"""Dense tensors with reverse-mode automatic differentiation.

Values are stored row-major as numpy arrays, float32 by default.  A 64-bit
shadow mode (:func:`use_dtype`) exists so gradients can be verified against
central finite differences without float32 round-off drowning the signal.

Each operation records its inputs and a backward closure on the produced
tensor; :func:`backward` replays the recorded graph in reverse topological
order.  Masked-out entries never receive gradient.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import (
    DegenerateLengthError,
    DimensionError,
    EmptySupportError,
    RankError,
)

# Finite stand-in for -inf: keeps every forward value finite while still
# losing any max-pool comparison against real data.
NEG_SENTINEL = -1e30

_default_dtype = np.float32


def default_dtype():
    return _default_dtype


@contextlib.contextmanager
def use_dtype(dtype):
    """Temporarily switch the storage dtype for newly created tensors."""
    global _default_dtype
    previous = _default_dtype
    _default_dtype = np.dtype(dtype).type
    try:
        yield
    finally:
        _default_dtype = previous


class Tensor:
    """A numpy array plus the bookkeeping needed for reverse-mode autodiff."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=_default_dtype)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self._parents = ()
        self._backward = None
        self.name = name

    @classmethod
    def _from_op(cls, data, parents, backward):
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = any(p.requires_grad or p._parents for p in parents)
        out.grad = None
        out._parents = tuple(parents) if out.requires_grad else ()
        out._backward = backward if out.requires_grad else None
        out.name = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def zero_grad(self):
        if self.grad is not None:
            self.grad[...] = 0.0
        elif self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def detach(self):
        return Tensor(self.data.copy())

    def __repr__(self):
        flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"


def as_tensor(x):
    """Wrap plain arrays/scalars as constant (untracked) tensors."""
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _accum(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient down to ``shape``, undoing numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError:
        raise DimensionError(f"add: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(g, b.shape))

    return Tensor._from_op(data, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data - b.data
    except ValueError:
        raise DimensionError(f"sub: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        _accum(a, _unbroadcast(g, a.shape))
        _accum(b, _unbroadcast(-g, b.shape))

    return Tensor._from_op(data, (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError:
        raise DimensionError(f"mul: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.shape))
        _accum(b, _unbroadcast(g * a.data, b.shape))

    return Tensor._from_op(data, (a, b), backward)


def scale(x, s: float):
    x = as_tensor(x)
    s = float(s)

    def backward(g):
        _accum(x, g * s)

    return Tensor._from_op(x.data * s, (x,), backward)


def tanh(x):
    x = as_tensor(x)
    data = np.tanh(x.data)

    def backward(g):
        _accum(x, g * (1.0 - data * data))

    return Tensor._from_op(data, (x,), backward)


def sigmoid(x):
    x = as_tensor(x)
    # Branch on sign so exp never overflows.
    z = x.data
    pos = z >= 0
    data = np.empty_like(z)
    data[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    data[~pos] = ez / (1.0 + ez)

    def backward(g):
        _accum(x, g * data * (1.0 - data))

    return Tensor._from_op(data, (x,), backward)


def log(x):
    x = as_tensor(x)
    data = np.log(x.data)

    def backward(g):
        _accum(x, g / x.data)

    return Tensor._from_op(data, (x,), backward)


def clamp(x, lo: float, hi: float):
    """Clip values to [lo, hi]; gradient is zero where clipping bit."""
    x = as_tensor(x)
    data = np.clip(x.data, lo, hi)
    passthrough = (x.data >= lo) & (x.data <= hi)

    def backward(g):
        _accum(x, g * passthrough)

    return Tensor._from_op(data, (x,), backward)


def dropout(x, rate: float, train: bool, rng: np.random.Generator):
    """Inverted dropout: scale survivors by 1/(1-rate) at train time,
    identity at inference."""
    x = as_tensor(x)
    if not train or rate == 0.0:
        return x
    if not 0.0 <= rate < 1.0:
        raise DimensionError(f"dropout rate must be in [0, 1), got {rate}")
    keep = (rng.random(x.shape) >= rate).astype(x.data.dtype)
    keep /= 1.0 - rate
    return mul(x, Tensor(keep))


def concat_last_axis(tensors):
    """Concatenate along the final axis; gradients split back."""
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError("concat_last_axis of zero tensors")
    lead = tensors[0].shape[:-1]
    for t in tensors[1:]:
        if t.shape[:-1] != lead:
            raise DimensionError(
                f"concat_last_axis: leading shapes differ "
                f"({tensors[0].shape} vs {t.shape})"
            )
    data = np.concatenate([t.data for t in tensors], axis=-1)
    widths = [t.shape[-1] for t in tensors]

    def backward(g):
        start = 0
        for t, w in zip(tensors, widths):
            _accum(t, g[..., start : start + w])
            start += w

    return Tensor._from_op(data, tensors, backward)


# ---------------------------------------------------------------------------
# linear algebra


def matmul(a, b):
    """a has shape (..., k); b must be a (k, n) matrix.  Gradients for b sum
    over all leading axes of a."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise DimensionError(f"matmul: incompatible shapes {a.shape} x {b.shape}")
    data = a.data @ b.data

    def backward(g):
        _accum(a, g @ b.data.T)
        k, n = b.shape
        _accum(b, a.data.reshape(-1, k).T @ g.reshape(-1, n))

    return Tensor._from_op(data, (a, b), backward)


# ---------------------------------------------------------------------------
# reductions and shape plumbing


def tsum(x, axis=None):
    x = as_tensor(x)
    data = x.data.sum(axis=axis)

    def backward(g):
        if axis is None:
            _accum(x, np.broadcast_to(g, x.shape).copy())
        else:
            _accum(x, np.broadcast_to(np.expand_dims(g, axis), x.shape).copy())

    return Tensor._from_op(np.asarray(data), (x,), backward)


def tmean(x):
    x = as_tensor(x)
    return scale(tsum(x), 1.0 / x.size)


def max_axis(x, axis: int):
    """Maximum along one axis; gradient flows to the first argmax only."""
    x = as_tensor(x)
    if x.shape[axis] == 0:
        raise DegenerateLengthError("max over an empty axis")
    data = x.data.max(axis=axis)
    idx = np.expand_dims(x.data.argmax(axis=axis), axis)

    def backward(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, idx, np.expand_dims(g, axis), axis)
        _accum(x, gx)

    return Tensor._from_op(data, (x,), backward)


def max_over_time(featmap):
    """Per-filter maximum over the leading (time) axis of a [T, F] map."""
    featmap = as_tensor(featmap)
    if featmap.ndim != 2:
        raise RankError(f"max_over_time expects a 2-d map, got {featmap.shape}")
    if featmap.shape[0] == 0:
        raise DegenerateLengthError("max_over_time over zero timesteps")
    return max_axis(featmap, 0)


def reshape(x, shape):
    x = as_tensor(x)
    data = x.data.reshape(shape)

    def backward(g):
        _accum(x, g.reshape(x.shape))

    return Tensor._from_op(data, (x,), backward)


def slice_last(x, start: int, stop: int):
    """Contiguous slice along the final axis."""
    x = as_tensor(x)
    data = x.data[..., start:stop]

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[..., start:stop] = g
        _accum(x, gx)

    return Tensor._from_op(data, (x,), backward)


def take_time(x, t: int):
    """Select step ``t`` from a (N, T, ...) tensor -> (N, ...)."""
    x = as_tensor(x)
    data = x.data[:, t]

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[:, t] = g
        _accum(x, gx)

    return Tensor._from_op(data, (x,), backward)


def slice_time(x, start: int, stop: int):
    """Contiguous slice along axis 1 of a (N, T, ...) tensor."""
    x = as_tensor(x)
    data = x.data[:, start:stop]

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[:, start:stop] = g
        _accum(x, gx)

    return Tensor._from_op(data, (x,), backward)


def stack_time(tensors):
    """Stack T tensors of shape (N, ...) into (N, T, ...)."""
    tensors = [as_tensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=1)

    def backward(g):
        for t_idx, t in enumerate(tensors):
            _accum(t, g[:, t_idx])

    return Tensor._from_op(data, tensors, backward)


def pad_time(x, total: int):
    """Zero-pad axis 1 of a (N, T, ...) tensor up to ``total`` steps."""
    x = as_tensor(x)
    t = x.shape[1]
    if t == total:
        return x
    if t > total:
        raise DimensionError(f"pad_time: have {t} steps, asked for {total}")
    pad_shape = (x.shape[0], total - t) + x.shape[2:]
    data = np.concatenate([x.data, np.zeros(pad_shape, dtype=x.data.dtype)], axis=1)

    def backward(g):
        _accum(x, g[:, :t])

    return Tensor._from_op(data, (x,), backward)


# ---------------------------------------------------------------------------
# softmax and convolution


def softmax(logits, mask=None):
    """Numerically stable softmax over the final axis.

    ``mask`` (numpy, 1=valid) hard-excludes entries: they come out exactly 0
    and receive no gradient.  A row with no valid entry is an error.
    """
    logits = as_tensor(logits)
    z = logits.data
    if mask is not None:
        mask = np.asarray(mask)
        if mask.shape != z.shape:
            raise DimensionError(
                f"softmax mask shape {mask.shape} != logits shape {z.shape}"
            )
        valid = mask != 0
        if not valid.any(axis=-1).all():
            raise EmptySupportError("softmax over a fully masked axis")
        z = np.where(valid, z, NEG_SENTINEL)
    zmax = z.max(axis=-1, keepdims=True)
    e = np.exp(z - zmax)
    if mask is not None:
        e = e * valid
    p = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * p).sum(axis=-1, keepdims=True)
        _accum(logits, p * (g - dot))

    return Tensor._from_op(p, (logits,), backward)


def _window_valid(mask: np.ndarray, k: int) -> np.ndarray:
    """Valid windows of width k given a (..., W) contiguous-prefix mask."""
    w = mask.shape[-1]
    lengths = mask.sum(axis=-1, keepdims=True)
    starts = np.arange(w - k + 1, dtype=lengths.dtype)
    return starts + k <= lengths


def conv1d_batch(words, filters, mask):
    """Valid (no padding) 1-d convolution along the word axis.

    words: (N, W, D) tensor; filters: (k, D, F) tensor; mask: (N, W) numpy
    contiguous-prefix mask.  Output (N, W-k+1, F); windows overlapping
    masked-out words are set to the -inf sentinel and get no gradient.
    """
    words, filters = as_tensor(words), as_tensor(filters)
    if words.ndim != 3 or filters.ndim != 3:
        raise DimensionError(
            f"conv1d: expected (N,W,D) x (k,D,F), got {words.shape} x {filters.shape}"
        )
    k, d, f = filters.shape
    n, w, d2 = words.shape
    if d2 != d:
        raise DimensionError(f"conv1d: word dim {d2} != filter dim {d}")
    if w < k:
        raise DegenerateLengthError(f"conv1d: {w} words < kernel size {k}")
    t_out = w - k + 1
    data = np.zeros((n, t_out, f), dtype=words.data.dtype)
    for j in range(k):
        data += words.data[:, j : j + t_out, :] @ filters.data[j]
    valid = _window_valid(np.asarray(mask), k)  # (N, t_out)
    data = np.where(valid[:, :, None], data, NEG_SENTINEL).astype(words.data.dtype)

    def backward(g):
        g = g * valid[:, :, None]
        gw = np.zeros_like(words.data)
        gf = np.zeros_like(filters.data)
        for j in range(k):
            gw[:, j : j + t_out, :] += g @ filters.data[j].T
            seg = words.data[:, j : j + t_out, :].reshape(-1, d)
            gf[j] = seg.T @ g.reshape(-1, f)
        _accum(words, gw)
        _accum(filters, gf)

    return Tensor._from_op(data, (words, filters), backward)


def conv1d(words, filters, mask):
    """Single-sentence convolution: (W, D) x (k, D, F) -> (W-k+1, F)."""
    words = as_tensor(words)
    if words.ndim != 2:
        raise DimensionError(f"conv1d expects (W, D) words, got {words.shape}")
    mask = np.asarray(mask).reshape(1, -1)
    out = conv1d_batch(reshape(words, (1,) + words.shape), filters, mask)
    return reshape(out, out.shape[1:])


# ---------------------------------------------------------------------------
# backward pass


def backward(loss: Tensor):
    """Reverse-topological gradient accumulation from a scalar loss."""
    if loss.size != 1:
        raise RankError(f"backward needs a scalar loss, got shape {loss.shape}")

    # Iterative DFS: recursion would overflow on long LSTM chains.
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))

    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
