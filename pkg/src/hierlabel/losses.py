"""Multi-label training losses with class-imbalance weights, plus the two
prediction rules (sigmoid rounding and the per-sample max-gap cutoff).

Both losses consume probability tensors straight from the model head and
stay differentiable through the tape; weights and targets are plain numpy.
"""

from __future__ import annotations

import logging

import numpy as np

from . import tensor as T
from .errors import DimensionError, EmptyInputError, InvalidTargetError
from .tensor import Tensor

logger = logging.getLogger(__name__)

PROB_EPS = 1e-7  # probabilities are clamped to [eps, 1-eps] before any log


def validate_label_matrix(y: np.ndarray, require_positive: bool = True) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 2:
        raise DimensionError(f"label matrix must be 2-d, got shape {y.shape}")
    if y.size == 0:
        raise EmptyInputError("empty label matrix")
    if not np.isin(y, (0, 1)).all():
        raise InvalidTargetError("label matrix must be binary")
    if require_positive and (y.sum(axis=1) == 0).any():
        bad = int(np.flatnonzero(y.sum(axis=1) == 0)[0])
        raise InvalidTargetError(f"row {bad} has no positive label")
    return y.astype(np.float64)


def ebce_weights(y: np.ndarray) -> np.ndarray:
    """Per-label, per-value imbalance weights: w[j][v] = n / (2 * #{y_ij = v}).

    A label with zero members in one value class gets the n/2 clamp (the
    formula's denominator would be zero) and a logged warning.
    """
    y = validate_label_matrix(y, require_positive=False)
    n, n_labels = y.shape
    w = np.zeros((n_labels, 2))
    for v in (0, 1):
        counts = (y == v).sum(axis=0)
        empty = counts == 0
        if empty.any():
            logger.warning(
                "labels %s have no value-%d rows; clamping their weight to n/2",
                np.flatnonzero(empty).tolist(),
                v,
            )
        w[:, v] = n / (2.0 * np.maximum(counts, 1.0))
        w[empty, v] = n / 2.0
    return w


def ebce_loss(probs: Tensor, y: np.ndarray, weights: np.ndarray) -> Tensor:
    """Weighted mean of label-wise binary cross entropies."""
    y = validate_label_matrix(y, require_positive=False)
    if tuple(probs.shape) != y.shape:
        raise DimensionError(f"probs shape {probs.shape} != labels shape {y.shape}")
    weights = np.asarray(weights)
    if weights.shape != (y.shape[1], 2):
        raise DimensionError(f"weights shape {weights.shape} != (L, 2)")
    n, n_labels = y.shape
    dtype = probs.data.dtype
    coef_pos = (weights[:, 1][None, :] * y).astype(dtype)
    coef_neg = (weights[:, 0][None, :] * (1.0 - y)).astype(dtype)
    p = T.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)
    term = T.add(
        T.mul(T.log(p), coef_pos),
        T.mul(T.log(T.sub(1.0, p)), coef_neg),
    )
    return T.scale(T.tsum(term), -1.0 / (n * n_labels))


def nce_weights(y: np.ndarray) -> np.ndarray:
    """Imbalance-negating weights: w_c[j] = n / sum_i (y_ij / |y_i^+|).

    A label that never occurs gets weight n and a logged warning.
    """
    y = validate_label_matrix(y)
    n = y.shape[0]
    pos_counts = y.sum(axis=1, keepdims=True)
    shares = y / pos_counts
    # strictly sequential accumulation: bit-reproducible against a plain
    # row-by-row loop regardless of numpy's pairwise summation
    mass = np.zeros(y.shape[1])
    for row in shares:
        mass += row
    empty = mass == 0
    if empty.any():
        logger.warning(
            "labels %s never occur; setting their weight to n",
            np.flatnonzero(empty).tolist(),
        )
    w = n / np.where(empty, 1.0, mass)
    w[empty] = float(n)
    return w


def nce_loss(probs: Tensor, y: np.ndarray, weights: np.ndarray) -> Tensor:
    """Cross entropy over softmax outputs, normalized per sample by its
    positive-label count."""
    y = validate_label_matrix(y)
    if tuple(probs.shape) != y.shape:
        raise DimensionError(f"probs shape {probs.shape} != labels shape {y.shape}")
    weights = np.asarray(weights)
    if weights.shape != (y.shape[1],):
        raise DimensionError(f"weights shape {weights.shape} != (L,)")
    n = y.shape[0]
    pos_counts = y.sum(axis=1, keepdims=True)
    coef = (weights[None, :] * y / pos_counts).astype(probs.data.dtype)
    p = T.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)
    return T.scale(T.tsum(T.mul(T.log(p), coef)), -1.0 / n)


def cross_entropy_loss(probs: Tensor, class_ids: np.ndarray) -> Tensor:
    """Standard cross entropy over softmax outputs against integer targets
    (used by the label-powerset head)."""
    class_ids = np.asarray(class_ids)
    n, n_classes = probs.shape
    if class_ids.shape != (n,):
        raise DimensionError(f"targets shape {class_ids.shape} != ({n},)")
    if class_ids.min() < 0 or class_ids.max() >= n_classes:
        raise InvalidTargetError("class id out of range")
    onehot = np.zeros((n, n_classes), dtype=probs.data.dtype)
    onehot[np.arange(n), class_ids] = 1.0
    p = T.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)
    return T.scale(T.tsum(T.mul(T.log(p), onehot)), -1.0 / n)


def predict_sigmoid(probs: np.ndarray) -> set[int] | list[set[int]]:
    """Round a sigmoid probability vector: labels with p >= 0.5 are on
    (exact 0.5 rounds up).  The empty set is a legal prediction."""
    probs = np.asarray(probs)
    if probs.ndim == 1:
        return set(np.flatnonzero(probs >= 0.5).tolist())
    return [set(np.flatnonzero(row >= 0.5).tolist()) for row in probs]


def predict_maxgap(probs: np.ndarray) -> set[int] | list[set[int]]:
    """Adaptive cutoff: sort scores descendingly, find the largest gap
    between successive sorted scores, keep everything above it.

    Ties in the gap list resolve to the smallest cutoff; ties between
    scores keep the smaller original index first.  Always returns a
    nonempty set of at most L-1 labels (all L when L == 1).
    """
    probs = np.asarray(probs)
    if probs.ndim == 2:
        return [predict_maxgap(row) for row in probs]
    n_labels = probs.shape[0]
    if n_labels < 2:
        return {0} if n_labels == 1 else set()
    order = np.argsort(-probs, kind="stable")
    ranked = probs[order]
    gaps = ranked[:-1] - ranked[1:]
    m = int(np.argmax(gaps)) + 1  # first maximal gap -> smallest cutoff
    return set(order[:m].tolist())
