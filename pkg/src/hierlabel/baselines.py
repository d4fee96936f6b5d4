"""Problem-transformation baselines: Label Powerset and Binary Relevance
over a bundled logistic-regression learner, plus TF-IDF and
averaged-word-embedding featurizers.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import tensor as T
from .data import EmbeddingTable
from .errors import ConfigError, EmptyInputError, InvalidTargetError, MappingError
from .losses import cross_entropy_loss, ebce_loss
from .optim import Adam
from .tensor import Tensor
from .text import split_sentences

logger = logging.getLogger(__name__)

TFIDF_MAX_FEATURES = 10_000
WORD_NGRAM_RANGE = (1, 2)
CHAR_NGRAM_RANGE = (1, 5)


# ---------------------------------------------------------------------------
# label powerset


class PowersetMapping:
    """Bijection between observed label combinations and dense class ids,
    assigned in first-appearance order."""

    def __init__(self):
        self._by_set: dict[frozenset, int] = {}
        self._by_id: list[frozenset] = []

    def encode(self, labels) -> int:
        key = frozenset(labels)
        if key not in self._by_set:
            self._by_set[key] = len(self._by_id)
            self._by_id.append(key)
        return self._by_set[key]

    def lookup(self, labels) -> int:
        key = frozenset(labels)
        if key not in self._by_set:
            raise MappingError(f"label combination {sorted(key)} was never observed")
        return self._by_set[key]

    def decode(self, class_id: int) -> set:
        if not 0 <= class_id < len(self._by_id):
            raise MappingError(f"unknown powerset class id {class_id}")
        return set(self._by_id[class_id])

    def __len__(self) -> int:
        return len(self._by_id)


def lp_encode(labelsets):
    """Assign one dense class per distinct training label combination."""
    if not labelsets:
        raise EmptyInputError("no label sets to encode")
    mapping = PowersetMapping()
    for labels in labelsets:
        if not labels:
            raise InvalidTargetError("label powerset requires nonempty label sets")
    ids = np.array([mapping.encode(labels) for labels in labelsets], dtype=np.int64)
    return ids, mapping


def lp_decode(class_id: int, mapping: PowersetMapping) -> set:
    return mapping.decode(class_id)


# ---------------------------------------------------------------------------
# logistic regression on the engine's tape


@dataclass
class LogRegModel:
    weights: Tensor
    bias: Tensor
    mode: str  # "binary" or "multiclass"
    losses: list

    def probabilities(self, features: np.ndarray) -> np.ndarray:
        x = Tensor(np.asarray(features, dtype=np.float32))
        logits = T.add(T.matmul(x, self.weights), self.bias)
        if self.mode == "binary":
            return T.sigmoid(logits).data[:, 0]
        return T.softmax(logits).data

    def predict(self, features: np.ndarray) -> np.ndarray:
        probs = self.probabilities(features)
        if self.mode == "binary":
            return (probs >= 0.5).astype(np.int64)
        return probs.argmax(axis=1)


def _as_dense(features) -> np.ndarray:
    if sp.issparse(features):
        features = features.toarray()
    features = np.asarray(features, dtype=np.float64)
    if not np.isfinite(features).all():
        raise ConfigError("features must be finite")
    return features.astype(np.float32)


def logreg_train(
    features,
    targets,
    mode: str = "binary",
    *,
    class_weights: bool = True,
    lr: float = 0.05,
    epochs: int = 200,
    seed: int = 0,
) -> LogRegModel:
    """Full-batch Adam on a single dense layer with a sigmoid or softmax
    head.  Weights start at zero, so the first prediction is uniform.
    Inverse-frequency class weights counter imbalance when enabled."""
    x = _as_dense(features)
    targets = np.asarray(targets, dtype=np.int64)
    n, dim = x.shape
    if targets.shape != (n,):
        raise ConfigError(f"targets shape {targets.shape} != ({n},)")
    if mode not in ("binary", "multiclass"):
        raise ConfigError(f"unknown mode {mode!r}")

    if mode == "binary":
        n_out = 1
        y = targets[:, None].astype(np.int64)
        if class_weights:
            pos = max(int(y.sum()), 1)
            neg = max(n - int(y.sum()), 1)
            w = np.array([[n / (2.0 * neg), n / (2.0 * pos)]])
        else:
            w = np.ones((1, 2))
    else:
        classes = np.unique(targets)
        n_out = int(targets.max()) + 1
        if len(classes) < 2:
            raise InvalidTargetError("multiclass training needs at least 2 classes")
        if class_weights:
            counts = np.bincount(targets, minlength=n_out).astype(np.float64)
            cw = np.where(counts > 0, n / (len(classes) * np.maximum(counts, 1)), 0.0)
        else:
            cw = np.ones(n_out)

    weights = Tensor(np.zeros((dim, n_out), dtype=np.float32), requires_grad=True)
    bias = Tensor(np.zeros(n_out, dtype=np.float32), requires_grad=True)
    optimizer = Adam([("w", weights), ("b", bias)], lr=lr)
    xt = Tensor(x)
    losses = []
    for _ in range(epochs):
        optimizer.zero_grad()
        logits = T.add(T.matmul(xt, weights), bias)
        if mode == "binary":
            probs = T.sigmoid(logits)
            loss = ebce_loss(probs, y, w)
        else:
            probs = T.softmax(logits)
            if class_weights:
                coef = cw[targets][:, None].astype(np.float32)
                onehot = np.zeros((n, n_out), dtype=np.float32)
                onehot[np.arange(n), targets] = 1.0
                p = T.clamp(probs, 1e-7, 1.0 - 1e-7)
                loss = T.scale(T.tsum(T.mul(T.log(p), onehot * coef)), -1.0 / n)
            else:
                loss = cross_entropy_loss(probs, targets)
        T.backward(loss)
        optimizer.step()
        losses.append(loss.item())
    return LogRegModel(weights, bias, mode, losses)


# ---------------------------------------------------------------------------
# binary relevance


@dataclass
class _ConstantModel:
    value: int

    def predict(self, features) -> np.ndarray:
        return np.full(np.asarray(features).shape[0], self.value, dtype=np.int64)


class BinaryRelevanceModel:
    """One independent binary classifier per label; prediction is the union
    of per-label positive decisions."""

    def __init__(self, models):
        self.models = models

    def __len__(self):
        return len(self.models)

    def predict(self, features) -> list[set[int]]:
        features = _as_dense(features)
        votes = np.stack([m.predict(features) for m in self.models], axis=1)
        return [set(np.flatnonzero(row).tolist()) for row in votes]


def br_train(features, y: np.ndarray, **train_kwargs) -> BinaryRelevanceModel:
    """Train L independent binary models with imbalance weighting; constant
    labels degrade to constant predictors with a logged warning."""
    features = _as_dense(features)
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 2 or y.shape[0] != features.shape[0]:
        raise ConfigError(f"label matrix shape {y.shape} does not match features")
    models = []
    for j in range(y.shape[1]):
        column = y[:, j]
        if len(np.unique(column)) == 1:
            logger.warning(
                "label %d is constant (%d) in training; emitting that constant",
                j,
                int(column[0]),
            )
            models.append(_ConstantModel(int(column[0])))
        else:
            models.append(logreg_train(features, column, "binary", **train_kwargs))
    return BinaryRelevanceModel(models)


def br_predict(model: BinaryRelevanceModel, features) -> list[set[int]]:
    return model.predict(features)


# ---------------------------------------------------------------------------
# featurizers


def _word_ngrams(text: str):
    tokens = [w for sent in split_sentences(text) for w in sent]
    lo, hi = WORD_NGRAM_RANGE
    for size in range(lo, hi + 1):
        for i in range(len(tokens) - size + 1):
            yield " ".join(tokens[i : i + size])


def _char_ngrams(text: str):
    lo, hi = CHAR_NGRAM_RANGE
    for size in range(lo, hi + 1):
        for i in range(len(text) - size + 1):
            yield text[i : i + size]


_EXTRACTORS = {"word": _word_ngrams, "char": _char_ngrams}


@dataclass
class TfidfVocab:
    mode: str
    index: dict
    idf: np.ndarray

    def __len__(self):
        return len(self.index)


def build_tfidf_vocab(texts, mode: str = "word", max_features: int = TFIDF_MAX_FEATURES):
    """Select the ``max_features`` most frequent n-grams (ties break
    lexicographically) and compute smoothed idf values."""
    if mode not in _EXTRACTORS:
        raise ConfigError(f"tfidf mode must be word or char, got {mode!r}")
    if not texts:
        raise EmptyInputError("no texts")
    extract = _EXTRACTORS[mode]
    totals = Counter()
    doc_freq = Counter()
    for text in texts:
        grams = list(extract(text))
        totals.update(grams)
        doc_freq.update(set(grams))
    if not totals:
        raise ConfigError("no features could be extracted")
    chosen = sorted(totals, key=lambda g: (-totals[g], g))[:max_features]
    chosen.sort()
    index = {g: i for i, g in enumerate(chosen)}
    n = len(texts)
    idf = np.zeros(len(chosen))
    for g, i in index.items():
        idf[i] = np.log((1.0 + n) / (1.0 + doc_freq[g])) + 1.0
    return TfidfVocab(mode, index, idf)


def tfidf_featurize(texts, vocab: TfidfVocab) -> sp.csr_matrix:
    """Raw-count tf times smoothed idf, rows L2-normalized."""
    if len(vocab) == 0:
        raise ConfigError("empty tfidf vocabulary")
    extract = _EXTRACTORS[vocab.mode]
    rows, cols, vals = [], [], []
    for row, text in enumerate(texts):
        counts = Counter(g for g in extract(text) if g in vocab.index)
        if not counts:
            continue
        entries = [(vocab.index[g], c * vocab.idf[vocab.index[g]]) for g, c in counts.items()]
        norm = np.sqrt(sum(v * v for _, v in entries))
        for col, val in entries:
            rows.append(row)
            cols.append(col)
            vals.append(val / norm)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(texts), len(vocab)))


def avg_word_embedding(text: str, table: EmbeddingTable) -> np.ndarray:
    """Arithmetic mean of the word vectors of a preprocessed post;
    out-of-vocabulary words contribute zero vectors to the mean."""
    tokens = [w for sent in split_sentences(text) for w in sent]
    if not tokens:
        raise EmptyInputError("no tokens to average")
    acc = np.zeros(table.dim, dtype=np.float64)
    for token in tokens:
        acc += table.lookup(token)
    return (acc / len(tokens)).astype(np.float32)
