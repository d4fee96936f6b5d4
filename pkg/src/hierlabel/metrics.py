"""Multi-label evaluation metrics, the per-label-count breakdown, and
Cohen's kappa agreement utilities.

Example-based metrics average a per-row score over prediction/gold label
sets; label-based metrics aggregate binary decisions per label.  Rows where
both sets are empty score 1.0 (full credit).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, EmptyInputError

SMALL_GROUP = 10  # label-count groups below this row count are flagged


def _check_pairs(pred, gold):
    if len(pred) != len(gold):
        raise DimensionError(f"{len(pred)} predictions vs {len(gold)} gold rows")
    if len(pred) == 0:
        raise EmptyInputError("no rows to score")


def example_f1(pred, gold) -> float:
    """Mean over rows of the Dice overlap 2|P∩G| / (|P|+|G|)."""
    _check_pairs(pred, gold)
    total = 0.0
    for p, g in zip(pred, gold):
        p, g = set(p), set(g)
        if not p and not g:
            total += 1.0
        else:
            total += 2.0 * len(p & g) / (len(p) + len(g))
    return total / len(pred)


def example_accuracy(pred, gold) -> float:
    """Mean over rows of the Jaccard overlap |P∩G| / |P∪G|."""
    _check_pairs(pred, gold)
    total = 0.0
    for p, g in zip(pred, gold):
        p, g = set(p), set(g)
        if not p and not g:
            total += 1.0
        else:
            total += len(p & g) / len(p | g)
    return total / len(pred)


def _label_counts(pred, gold, labels):
    tp = {l: 0 for l in labels}
    fp = {l: 0 for l in labels}
    fn = {l: 0 for l in labels}
    for p, g in zip(pred, gold):
        for l in p:
            if l in g:
                tp[l] += 1
            else:
                fp[l] += 1
        for l in g:
            if l not in p:
                fn[l] += 1
    return tp, fp, fn


def _infer_labels(pred, gold):
    labels = set()
    for s in pred:
        labels |= set(s)
    for s in gold:
        labels |= set(s)
    return sorted(labels)


def label_f1(pred, gold, mode: str, labels=None) -> float:
    """Label-based F1.  macro: mean of per-label F1 (0 when a label has no
    predictions and no gold rows); micro: F1 over summed TP/FP/FN."""
    _check_pairs(pred, gold)
    if mode not in ("macro", "micro"):
        raise ValueError(f"mode must be macro or micro, got {mode!r}")
    if labels is None:
        labels = _infer_labels(pred, gold)
    tp, fp, fn = _label_counts(pred, gold, labels)
    if mode == "micro":
        t, p_, n_ = sum(tp.values()), sum(fp.values()), sum(fn.values())
        denom = 2 * t + p_ + n_
        return 2 * t / denom if denom else 0.0
    scores = []
    for l in labels:
        denom = 2 * tp[l] + fp[l] + fn[l]
        scores.append(2 * tp[l] / denom if denom else 0.0)
    return float(np.mean(scores)) if scores else 0.0


def per_label_scores(pred, gold, labels=None) -> dict:
    """Per-label precision/recall/F1/support."""
    _check_pairs(pred, gold)
    if labels is None:
        labels = _infer_labels(pred, gold)
    tp, fp, fn = _label_counts(pred, gold, labels)
    out = {}
    for l in labels:
        precision = tp[l] / (tp[l] + fp[l]) if tp[l] + fp[l] else 0.0
        recall = tp[l] / (tp[l] + fn[l]) if tp[l] + fn[l] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[l] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": tp[l] + fn[l],
        }
    return out


def breakdown_by_label_count(pred, gold, labels=None) -> dict:
    """Metrics recomputed per group of rows sharing a gold label count.

    Groups with fewer than SMALL_GROUP rows are flagged but still reported;
    counts that never occur are absent.
    """
    _check_pairs(pred, gold)
    groups: dict[int, list[int]] = {}
    for i, g in enumerate(gold):
        groups.setdefault(len(set(g)), []).append(i)
    out = {}
    for count in sorted(groups):
        idx = groups[count]
        p = [pred[i] for i in idx]
        g = [gold[i] for i in idx]
        out[count] = {
            "f_example": example_f1(p, g),
            "f_macro": label_f1(p, g, "macro", labels),
            "acc_example": example_accuracy(p, g),
            "f_micro": label_f1(p, g, "micro", labels),
            "rows": len(idx),
            "small_sample": len(idx) < SMALL_GROUP,
        }
    return out


@dataclass
class MetricsReport:
    f_example: float
    acc_example: float
    f_macro: float
    f_micro: float
    rows: int
    per_label: dict = field(default_factory=dict)
    by_label_count: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "f_example": self.f_example,
            "acc_example": self.acc_example,
            "f_macro": self.f_macro,
            "f_micro": self.f_micro,
        }

    def to_text(self) -> str:
        """Line-oriented key=value rendering."""
        lines = [f"rows = {self.rows}"]
        for key, value in self.summary().items():
            lines.append(f"{key} = {value:.4f}")
        for label, scores in self.per_label.items():
            lines.append(
                f"label[{label}] = p:{scores['precision']:.4f} "
                f"r:{scores['recall']:.4f} f1:{scores['f1']:.4f} "
                f"support:{scores['support']}"
            )
        for count, scores in self.by_label_count.items():
            flag = " (small sample)" if scores["small_sample"] else ""
            lines.append(
                f"by_label_count[{count}] = f_example:{scores['f_example']:.4f} "
                f"f_macro:{scores['f_macro']:.4f} acc_example:{scores['acc_example']:.4f} "
                f"f_micro:{scores['f_micro']:.4f} rows:{scores['rows']}{flag}"
            )
        return "\n".join(lines)

    def to_json(self) -> str:
        payload = {
            "rows": self.rows,
            **self.summary(),
            "per_label": self.per_label,
            "by_label_count": {str(k): v for k, v in self.by_label_count.items()},
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def compute_report(pred, gold, labels=None) -> MetricsReport:
    _check_pairs(pred, gold)
    return MetricsReport(
        f_example=example_f1(pred, gold),
        acc_example=example_accuracy(pred, gold),
        f_macro=label_f1(pred, gold, "macro", labels),
        f_micro=label_f1(pred, gold, "micro", labels),
        rows=len(pred),
        per_label=per_label_scores(pred, gold, labels),
        by_label_count=breakdown_by_label_count(pred, gold, labels),
    )


def cohens_kappa(a, b) -> float:
    """Chance-corrected agreement between two binary vectors.

    Conventions for degenerate marginals: both raters constant and identical
    -> 1.0; otherwise the usual (p_o - p_e) / (1 - p_e).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"kappa needs equal-length vectors, got {a.shape}, {b.shape}")
    if a.size == 0:
        raise EmptyInputError("kappa of empty vectors")
    if not (np.isin(a, (0, 1)).all() and np.isin(b, (0, 1)).all()):
        raise DimensionError("kappa inputs must be binary")
    n = a.size
    p_o = float((a == b).sum()) / n
    pa1, pb1 = a.mean(), b.mean()
    p_e = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def average_kappa(a: np.ndarray, b: np.ndarray) -> float:
    """Mean of per-category kappas between two binary label matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionError(f"label matrices must share a 2-d shape, got {a.shape}, {b.shape}")
    return float(np.mean([cohens_kappa(a[:, j], b[:, j]) for j in range(a.shape[1])]))
