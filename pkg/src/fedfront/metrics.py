"""Classification metrics on the held-out, still-imbalanced test set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import ModelParams, forward


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: float
    precision: float
    f1: float


def metrics_from_counts(counts: ConfusionCounts) -> Metrics:
    n = counts.total
    accuracy = (counts.tp + counts.tn) / n
    pos = counts.tp + counts.fn
    recall = counts.tp / pos if pos > 0 else 0.0
    predicted_pos = counts.tp + counts.fp
    precision = counts.tp / predicted_pos if predicted_pos > 0 else 0.0
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return Metrics(accuracy=accuracy, recall=recall, precision=precision, f1=f1)


def evaluate(
    params: ModelParams,
    features: np.ndarray,
    labels: np.ndarray,
    threshold: float = 0.5,
) -> tuple[ConfusionCounts, Metrics]:
    """Threshold the forward probabilities and score against the labels."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    y = np.asarray(labels, dtype=np.int64).ravel()
    if y.shape[0] == 0:
        raise ValueError("test set is empty")
    predicted = forward(params, features) >= threshold
    actual = y == 1
    counts = ConfusionCounts(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        tn=int(np.sum(~predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
    )
    return counts, metrics_from_counts(counts)
