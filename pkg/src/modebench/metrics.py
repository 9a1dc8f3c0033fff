"""Instance- and distribution-level evaluation of one experiment cell.

Instance level: accuracy, macro precision/recall/F1, and support-weighted F1
from a confusion matrix that tracks invalid outputs in a dedicated bucket.
Distribution level: mean absolute error between mode-share vectors on raw
shares, plus Jensen-Shannon divergence and cross-entropy on shares smoothed
by p' = (p + eps) / (1 + C*eps). Natural logarithms throughout, so JSD is
reported in nats and bounded by ln 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from typing import Mapping, Sequence, Union

import numpy as np

from .gateway import INVALID, DecisionRecord

DEFAULT_EPSILON = 1e-9


class AlignmentError(ValueError):
    """Records and ground truths do not line up by agent id."""


class UndefinedMetricsError(ValueError):
    """The inputs cannot support the requested metric (empty cell, no valid
    predictions, degenerate variance)."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """C x (C+1) counts: rows are true classes, the last column collects
    invalid predictions (wrong for every class, inflating only the true
    class's misses)."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    @property
    def total(self) -> int:
        return int(self.as_array().sum())

    @property
    def invalid_count(self) -> int:
        return int(self.as_array()[:, -1].sum())


@dataclass(frozen=True)
class ShareDistribution:
    """Per-class probabilities in a fixed class order."""

    probs: tuple[float, ...]
    smoothed: bool = False
    epsilon: float = 0.0

    def __post_init__(self):
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError(f"shares must sum to 1, got {sum(self.probs)}")
        if any(p < 0.0 for p in self.probs):
            raise ValueError("shares must be non-negative")
        if self.smoothed and any(p <= 0.0 for p in self.probs):
            raise ValueError("smoothed shares must be strictly positive")

    @classmethod
    def from_labels(cls, observed: Sequence[str], class_order: Sequence[str]) -> "ShareDistribution":
        if not observed:
            raise UndefinedMetricsError("cannot form a share distribution from zero labels")
        n = len(observed)
        counts = [sum(1 for y in observed if y == c) for c in class_order]
        if sum(counts) != n:
            unknown = sorted(set(observed) - set(class_order))
            raise ValueError(f"labels outside the class order: {unknown}")
        return cls(probs=tuple(c / n for c in counts))


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    f1_weighted: float
    dist_mae: float
    jsd: float
    cross_entropy: float
    invalid_count: int
    n_records: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _aligned_truths(records: Sequence[DecisionRecord],
                    truths: Union[Mapping[str, str], Sequence[str]]) -> list[str]:
    if isinstance(truths, Mapping):
        missing = [r.agent_id for r in records if r.agent_id not in truths]
        if missing:
            raise AlignmentError(f"no ground truth for agent ids {missing[:5]}")
        return [truths[r.agent_id] for r in records]
    if len(truths) != len(records):
        raise AlignmentError(f"{len(records)} records but {len(truths)} truths")
    return list(truths)


def confusion(records: Sequence[DecisionRecord],
              truths: Union[Mapping[str, str], Sequence[str]],
              labels: Sequence[str]) -> ConfusionMatrix:
    """Tabulate (true, predicted) counts; invalid predictions land in the
    dedicated final column."""
    aligned = _aligned_truths(records, truths)
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels) + 1), dtype=np.int64)
    for record, truth in zip(records, aligned):
        if truth not in index:
            raise AlignmentError(f"ground truth {truth!r} outside class order {list(labels)}")
        row = index[truth]
        if record.predicted_mode == INVALID:
            counts[row, -1] += 1
        elif record.predicted_mode in index:
            counts[row, index[record.predicted_mode]] += 1
        else:
            raise AlignmentError(
                f"prediction {record.predicted_mode!r} outside class order {list(labels)}"
            )
    return ConfusionMatrix(labels=tuple(labels), counts=tuple(map(tuple, counts.tolist())))


def instance_metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float, float]:
    """(accuracy, precision_macro, recall_macro, f1_macro, f1_weighted).

    A class never predicted contributes precision 0 to the macro mean, which
    penalizes single-mode collapse instead of hiding it.
    """
    counts = cm.as_array()
    total = counts.sum()
    if total == 0:
        raise UndefinedMetricsError("empty confusion matrix")
    c = len(cm.labels)
    tp = np.diag(counts[:, :c]).astype(float)
    fp = counts[:, :c].sum(axis=0) - tp
    support = counts.sum(axis=1).astype(float)
    precision = np.divide(tp, tp + fp, out=np.zeros(c), where=(tp + fp) > 0)
    recall = np.divide(tp, support, out=np.zeros(c), where=support > 0)
    f1 = np.divide(2 * precision * recall, precision + recall,
                   out=np.zeros(c), where=(precision + recall) > 0)
    accuracy = float(tp.sum() / total)
    f1_weighted = float((support * f1).sum() / support.sum())
    return (
        accuracy,
        float(precision.mean()),
        float(recall.mean()),
        float(f1.mean()),
        f1_weighted,
    )


def smooth_distribution(shares: ShareDistribution,
                        epsilon: float = DEFAULT_EPSILON) -> ShareDistribution:
    """p' = (p + eps) / (1 + C*eps): strictly positive, still sums to one."""
    c = len(shares.probs)
    probs = tuple((p + epsilon) / (1.0 + c * epsilon) for p in shares.probs)
    return ShareDistribution(probs=probs, smoothed=True, epsilon=epsilon)


def dist_mae(p: ShareDistribution, q: ShareDistribution) -> float:
    """Mean absolute share deviation, on raw (unsmoothed) shares."""
    if len(p.probs) != len(q.probs):
        raise ValueError("share vectors differ in length")
    return float(sum(abs(a - b) for a, b in zip(p.probs, q.probs)) / len(p.probs))


def jsd(p: ShareDistribution, q: ShareDistribution,
        epsilon: float = DEFAULT_EPSILON) -> float:
    """Jensen-Shannon divergence in nats between the smoothed distributions;
    symmetric, zero at equality, at most ln 2."""
    if len(p.probs) != len(q.probs):
        raise ValueError("share vectors differ in length")
    ps = smooth_distribution(p, epsilon).probs
    qs = smooth_distribution(q, epsilon).probs
    total = 0.0
    for a, b in zip(ps, qs):
        m = 0.5 * (a + b)
        total += a * math.log(a / m) + b * math.log(b / m)
    return 0.5 * total


def cross_entropy(p: ShareDistribution, q: ShareDistribution,
                  epsilon: float = DEFAULT_EPSILON) -> float:
    """-sum p' ln q' over smoothed shares; finite even when q drops a class
    p holds, in which case it spikes toward -p ln eps."""
    if len(p.probs) != len(q.probs):
        raise ValueError("share vectors differ in length")
    ps = smooth_distribution(p, epsilon).probs
    qs = smooth_distribution(q, epsilon).probs
    return -sum(a * math.log(b) for a, b in zip(ps, qs))


def evaluate_run(records: Sequence[DecisionRecord],
                 truths: Union[Mapping[str, str], Sequence[str]],
                 labels: Sequence[str],
                 epsilon: float = DEFAULT_EPSILON) -> MetricsReport:
    """Full report for one cell.

    Predicted shares come from valid records only; invalid records count as
    wrong at the instance level and are surfaced via invalid_count.
    """
    if not records:
        raise UndefinedMetricsError("no records to evaluate")
    aligned = _aligned_truths(records, truths)
    cm = confusion(records, aligned, labels)
    accuracy, precision_macro, recall_macro, f1_macro, f1_weighted = instance_metrics(cm)
    truth_shares = ShareDistribution.from_labels(aligned, labels)
    valid_predictions = [r.predicted_mode for r in records if r.predicted_mode != INVALID]
    if not valid_predictions:
        raise UndefinedMetricsError("every record is INVALID; predicted shares undefined")
    predicted_shares = ShareDistribution.from_labels(valid_predictions, labels)
    return MetricsReport(
        accuracy=accuracy,
        precision_macro=precision_macro,
        recall_macro=recall_macro,
        f1_macro=f1_macro,
        f1_weighted=f1_weighted,
        dist_mae=dist_mae(truth_shares, predicted_shares),
        jsd=jsd(truth_shares, predicted_shares, epsilon),
        cross_entropy=cross_entropy(truth_shares, predicted_shares, epsilon),
        invalid_count=cm.invalid_count,
        n_records=len(records),
    )
