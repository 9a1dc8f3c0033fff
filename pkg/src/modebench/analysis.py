"""Cross-cell analysis over the completed experiment matrix.

Variance decomposition assumes the balanced, fully crossed factorial design
the matrix produces: each factor's sum of squares is the between-level SS of
a main-effects model, which on a balanced design coincides with the Type II
decomposition, and shares are normalized to sum to one. Ranking and
learning-style gains aggregate weighted F1 across prompt styles and
temperatures.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import product
from typing import Mapping, Optional, Sequence

import numpy as np

SHOT_TYPES = ("zeroshot", "fewshot_random", "fewshot_targeted")


class UnbalancedDesignError(ValueError):
    """The cells do not form a balanced full cross of the listed factors."""


class UndefinedSharesError(ValueError):
    """All factor sums of squares are zero (constant responses)."""


class CoverageError(ValueError):
    """A grouping lacks the cells needed for a fair comparison."""


@dataclass(frozen=True)
class ExperimentCell:
    """One completed run of the matrix with its headline score."""

    model: str
    dataset: str
    shot_type: str
    prompt_style: str
    temperature: float
    f1_weighted: float


@dataclass(frozen=True)
class VarianceShare:
    shares: Mapping[str, float]

    def __post_init__(self):
        total = sum(self.shares.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"shares must sum to 1, got {total}")
        if any(not 0.0 <= s <= 1.0 + 1e-12 for s in self.shares.values()):
            raise ValueError("shares must lie in [0, 1]")


def variance_decomposition(cells: Sequence[ExperimentCell],
                           factors: Sequence[str],
                           response: str = "f1_weighted",
                           use_cell_means: bool = True) -> VarianceShare:
    """Share of explained variance attributable to each factor.

    Requires every combination of factor levels to appear equally often.
    With use_cell_means (default) repeated observations per combination are
    collapsed to their mean before decomposition; otherwise all observations
    are pooled.
    """
    if not cells:
        raise UnbalancedDesignError("no cells supplied")
    levels = {f: sorted({str(getattr(c, f)) for c in cells}) for f in factors}
    combos: dict[tuple, list[float]] = defaultdict(list)
    for cell in cells:
        key = tuple(str(getattr(cell, f)) for f in factors)
        combos[key].append(float(getattr(cell, response)))
    expected = list(product(*(levels[f] for f in factors)))
    counts = {k: len(v) for k, v in combos.items()}
    if set(counts) != set(expected) or len(set(counts.values())) != 1:
        raise UnbalancedDesignError(
            f"design over {list(factors)} is not a balanced full cross "
            f"({len(counts)} of {len(expected)} combinations present)"
        )
    if use_cell_means:
        observations = {k: [float(np.mean(v))] for k, v in combos.items()}
    else:
        observations = combos

    values, keys = [], []
    for key, obs in observations.items():
        for v in obs:
            values.append(v)
            keys.append(key)
    values_arr = np.array(values)
    grand_mean = values_arr.mean()

    raw_ss = {}
    for fi, factor in enumerate(factors):
        ss = 0.0
        for level in levels[factor]:
            mask = np.array([k[fi] == level for k in keys])
            ss += mask.sum() * (values_arr[mask].mean() - grand_mean) ** 2
        raw_ss[factor] = float(ss)
    total = sum(raw_ss.values())
    if total == 0.0:
        raise UndefinedSharesError("constant responses: all factor sums of squares are zero")
    return VarianceShare(shares={f: raw_ss[f] / total for f in factors})


def rank_models(cells: Sequence[ExperimentCell],
                group_by: Sequence[str] = ("dataset", "shot_type"),
                ) -> dict[tuple, list[dict]]:
    """Per group, models ordered by mean weighted F1 (descending).

    Ties share the better rank and the following model resumes at its
    positional rank. Every model must contribute the same number of cells
    within a group, otherwise means are not comparable.
    """
    grouped: dict[tuple, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for cell in cells:
        key = tuple(str(getattr(cell, g)) for g in group_by)
        grouped[key][cell.model].append(cell.f1_weighted)
    result: dict[tuple, list[dict]] = {}
    for key, per_model in grouped.items():
        sizes = {len(v) for v in per_model.values()}
        if len(sizes) != 1:
            raise CoverageError(f"group {key}: models have unequal cell counts {sorted(sizes)}")
        means = sorted(
            ((model, float(np.mean(scores))) for model, scores in per_model.items()),
            key=lambda item: (-item[1], item[0]),
        )
        rows = []
        rank = 0
        previous: Optional[float] = None
        for position, (model, mean) in enumerate(means, start=1):
            if previous is None or mean != previous:
                rank = position
            previous = mean
            rows.append({"model": model, "mean_f1_weighted": mean, "rank": rank})
        result[key] = rows
    return result


def learning_style_gain(cells: Sequence[ExperimentCell]) -> list[dict]:
    """Percentage change in mean weighted F1 across shot-type transitions,
    per model and dataset.

    Means are taken over the prompt-style x temperature runs of each shot
    type. A drop is flagged as negative learning; a zero baseline leaves the
    gain undefined rather than infinite.
    """
    per_shot: dict[tuple[str, str], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for cell in cells:
        per_shot[(cell.model, cell.dataset)][cell.shot_type].append(cell.f1_weighted)
    rows = []
    transitions = [("zeroshot", "fewshot_random"), ("fewshot_random", "fewshot_targeted")]
    for (model, dataset), shots in sorted(per_shot.items()):
        missing = [s for s in SHOT_TYPES if s not in shots]
        if missing:
            raise CoverageError(f"({model}, {dataset}): missing shot types {missing}")
        means = {s: float(np.mean(v)) for s, v in shots.items()}
        for before, after in transitions:
            base = means[before]
            row = {
                "model": model,
                "dataset": dataset,
                "transition": f"{before}_to_{after}",
                "baseline_f1": base,
                "target_f1": means[after],
            }
            if base == 0.0:
                row["gain_pct"] = None
                row["flag"] = "undefined baseline"
            else:
                gain = 100.0 * (means[after] - base) / base
                row["gain_pct"] = gain
                row["flag"] = "negative learning" if gain < 0 else ""
            rows.append(row)
    return rows


def learning_style_summary(cells: Sequence[ExperimentCell]) -> list[dict]:
    """Per dataset and shot type: top mean, top peak, and tightest IQR over
    each model's runs, in the style of the per-dataset summary tables."""
    grouped: dict[tuple[str, str], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for cell in cells:
        grouped[(cell.dataset, cell.shot_type)][cell.model].append(cell.f1_weighted)
    rows = []
    for (dataset, shot), per_model in sorted(grouped.items()):
        stats = {}
        for model, scores in per_model.items():
            arr = np.array(scores)
            q1, q3 = np.percentile(arr, [25, 75])
            stats[model] = {"mean": float(arr.mean()), "peak": float(arr.max()),
                            "iqr": float(q3 - q1)}
        top_mean = max(stats, key=lambda m: (stats[m]["mean"], m))
        top_peak = max(stats, key=lambda m: (stats[m]["peak"], m))
        tightest = min(stats, key=lambda m: (stats[m]["iqr"], m))
        rows.append({
            "dataset": dataset,
            "shot_type": shot,
            "top_mean": stats[top_mean]["mean"],
            "top_mean_model": top_mean,
            "top_peak": stats[top_peak]["peak"],
            "top_peak_model": top_peak,
            "tightest_iqr": stats[tightest]["iqr"],
            "tightest_iqr_model": tightest,
        })
    return rows
