"""Explanation Strength Index: keyword coverage of generated rationales.

The index is the fraction of a fixed factor lexicon mentioned in a rationale,
scored by lower-case substring containment (so "costly" counts toward
"cost"); word-boundary matching is available behind a flag. Direct-style
records carry no reasoning and score 0 rather than being dropped, keeping
group counts honest.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

DEFAULT_FACTORS = ("time", "cost", "comfort", "convenience", "frequency")


@dataclass(frozen=True)
class FactorLexicon:
    factors: tuple[str, ...] = DEFAULT_FACTORS
    match_boundaries: bool = False

    def __post_init__(self):
        if not self.factors:
            raise ValueError("lexicon must be non-empty")
        lowered = tuple(f.lower() for f in self.factors)
        if len(set(lowered)) != len(lowered):
            raise ValueError("lexicon factors must be unique")
        object.__setattr__(self, "factors", lowered)


@dataclass(frozen=True)
class EsiScore:
    value: float
    hits: tuple[str, ...]


def esi(reasoning: str, lexicon: FactorLexicon = FactorLexicon()) -> EsiScore:
    """Fraction of lexicon factors appearing in the lower-cased text."""
    text = reasoning.lower()
    hits = []
    for factor in lexicon.factors:
        if lexicon.match_boundaries:
            found = re.search(rf"\b{re.escape(factor)}\b", text) is not None
        else:
            found = factor in text
        if found:
            hits.append(factor)
    return EsiScore(value=len(hits) / len(lexicon.factors), hits=tuple(hits))


def esi_aggregate(groups: Mapping[Hashable, Sequence[str]],
                  lexicon: FactorLexicon = FactorLexicon()) -> list[dict]:
    """Per-group mean, interquartile range, and count of ESI scores.

    Groups are keyed by whatever configuration tuple the caller uses
    (typically model, shot type, prompt style, temperature). Empty groups
    are skipped with a warning.
    """
    rows = []
    for key, texts in groups.items():
        if not texts:
            warnings.warn(f"skipping empty reasoning group {key!r}", stacklevel=2)
            continue
        scores = np.array([esi(text, lexicon).value for text in texts])
        q1, q3 = np.percentile(scores, [25, 75])
        rows.append({
            "group": key,
            "mean": float(scores.mean()),
            "iqr": float(q3 - q1),
            "count": len(scores),
        })
    return rows
