"""Mixed-type similarity between choice instances and few-shot example selection.

Similarity is computed on structured values, never on rendered prompt text.
Four weighted components: sociodemographic, numeric trip, categorical trip,
and additional variables. Ordinal attributes score by discrete proximity,
nominal by exact match, and the numeric group by inverse Euclidean distance
over min-max scaled vectors.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .dataset import AttributeSchema, ChoiceInstance, NumericNormalizer

COMPONENT_GROUPS = ("socio", "trip_num", "trip_cat", "additional")

# Published weights for the open SP benchmark; reused as the default when a
# dataset does not configure its own.
SWISSMETRO_WEIGHTS = (0.35, 0.30, 0.15, 0.20)


class ComponentUndefinedError(ValueError):
    """A similarity component has no present attribute pair to score."""


@dataclass(frozen=True)
class SimilarityWeights:
    w_socio: float
    w_trip_num: float
    w_trip_cat: float
    w_add: float

    def __post_init__(self):
        for w in self.as_tuple():
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"weights must lie in [0, 1], got {w}")
        if abs(sum(self.as_tuple()) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1.0, got {sum(self.as_tuple())}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w_socio, self.w_trip_num, self.w_trip_cat, self.w_add)

    @classmethod
    def default(cls) -> "SimilarityWeights":
        return cls(*SWISSMETRO_WEIGHTS)


@dataclass(frozen=True)
class SimilarityBreakdown:
    """Per-component audit of one pairwise score. Undefined components are
    None and their weight is renormalized over the defined ones."""

    s_socio: Optional[float]
    s_trip_num: Optional[float]
    s_trip_cat: Optional[float]
    s_add: Optional[float]
    total: float

    def components(self) -> tuple[Optional[float], ...]:
        return (self.s_socio, self.s_trip_num, self.s_trip_cat, self.s_add)

    def to_dict(self) -> dict:
        return {
            "s_socio": self.s_socio,
            "s_trip_num": self.s_trip_num,
            "s_trip_cat": self.s_trip_cat,
            "s_add": self.s_add,
            "total": self.total,
        }


def ordinal_similarity(v_i: int, v_j: int) -> float:
    """Discrete proximity: 1.0 for equal level indices, 0.5 for adjacent,
    0.0 otherwise."""
    gap = abs(v_i - v_j)
    if gap == 0:
        return 1.0
    if gap == 1:
        return 0.5
    return 0.0


def numeric_group_similarity(x_i: Sequence[float], x_j: Sequence[float]) -> float:
    """Inverse Euclidean distance over scaled vectors: 1 / (1 + ||x_i - x_j||)."""
    if len(x_i) != len(x_j):
        raise ValueError(f"vector length mismatch: {len(x_i)} vs {len(x_j)}")
    distance = math.sqrt(sum((a - b) ** 2 for a, b in zip(x_i, x_j)))
    return 1.0 / (1.0 + distance)


def categorical_group_similarity(d_i: ChoiceInstance, d_j: ChoiceInstance,
                                 group: str, schema: AttributeSchema) -> float:
    """Mean over attributes present in both instances: exact match for
    nominal, discrete proximity for ordinal. Missing attributes are skipped,
    renormalizing over the present ones."""
    if group not in ("socio", "trip_cat", "additional"):
        raise ValueError(f"categorical similarity undefined for group {group!r}")
    scores = []
    for attr in schema.group_attributes(group):
        a, b = d_i.values[attr.name], d_j.values[attr.name]
        if a is None or b is None:
            continue
        if attr.kind == "nominal":
            scores.append(1.0 if a == b else 0.0)
        else:
            scores.append(ordinal_similarity(attr.level_index(a), attr.level_index(b)))
    if not scores:
        raise ComponentUndefinedError(f"no present attributes for group {group!r}")
    return sum(scores) / len(scores)


def _numeric_component(d_i: ChoiceInstance, d_j: ChoiceInstance,
                       schema: AttributeSchema, normalizer: NumericNormalizer) -> float:
    x_i, x_j = [], []
    for attr in schema.group_attributes("trip_num"):
        a = normalizer.scale(attr.name, d_i.values[attr.name])
        b = normalizer.scale(attr.name, d_j.values[attr.name])
        if a is None or b is None:
            continue
        x_i.append(a)
        x_j.append(b)
    if not x_i:
        raise ComponentUndefinedError("no present attributes for group 'trip_num'")
    return numeric_group_similarity(x_i, x_j)


def total_similarity(d_i: ChoiceInstance, d_j: ChoiceInstance,
                     weights: SimilarityWeights, normalizer: NumericNormalizer,
                     schema: AttributeSchema) -> SimilarityBreakdown:
    """Weighted sum of the four components, in [0, 1].

    A component undefined for this pair (all attributes missing, or none
    declared for the group) drops out and the remaining weights are
    renormalized; if every component is undefined the pair is unscorable.
    """
    values: list[Optional[float]] = []
    for group, weight in zip(COMPONENT_GROUPS, weights.as_tuple()):
        try:
            if group == "trip_num":
                values.append(_numeric_component(d_i, d_j, schema, normalizer))
            else:
                values.append(categorical_group_similarity(d_i, d_j, group, schema))
        except ComponentUndefinedError:
            values.append(None)
    defined = [(v, w) for v, w in zip(values, weights.as_tuple()) if v is not None]
    weight_mass = sum(w for _, w in defined)
    if not defined or weight_mass == 0.0:
        raise ComponentUndefinedError("no similarity component defined for this pair")
    total = sum(v * w for v, w in defined) / weight_mass
    return SimilarityBreakdown(
        s_socio=values[0], s_trip_num=values[1], s_trip_cat=values[2],
        s_add=values[3], total=total,
    )


def select_targeted(test: ChoiceInstance, pool: Sequence[ChoiceInstance], k: int,
                    weights: SimilarityWeights, normalizer: NumericNormalizer,
                    schema: AttributeSchema,
                    ) -> list[tuple[ChoiceInstance, SimilarityBreakdown]]:
    """The k pool members most similar to the test instance, descending,
    ties broken by pool order. Returns each with its score breakdown for
    the audit log."""
    if k > len(pool):
        raise ValueError(f"pool of {len(pool)} cannot supply k={k} examples")
    scored = [
        (idx, inst, total_similarity(test, inst, weights, normalizer, schema))
        for idx, inst in enumerate(pool)
    ]
    scored.sort(key=lambda item: (-item[2].total, item[0]))
    return [(inst, breakdown) for _, inst, breakdown in scored[:k]]


def select_random(pool: Sequence[ChoiceInstance], k: int, seed: int) -> list[ChoiceInstance]:
    """k distinct pool members, uniform without replacement, deterministic
    per seed."""
    if k > len(pool):
        raise ValueError(f"pool of {len(pool)} cannot supply k={k} examples")
    return random.Random(seed).sample(list(pool), k)
