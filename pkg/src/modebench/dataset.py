"""Survey ingestion: schema declaration, typed choice instances, splits, scaling.

A dataset is a delimiter-separated text file with a header row. Each row is
one respondent-scenario observation. The schema declares, per column, which
variable group it belongs to (sociodemographic, numeric trip, categorical
trip, additional) and how it is typed (ordinal, nominal, continuous), which
drives both similarity scoring and narrative rendering downstream.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

GROUPS = ("socio", "trip_num", "trip_cat", "additional")
KINDS = ("ordinal", "nominal", "continuous")

MISSING_TOKENS = ("", "NA")

Value = Union[str, float, None]


class DatasetError(Exception):
    """Raised for schema violations, malformed rows, and sizing problems."""


def canonical_mode(label: str) -> str:
    return label.strip().upper()


@dataclass(frozen=True)
class Attribute:
    """One declared survey variable."""

    name: str
    group: str  # socio | trip_num | trip_cat | additional
    kind: str  # ordinal | nominal | continuous
    unit: str = ""
    levels: tuple[str, ...] = ()  # required for ordinal/nominal, ordered for ordinal

    def __post_init__(self):
        if self.group not in GROUPS:
            raise DatasetError(f"attribute {self.name!r}: unknown group {self.group!r}")
        if self.kind not in KINDS:
            raise DatasetError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.kind in ("ordinal", "nominal") and not self.levels:
            raise DatasetError(
                f"attribute {self.name!r}: {self.kind} attributes must declare their levels"
            )
        if len(set(self.levels)) != len(self.levels):
            raise DatasetError(f"attribute {self.name!r}: duplicate levels")
        # The numeric trip component is a distance over scaled vectors, the
        # other three are match/proximity scores; mixing kinds across that
        # boundary would leave a component undefined.
        if (self.kind == "continuous") != (self.group == "trip_num"):
            raise DatasetError(
                f"attribute {self.name!r}: continuous attributes belong to group "
                f"'trip_num' and vice versa (got kind={self.kind!r}, group={self.group!r})"
            )

    def level_index(self, value: str) -> int:
        try:
            return self.levels.index(value)
        except ValueError:
            raise DatasetError(
                f"attribute {self.name!r}: level {value!r} not among declared levels"
            ) from None


@dataclass(frozen=True)
class AttributeSchema:
    """Declares the variables, mode labels, and special columns of a dataset."""

    attributes: tuple[Attribute, ...]
    mode_labels: tuple[str, ...]
    id_column: str = "id"
    respondent_column: Optional[str] = None
    choice_column: str = "chosen_mode"
    availability_column: Optional[str] = None

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DatasetError("attribute names must be unique")
        if not self.mode_labels:
            raise DatasetError("mode_labels must be non-empty")
        canon = tuple(canonical_mode(m) for m in self.mode_labels)
        if len(set(canon)) != len(canon):
            raise DatasetError("mode_labels must be unique after canonicalization")
        object.__setattr__(self, "mode_labels", canon)

    def attribute(self, name: str) -> Attribute:
        for a in self.attributes:
            if a.name == name:
                return a
        raise DatasetError(f"unknown attribute {name!r}")

    def group_attributes(self, group: str) -> tuple[Attribute, ...]:
        return tuple(a for a in self.attributes if a.group == group)

    def mode_of(self, attribute_name: str) -> Optional[str]:
        """Mode a per-alternative column belongs to, by '<MODE>_' name prefix.
        Longest mode first, so nested names resolve to the specific mode."""
        upper = attribute_name.upper()
        for mode in sorted(self.mode_labels, key=len, reverse=True):
            if upper.startswith(mode + "_"):
                return mode
        return None

    @classmethod
    def from_dict(cls, doc: Mapping) -> "AttributeSchema":
        attrs = tuple(
            Attribute(
                name=a["name"],
                group=a["group"],
                kind=a["kind"],
                unit=a.get("unit", ""),
                levels=tuple(str(v) for v in a.get("levels", ())),
            )
            for a in doc["attributes"]
        )
        return cls(
            attributes=attrs,
            mode_labels=tuple(doc["mode_labels"]),
            id_column=doc.get("id_column", "id"),
            respondent_column=doc.get("respondent_column"),
            choice_column=doc.get("choice_column", "chosen_mode"),
            availability_column=doc.get("availability_column"),
        )


@dataclass(frozen=True)
class ChoiceInstance:
    """One respondent-scenario observation with its availability set and choice."""

    id: str
    respondent_id: str
    values: Mapping[str, Value]
    available_modes: tuple[str, ...]
    chosen_mode: str

    def value(self, name: str) -> Value:
        return self.values[name]


@dataclass(frozen=True)
class TrainTestSplit:
    train: tuple[ChoiceInstance, ...]
    test: tuple[ChoiceInstance, ...]
    seed: int


def _parse_value(attr: Attribute, raw: str, row: int) -> Value:
    token = raw.strip()
    if token in MISSING_TOKENS:
        return None
    if attr.kind == "continuous":
        try:
            return float(token)
        except ValueError:
            raise DatasetError(
                f"row {row}, column {attr.name!r}: unparseable numeric value {raw!r}"
            ) from None
    if token not in attr.levels:
        raise DatasetError(
            f"row {row}, column {attr.name!r}: level {token!r} not among declared levels"
        )
    return token


def _parse_availability(raw: str, schema: AttributeSchema, row: int) -> tuple[str, ...]:
    tokens = [canonical_mode(t) for t in raw.split("|") if t.strip()]
    for t in tokens:
        if t not in schema.mode_labels:
            raise DatasetError(f"row {row}: availability names unknown mode {t!r}")
    # preserve mode_labels order for determinism
    return tuple(m for m in schema.mode_labels if m in tokens)


def load_dataset(path: Union[str, Path], schema: AttributeSchema,
                 delimiter: str = ",") -> list[ChoiceInstance]:
    """Load and validate one delimiter-separated survey file.

    Raises DatasetError naming the offending row and column on any schema
    violation. Extra columns in the file are ignored; row order is preserved.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle, delimiter=delimiter)
        header = reader.fieldnames or []
        required = [schema.id_column, schema.choice_column]
        required += [a.name for a in schema.attributes]
        if schema.respondent_column:
            required.append(schema.respondent_column)
        if schema.availability_column:
            required.append(schema.availability_column)
        for column in required:
            if column not in header:
                raise DatasetError(f"{path.name}: required column {column!r} missing from header")

        instances: list[ChoiceInstance] = []
        seen_ids: set[str] = set()
        for row_no, row in enumerate(reader, start=2):  # header is line 1
            values = {a.name: _parse_value(a, row[a.name], row_no) for a in schema.attributes}
            if schema.availability_column:
                available = _parse_availability(row[schema.availability_column], schema, row_no)
            else:
                available = schema.mode_labels
            if not available:
                raise DatasetError(f"row {row_no}: empty availability set")
            chosen = canonical_mode(row[schema.choice_column])
            if chosen not in schema.mode_labels:
                raise DatasetError(
                    f"row {row_no}, column {schema.choice_column!r}: "
                    f"unknown mode {row[schema.choice_column]!r}"
                )
            if chosen not in available:
                raise DatasetError(
                    f"row {row_no}, column {schema.choice_column!r}: chosen mode "
                    f"{chosen!r} not in availability set {list(available)}"
                )
            instance_id = row[schema.id_column].strip()
            if instance_id in seen_ids:
                raise DatasetError(
                    f"row {row_no}, column {schema.id_column!r}: duplicate id {instance_id!r}"
                )
            seen_ids.add(instance_id)
            respondent = (
                row[schema.respondent_column].strip()
                if schema.respondent_column
                else instance_id
            )
            instances.append(
                ChoiceInstance(
                    id=instance_id,
                    respondent_id=respondent,
                    values=values,
                    available_modes=available,
                    chosen_mode=chosen,
                )
            )
    return instances


def save_dataset(instances: Sequence[ChoiceInstance], schema: AttributeSchema,
                 path: Union[str, Path], delimiter: str = ",") -> None:
    """Write instances back out in the load format (round-trip safe)."""
    path = Path(path)
    header = [schema.id_column]
    if schema.respondent_column:
        header.append(schema.respondent_column)
    header += [a.name for a in schema.attributes]
    header.append(schema.choice_column)
    if schema.availability_column:
        header.append(schema.availability_column)

    def fmt(attr: Attribute, v: Value) -> str:
        if v is None:
            return "NA"
        # repr round-trips floats exactly; display formatting is prompt-forge's job
        return repr(v) if attr.kind == "continuous" else str(v)

    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=delimiter)
        writer.writerow(header)
        for inst in instances:
            row = [inst.id]
            if schema.respondent_column:
                row.append(inst.respondent_id)
            row += [fmt(a, inst.values[a.name]) for a in schema.attributes]
            row.append(inst.chosen_mode)
            if schema.availability_column:
                row.append("|".join(inst.available_modes))
            writer.writerow(row)


def split_train_test(data: Sequence[ChoiceInstance], n_respondents: int,
                     n_test: int, seed: int) -> TrainTestSplit:
    """Respondent-disjoint split: all rows of sampled respondents form the
    training pool; the test set is drawn uniformly from the remaining rows.

    Deterministic for a fixed seed; test rows keep their original dataset
    order so downstream runs share one canonical agent order.
    """
    respondents: list[str] = []
    seen = set()
    for inst in data:
        if inst.respondent_id not in seen:
            seen.add(inst.respondent_id)
            respondents.append(inst.respondent_id)
    if n_respondents > len(respondents):
        raise DatasetError(
            f"requested {n_respondents} training respondents, dataset has {len(respondents)}"
        )
    rng = random.Random(seed)
    train_ids = set(rng.sample(respondents, n_respondents))
    train = tuple(i for i in data if i.respondent_id in train_ids)
    remaining = [i for i in data if i.respondent_id not in train_ids]
    if n_test > len(remaining):
        raise DatasetError(
            f"requested {n_test} test rows, only {len(remaining)} remain outside the training pool"
        )
    picked = set(rng.sample(range(len(remaining)), n_test))
    test = tuple(inst for pos, inst in enumerate(remaining) if pos in picked)
    return TrainTestSplit(train=train, test=test, seed=seed)


@dataclass
class NumericNormalizer:
    """Per-attribute min/max fitted on the training pool only.

    Test-time values outside the fitted range are clamped to [0, 1] so the
    inverse-distance similarity stays bounded. A degenerate attribute
    (min == max) scales every value to 0 and carries no signal.
    """

    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    degenerate: frozenset[str] = frozenset()

    def scale(self, name: str, value: Optional[float]) -> Optional[float]:
        if value is None:
            return None
        lo, hi = self.bounds[name]
        if name in self.degenerate:
            return 0.0
        scaled = (value - lo) / (hi - lo)
        return min(1.0, max(0.0, scaled))


def fit_normalizer(train: Sequence[ChoiceInstance], schema: AttributeSchema) -> NumericNormalizer:
    bounds: dict[str, tuple[float, float]] = {}
    degenerate = set()
    for attr in schema.attributes:
        if attr.kind != "continuous":
            continue
        observed = [
            inst.values[attr.name] for inst in train if inst.values[attr.name] is not None
        ]
        if not observed:
            raise DatasetError(
                f"attribute {attr.name!r}: no non-missing training values to fit"
            )
        lo, hi = min(observed), max(observed)
        bounds[attr.name] = (lo, hi)
        if lo == hi:
            degenerate.add(attr.name)
    return NumericNormalizer(bounds=bounds, degenerate=frozenset(degenerate))


def respondent_ids(instances: Iterable[ChoiceInstance]) -> set[str]:
    return {i.respondent_id for i in instances}
