from __future__ import annotations

import csv
import random
from pathlib import Path

import pytest

from modebench.dataset import Attribute, AttributeSchema, ChoiceInstance

MODES = ("TRAIN", "SM", "CAR")

ATTRIBUTES = (
    Attribute("age_group", "socio", "ordinal", levels=("1", "2", "3", "4", "5")),
    Attribute("gender", "socio", "nominal", levels=("male", "female")),
    Attribute("purpose", "trip_cat", "nominal", levels=("commute", "business", "leisure")),
    Attribute("ticket_class", "trip_cat", "ordinal", levels=("second", "first")),
    Attribute("luggage", "additional", "ordinal", levels=("none", "one", "several")),
    Attribute("who_pays", "additional", "nominal", levels=("self", "employer")),
    Attribute("TRAIN_time", "trip_num", "continuous", unit="min"),
    Attribute("TRAIN_cost", "trip_num", "continuous", unit="CHF"),
    Attribute("SM_time", "trip_num", "continuous", unit="min"),
    Attribute("SM_cost", "trip_num", "continuous", unit="CHF"),
    Attribute("CAR_time", "trip_num", "continuous", unit="min"),
    Attribute("CAR_cost", "trip_num", "continuous", unit="CHF"),
)

DEFAULT_VALUES = {
    "age_group": "3",
    "gender": "female",
    "purpose": "commute",
    "ticket_class": "second",
    "luggage": "none",
    "who_pays": "self",
    "TRAIN_time": 120.0,
    "TRAIN_cost": 65.0,
    "SM_time": 45.0,
    "SM_cost": 110.0,
    "CAR_time": 90.0,
    "CAR_cost": 80.0,
}


@pytest.fixture
def schema() -> AttributeSchema:
    return AttributeSchema(
        attributes=ATTRIBUTES,
        mode_labels=MODES,
        id_column="obs_id",
        respondent_column="respondent_id",
        choice_column="chosen_mode",
        availability_column="available_modes",
    )


def make_instance(instance_id="t1", respondent_id=None, available=MODES,
                  chosen="TRAIN", **overrides) -> ChoiceInstance:
    values = dict(DEFAULT_VALUES)
    values.update(overrides)
    return ChoiceInstance(
        id=instance_id,
        respondent_id=respondent_id or instance_id,
        values=values,
        available_modes=tuple(available),
        chosen_mode=chosen,
    )


def synth_rows(n_respondents: int, scenarios: int, seed: int) -> list[dict]:
    """Plausible random survey rows covering every attribute kind, with
    varying availability sets."""
    rng = random.Random(seed)
    rows = []
    for r in range(n_respondents):
        persona = {
            "age_group": rng.choice(("1", "2", "3", "4", "5")),
            "gender": rng.choice(("male", "female")),
        }
        for s in range(scenarios):
            available = list(MODES)
            if rng.random() < 0.3:
                available.remove(rng.choice(available))
            row = {
                "obs_id": f"r{r}s{s}",
                "respondent_id": f"r{r}",
                **persona,
                "purpose": rng.choice(("commute", "business", "leisure")),
                "ticket_class": rng.choice(("second", "first")),
                "luggage": rng.choice(("none", "one", "several")),
                "who_pays": rng.choice(("self", "employer")),
                "TRAIN_time": round(rng.uniform(60, 200), 1),
                "TRAIN_cost": round(rng.uniform(30, 150), 1),
                "SM_time": round(rng.uniform(20, 90), 1),
                "SM_cost": round(rng.uniform(60, 250), 1),
                "CAR_time": round(rng.uniform(40, 180), 1),
                "CAR_cost": round(rng.uniform(20, 120), 1),
                "chosen_mode": rng.choice(available),
                "available_modes": "|".join(available),
            }
            rows.append(row)
    return rows


def write_survey_csv(path: Path, rows: list[dict]) -> Path:
    header = list(rows[0].keys())
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)
    return path


@pytest.fixture
def survey_csv(tmp_path) -> Path:
    """Small survey: 40 respondents x 3 scenarios."""
    return write_survey_csv(tmp_path / "survey.csv", synth_rows(40, 3, seed=11))


def schema_doc() -> dict:
    return {
        "mode_labels": list(MODES),
        "id_column": "obs_id",
        "respondent_column": "respondent_id",
        "choice_column": "chosen_mode",
        "availability_column": "available_modes",
        "attributes": [
            {"name": a.name, "group": a.group, "kind": a.kind,
             "unit": a.unit, "levels": list(a.levels)}
            for a in ATTRIBUTES
        ],
    }
