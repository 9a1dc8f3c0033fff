"""Shared synthetic survey generator for the demo scripts.

Produces a Swissmetro-flavoured stated-preference file: three modes, a mix
of ordinal, nominal, and continuous attributes, and per-row availability
sets. Values are random but seeded, so every demo is reproducible.
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

from modebench.dataset import Attribute, AttributeSchema

MODES = ("TRAIN", "SM", "CAR")

SCHEMA = AttributeSchema(
    attributes=(
        Attribute("age_group", "socio", "ordinal", levels=("1", "2", "3", "4", "5")),
        Attribute("gender", "socio", "nominal", levels=("male", "female")),
        Attribute("purpose", "trip_cat", "nominal",
                  levels=("commute", "business", "leisure")),
        Attribute("ticket_class", "trip_cat", "ordinal", levels=("second", "first")),
        Attribute("luggage", "additional", "ordinal", levels=("none", "one", "several")),
        Attribute("who_pays", "additional", "nominal", levels=("self", "employer")),
        Attribute("TRAIN_time", "trip_num", "continuous", unit="min"),
        Attribute("TRAIN_cost", "trip_num", "continuous", unit="CHF"),
        Attribute("SM_time", "trip_num", "continuous", unit="min"),
        Attribute("SM_cost", "trip_num", "continuous", unit="CHF"),
        Attribute("CAR_time", "trip_num", "continuous", unit="min"),
        Attribute("CAR_cost", "trip_num", "continuous", unit="CHF"),
    ),
    mode_labels=MODES,
    id_column="obs_id",
    respondent_column="respondent_id",
    choice_column="chosen_mode",
    availability_column="available_modes",
)

SCHEMA_DOC = {
    "mode_labels": list(MODES),
    "id_column": "obs_id",
    "respondent_column": "respondent_id",
    "choice_column": "chosen_mode",
    "availability_column": "available_modes",
    "attributes": [
        {"name": a.name, "group": a.group, "kind": a.kind,
         "unit": a.unit, "levels": list(a.levels)}
        for a in SCHEMA.attributes
    ],
}


def generate_survey(path: Path, n_respondents: int = 170, scenarios: int = 3,
                    seed: int = 7) -> Path:
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
            # cost-sensitive synthetic chooser: cheapest-by-time-and-cost wins
            # more often than chance, so targeted retrieval has signal to find
            costs = {
                "TRAIN": rng.uniform(30, 150), "SM": rng.uniform(60, 250),
                "CAR": rng.uniform(20, 120),
            }
            times = {
                "TRAIN": rng.uniform(60, 200), "SM": rng.uniform(20, 90),
                "CAR": rng.uniform(40, 180),
            }
            burden = {m: costs[m] / 250 + times[m] / 200 for m in available}
            chosen = (min(burden, key=burden.get)
                      if rng.random() < 0.7 else rng.choice(available))
            rows.append({
                "obs_id": f"r{r}s{s}", "respondent_id": f"r{r}", **persona,
                "purpose": rng.choice(("commute", "business", "leisure")),
                "ticket_class": rng.choice(("second", "first")),
                "luggage": rng.choice(("none", "one", "several")),
                "who_pays": rng.choice(("self", "employer")),
                **{f"{m}_time": round(times[m], 1) for m in MODES},
                **{f"{m}_cost": round(costs[m], 1) for m in MODES},
                "chosen_mode": chosen,
                "available_modes": "|".join(available),
            })
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return path
