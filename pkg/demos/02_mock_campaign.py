"""Walkthrough: a complete offline campaign through the CLI verbs.

Writes a campaign config for 2 mock models x 3 shot types x 2 prompt styles
x 2 temperatures over a synthetic survey, then drives plan -> run -> report
-> analyze with the deterministic mock endpoint. Re-running is free: every
cell is fingerprinted and resumes from its record store.
"""

import json
from pathlib import Path

from modebench.cli import main

from survey_data import SCHEMA_DOC, generate_survey

out = Path(__file__).parent / "_out"
generate_survey(out / "survey.csv", n_respondents=60, scenarios=3)

config = {
    "output_dir": "campaign",
    "split": {"n_respondents": 40, "n_test": 30, "seed": 7},
    "datasets": {
        "synthetic-sp": {
            "path": "survey.csv",
            "schema": SCHEMA_DOC,
            "similarity_weights": {"socio": 0.35, "trip_num": 0.30,
                                   "trip_cat": 0.15, "additional": 0.20},
            "aliases": {"swissmetro": "SM"},
        }
    },
    "endpoints": {
        "mock-small": {"base_url": "http://localhost:1234"},
        "mock-large": {"base_url": "http://localhost:1234"},
    },
    "matrix": {
        "models": ["mock-small", "mock-large"],
        "datasets": ["synthetic-sp"],
        "shot_types": ["zeroshot", "fewshot_random", "fewshot_targeted"],
        "prompt_styles": ["direct", "cot_react"],
        "temperatures": [0.5, 1.0],
        "k": 5,
        "seed": 0,
    },
}
config_path = out / "campaign.json"
config_path.write_text(json.dumps(config, indent=2))

for verb in (["plan"], ["run", "--mock"], ["report"], ["analyze"]):
    print(f"\n$ modebench {verb[0]} --config {config_path.name}", flush=True)
    main([verb[0], "--config", str(config_path)] + verb[1:])

print("\nartifacts under", out / "campaign")
for path in sorted((out / "campaign").rglob("*")):
    if path.is_file():
        print("  ", path.relative_to(out))
