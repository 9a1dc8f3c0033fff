"""Walkthrough: mixed-type similarity and targeted example retrieval.

Generates a synthetic survey, fits the numeric normalizer on the training
pool, and shows how one test commuter's nearest training examples are found:
per-component scores, the weighted total, and targeted vs random selection.
"""

from pathlib import Path

from modebench import (
    SimilarityWeights,
    fit_normalizer,
    load_dataset,
    numeric_group_similarity,
    ordinal_similarity,
    select_random,
    select_targeted,
    split_train_test,
    total_similarity,
)

from survey_data import SCHEMA, generate_survey

out = Path(__file__).parent / "_out"
survey = generate_survey(out / "survey.csv", n_respondents=60, scenarios=3)
data = load_dataset(survey, SCHEMA)
split = split_train_test(data, n_respondents=40, n_test=20, seed=7)
normalizer = fit_normalizer(split.train, SCHEMA)
weights = SimilarityWeights(0.35, 0.30, 0.15, 0.20)

print(f"{len(split.train)} training rows, {len(split.test)} test rows\n")

# the building blocks -------------------------------------------------------
print("ordinal proximity: same level ->", ordinal_similarity(3, 3),
      " adjacent ->", ordinal_similarity(2, 3),
      " distant ->", ordinal_similarity(1, 4))
print("inverse-distance on scaled costs: 0.81 vs 0.80 ->",
      round(numeric_group_similarity([0.81], [0.80]), 3),
      " 0.81 vs 0.20 ->",
      round(numeric_group_similarity([0.81], [0.20]), 3))

# a full pairwise breakdown --------------------------------------------------
subject = split.test[0]
candidate = split.train[0]
breakdown = total_similarity(subject, candidate, weights, normalizer, SCHEMA)
print(f"\nsubject {subject.id} vs candidate {candidate.id}:")
for name, value in breakdown.to_dict().items():
    print(f"  {name:12s} {value:.4f}" if value is not None else f"  {name:12s} n/a")

# targeted retrieval ---------------------------------------------------------
print(f"\ntop 5 targeted examples for {subject.id}:")
for inst, b in select_targeted(subject, list(split.train), 5, weights,
                               normalizer, SCHEMA):
    print(f"  {inst.id:8s} total={b.total:.4f}  chose {inst.chosen_mode}")

print("\nrandom draw for comparison:")
for inst in select_random(list(split.train), 5, seed=0):
    print(f"  {inst.id:8s} chose {inst.chosen_mode}")
