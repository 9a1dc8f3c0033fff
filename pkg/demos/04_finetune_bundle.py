"""Walkthrough: preparing a fine-tuning bundle from the training split.

Builds the instruction corpus (leakage-checked, 90/10 partitioned), shows
label masking on a toy token sequence, and exports corpus.jsonl plus the
trainer configuration. The training loop itself belongs to external PEFT
tooling; this produces its exact inputs.
"""

from pathlib import Path

from modebench import (
    FinetuneConfig,
    build_training_corpus,
    export_finetune_bundle,
    load_dataset,
    mask_labels,
    split_train_test,
)

from survey_data import SCHEMA, generate_survey

out = Path(__file__).parent / "_out"
survey = generate_survey(out / "survey.csv", n_respondents=60, scenarios=3)
data = load_dataset(survey, SCHEMA)
split = split_train_test(data, n_respondents=40, n_test=30, seed=7)

corpus = build_training_corpus(
    list(split.train), SCHEMA,
    test_ids=[inst.id for inst in split.test], seed=0,
)
print(f"corpus: {len(corpus.examples)} examples "
      f"({corpus.n_train} train / {corpus.n_validation} validation)\n")

example = corpus.examples[0]
print("one instruction (answer travels separately):")
print("  " + example.instruction.replace("\n", "\n  "))
print(f"  -> selected_mode: {example.selected_mode}\n")

# loss masking: only answer positions may train
tokens = [17, 4, 93, 8, 21, 5, 66]
masked = mask_labels(tokens, prompt_len=5)
print("tokens ", list(masked.tokens))
print("labels ", list(masked.labels), " (prompt positions ignored at -100)\n")

bundle_dir = export_finetune_bundle(corpus, FinetuneConfig(), out / "finetune_bundle")
print("bundle written:")
for path in sorted(bundle_dir.iterdir()):
    print("  ", path.relative_to(out))
print("\ntrainer config:")
print((bundle_dir / "finetune_config.json").read_text())
