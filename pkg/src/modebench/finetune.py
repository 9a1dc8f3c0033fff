"""Supervised fine-tuning corpus with leakage-safe loss masks.

Instructions are the same narratives the benchmark prompts use, rendered
without the answer; the ground-truth mode travels in a separate field. Label
masking replaces prompt-position token labels with the ignore index -100 so
a causal-LM loss only trains on answer tokens. This module never tokenizes:
token ids are opaque integers from whichever tokenizer the external trainer
uses. The emitted configuration carries the adapter and schedule
hyperparameters; the training loop itself is external.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .dataset import AttributeSchema, ChoiceInstance
from .prompts import PromptTemplate, leaks_answer, render_instance

IGNORE_INDEX = -100


class LeakageError(Exception):
    """Ground-truth labels reached text or rows they must not reach."""


@dataclass(frozen=True)
class TrainingExample:
    instruction: str
    selected_mode: str
    split: str  # train | validation
    instance_id: str


@dataclass(frozen=True)
class FinetuneCorpus:
    examples: tuple[TrainingExample, ...]
    split_seed: int

    @property
    def n_train(self) -> int:
        return sum(1 for e in self.examples if e.split == "train")

    @property
    def n_validation(self) -> int:
        return sum(1 for e in self.examples if e.split == "validation")


@dataclass(frozen=True)
class MaskedSequence:
    tokens: tuple[int, ...]
    labels: tuple[int, ...]
    prompt_len: int


@dataclass(frozen=True)
class FinetuneConfig:
    """Adapter and schedule hyperparameters emitted for the external trainer.

    Batch size and adapter dropout are deliberately absent: they are not
    pinned anywhere authoritative, so the trainer must choose them
    explicitly rather than inherit a guess.
    """

    lora_rank: int = 32
    lora_alpha: int = 64
    learning_rate: float = 2e-5
    max_epochs: int = 5
    early_stop_patience: int = 2
    selection_metric: str = "f1_weighted"
    train_fraction: float = 0.9
    validation_fraction: float = 0.1
    loss_masking: bool = True
    ignore_index: int = IGNORE_INDEX
    quantization: str = "nf4-4bit"  # applied by the trainer, documented here
    optimizer: str = "paged_adamw"

    def to_dict(self) -> dict:
        return asdict(self)


def build_training_corpus(train: Sequence[ChoiceInstance],
                          schema: AttributeSchema,
                          template: Optional[PromptTemplate] = None,
                          test_ids: Iterable[str] = (),
                          seed: int = 0,
                          validation_fraction: float = 0.1) -> FinetuneCorpus:
    """One instruction/label pair per training instance, with a seeded
    train/validation partition.

    Refuses instances that overlap the benchmark test set and scans every
    instruction for its own label in answer position.
    """
    if not train:
        raise ValueError("empty training pool")
    template = template or PromptTemplate()
    test_ids = set(test_ids)
    overlap = [inst.id for inst in train if inst.id in test_ids]
    if overlap:
        raise LeakageError(f"training pool overlaps the test split: {overlap[:5]}")

    n_val = int(round(validation_fraction * len(train)))
    n_val = min(n_val, len(train) - 1) if len(train) > 1 else 0
    val_positions = set(random.Random(seed).sample(range(len(train)), n_val))

    examples = []
    for pos, inst in enumerate(train):
        instruction = render_instance(inst, schema, include_choice=False, template=template)
        if leaks_answer(instruction, inst.chosen_mode):
            raise LeakageError(f"instance {inst.id}: instruction states its own answer")
        examples.append(TrainingExample(
            instruction=instruction,
            selected_mode=inst.chosen_mode,
            split="validation" if pos in val_positions else "train",
            instance_id=inst.id,
        ))
    return FinetuneCorpus(examples=tuple(examples), split_seed=seed)


def mask_labels(tokens: Sequence[int], prompt_len: int) -> MaskedSequence:
    """Labels for the first prompt_len positions become the ignore index;
    the rest copy their tokens, leaving only answer positions trainable."""
    if prompt_len <= 0:
        raise ValueError("prompt_len must be positive")
    if prompt_len >= len(tokens):
        raise ValueError(
            f"prompt_len {prompt_len} leaves no answer tokens in a sequence of {len(tokens)}"
        )
    labels = tuple([IGNORE_INDEX] * prompt_len) + tuple(tokens[prompt_len:])
    return MaskedSequence(tokens=tuple(tokens), labels=labels, prompt_len=prompt_len)


def export_finetune_bundle(corpus: FinetuneCorpus, config: FinetuneConfig,
                           path: Union[str, Path]) -> Path:
    """Write corpus.jsonl plus finetune_config.json under the given
    directory; returns the bundle directory."""
    if not corpus.examples:
        raise ValueError("refusing to export an empty corpus")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as handle:
        for example in corpus.examples:
            handle.write(json.dumps(asdict(example), sort_keys=True) + "\n")
    manifest = {
        "split_seed": corpus.split_seed,
        "n_train": corpus.n_train,
        "n_validation": corpus.n_validation,
        **config.to_dict(),
    }
    (out / "finetune_config.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return out


def load_finetune_bundle(path: Union[str, Path]) -> tuple[FinetuneCorpus, dict]:
    """Reload an exported bundle; the corpus round-trips exactly."""
    out = Path(path)
    examples = []
    with (out / "corpus.jsonl").open(encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                examples.append(TrainingExample(**json.loads(line)))
    manifest = json.loads((out / "finetune_config.json").read_text(encoding="utf-8"))
    corpus = FinetuneCorpus(examples=tuple(examples), split_seed=manifest["split_seed"])
    return corpus, manifest
