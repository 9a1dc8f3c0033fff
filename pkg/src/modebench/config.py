"""Run configuration document: one JSON file describing datasets, schemas,
endpoints, the experiment matrix, similarity weights, the factor lexicon,
and the prompt template. See README for the full layout."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

from .dataset import (
    AttributeSchema,
    ChoiceInstance,
    NumericNormalizer,
    TrainTestSplit,
    fit_normalizer,
    load_dataset,
    split_train_test,
)
from .gateway import ModelEndpoint
from .prompts import PromptTemplate
from .reasoning import FactorLexicon
from .similarity import SimilarityWeights


class ConfigError(Exception):
    pass


@dataclass
class DatasetSetup:
    name: str
    path: Path
    schema: AttributeSchema
    delimiter: str = ","
    weights: SimilarityWeights = field(default_factory=SimilarityWeights.default)
    aliases: dict = field(default_factory=dict)
    template: Optional[PromptTemplate] = None  # overrides the campaign template


@dataclass
class MatrixSpec:
    models: tuple[str, ...]
    datasets: tuple[str, ...]
    shot_types: tuple[str, ...]
    prompt_styles: tuple[str, ...]
    temperatures: tuple[float, ...]
    k: int = 5
    seed: int = 0
    max_tokens: int = 512


@dataclass
class SplitSpec:
    n_respondents: int = 100
    n_test: int = 200
    seed: int = 0


@dataclass
class RunSetup:
    output_dir: Path
    datasets: dict[str, DatasetSetup]
    endpoints: dict[str, ModelEndpoint]
    matrix: MatrixSpec
    split: SplitSpec
    lexicon: FactorLexicon
    template: PromptTemplate

    def template_for(self, dataset_name: str) -> PromptTemplate:
        setup = self.datasets.get(dataset_name)
        if setup is not None and setup.template is not None:
            return setup.template
        return self.template

    def load_split(self, dataset_name: str) -> tuple[
            TrainTestSplit, NumericNormalizer, list[ChoiceInstance]]:
        """Load one dataset, cut the deterministic split, and fit the
        normalizer on the training pool."""
        if dataset_name not in self.datasets:
            raise ConfigError(
                f"matrix names dataset {dataset_name!r} but the config declares "
                f"no such dataset table"
            )
        setup = self.datasets[dataset_name]
        data = load_dataset(setup.path, setup.schema, delimiter=setup.delimiter)
        split = split_train_test(
            data, self.split.n_respondents, self.split.n_test, self.split.seed
        )
        normalizer = fit_normalizer(split.train, setup.schema)
        return split, normalizer, data


def _weights_from(doc: Optional[Mapping]) -> SimilarityWeights:
    if doc is None:
        return SimilarityWeights.default()
    return SimilarityWeights(
        w_socio=doc["socio"],
        w_trip_num=doc["trip_num"],
        w_trip_cat=doc["trip_cat"],
        w_add=doc["additional"],
    )


def load_config(path: Union[str, Path]) -> RunSetup:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    base = path.parent
    datasets = {}
    for name, entry in doc.get("datasets", {}).items():
        data_path = Path(entry["path"])
        if not data_path.is_absolute():
            data_path = base / data_path
        datasets[name] = DatasetSetup(
            name=name,
            path=data_path,
            schema=AttributeSchema.from_dict(entry["schema"]),
            delimiter=entry.get("delimiter", ","),
            weights=_weights_from(entry.get("similarity_weights")),
            aliases={k.lower(): v for k, v in entry.get("aliases", {}).items()},
            template=(PromptTemplate.from_dict(entry["template"])
                      if "template" in entry else None),
        )

    endpoints = {}
    for name, entry in doc.get("endpoints", {}).items():
        endpoints[name] = ModelEndpoint(
            base_url=entry["base_url"],
            model_name=entry.get("model_name", name),
            api_key_env=entry.get("api_key_env"),
            timeout=entry.get("timeout", 60.0),
            max_retries=entry.get("max_retries", 3),
            backoff=entry.get("backoff", 0.5),
        )

    m = doc.get("matrix", {})
    matrix = MatrixSpec(
        models=tuple(m.get("models", list(endpoints))),
        datasets=tuple(m.get("datasets", list(datasets))),
        shot_types=tuple(m.get("shot_types", ["zeroshot", "fewshot_random", "fewshot_targeted"])),
        prompt_styles=tuple(m.get("prompt_styles", ["direct", "cot_react"])),
        temperatures=tuple(float(t) for t in m.get("temperatures", [0.5, 1.0])),
        k=m.get("k", 5),
        seed=m.get("seed", 0),
        max_tokens=m.get("max_tokens", 512),
    )

    s = doc.get("split", {})
    split = SplitSpec(
        n_respondents=s.get("n_respondents", 100),
        n_test=s.get("n_test", 200),
        seed=s.get("seed", 0),
    )

    lexicon = FactorLexicon(tuple(doc["lexicon"])) if "lexicon" in doc else FactorLexicon()
    template = (
        PromptTemplate.from_dict(doc["template"]) if "template" in doc else PromptTemplate()
    )

    out = Path(doc.get("output_dir", "runs"))
    if not out.is_absolute():
        out = base / out
    return RunSetup(
        output_dir=out,
        datasets=datasets,
        endpoints=endpoints,
        matrix=matrix,
        split=split,
        lexicon=lexicon,
        template=template,
    )
