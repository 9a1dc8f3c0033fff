"""Experiment matrix enumeration, resumable cell execution, and reporting.

Every cell of the (model x dataset x shot type x prompt style x temperature)
matrix carries a stable fingerprint hashed over its full configuration
including the prompt template version. Records persist one per agent into
the cell's append-only store; resuming a cell skips agents already persisted,
so a completed cell re-runs with zero network calls and an interrupted
campaign picks up exactly where it stopped.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from itertools import product
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .analysis import (
    ExperimentCell,
    UnbalancedDesignError,
    UndefinedSharesError,
    learning_style_gain,
    learning_style_summary,
    rank_models,
    variance_decomposition,
)
from .dataset import AttributeSchema, NumericNormalizer, TrainTestSplit
from .gateway import GatewayError, GenerationParams, RecordStore, Transport, run_single
from .metrics import MetricsReport, evaluate_run
from .prompts import PromptTemplate, assemble_prompt
from .reasoning import FactorLexicon, esi_aggregate
from .similarity import SimilarityWeights, select_random, select_targeted

SHOT_TYPES = ("zeroshot", "fewshot_random", "fewshot_targeted")


class ManifestError(ValueError):
    pass


def _sanitize(part: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "-" for c in str(part))


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of the experiment matrix."""

    model: str
    dataset: str
    shot_type: str
    prompt_style: str
    temperature: float
    k: int = 5
    seed: int = 0
    template_version: str = "v1"

    def __post_init__(self):
        if self.shot_type not in SHOT_TYPES:
            raise ManifestError(f"unknown shot type {self.shot_type!r}")

    def fingerprint(self) -> str:
        doc = json.dumps(asdict(self), sort_keys=True).encode("utf-8")
        return hashlib.sha256(doc).hexdigest()[:12]

    def cell_name(self) -> str:
        return "_".join(
            _sanitize(p)
            for p in (self.dataset, self.model, self.shot_type,
                      self.prompt_style, format(self.temperature, "g"))
        )


@dataclass(frozen=True)
class RunManifest:
    configs: tuple[ExperimentConfig, ...]

    def __post_init__(self):
        prints = [c.fingerprint() for c in self.configs]
        if len(set(prints)) != len(prints):
            raise ManifestError("duplicate fingerprints in manifest")

    def __len__(self) -> int:
        return len(self.configs)

    def planned_calls(self, test_size: int) -> int:
        return len(self.configs) * test_size

    def statuses(self, store_dir: Union[str, Path], test_size: int) -> dict[str, str]:
        """pending/partial/complete per fingerprint, derived purely from the
        persisted record counts."""
        store_dir = Path(store_dir)
        out = {}
        for config in self.configs:
            path = store_dir / (config.cell_name() + ".records.jsonl")
            done = len(RecordStore(path).agent_ids(config.fingerprint())) if path.exists() else 0
            if done == 0:
                out[config.fingerprint()] = "pending"
            elif done < test_size:
                out[config.fingerprint()] = "partial"
            else:
                out[config.fingerprint()] = "complete"
        return out


def enumerate_matrix(models: Sequence[str], datasets: Sequence[str],
                     shots: Sequence[str], styles: Sequence[str],
                     temps: Sequence[float], k: int = 5, seed: int = 0,
                     template_version: str = "v1") -> RunManifest:
    """Full Cartesian product of the axes, in deterministic order."""
    for axis_name, axis in (("models", models), ("datasets", datasets), ("shots", shots),
                            ("styles", styles), ("temps", temps)):
        if not axis:
            raise ManifestError(f"axis {axis_name!r} is empty")
        if len(set(axis)) != len(tuple(axis)):
            raise ManifestError(f"axis {axis_name!r} has duplicate entries")
    configs = tuple(
        ExperimentConfig(
            model=m, dataset=d, shot_type=s, prompt_style=p, temperature=float(t),
            k=k, seed=seed, template_version=template_version,
        )
        for m, d, s, p, t in product(models, datasets, shots, styles, temps)
    )
    return RunManifest(configs=configs)


def derive_agent_seed(run_seed: int, fingerprint: str, agent_id: str) -> int:
    """Each agent draws its own random exemplars, reproducibly."""
    key = f"{run_seed}|{fingerprint}|{agent_id}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


@dataclass
class CellSummary:
    fingerprint: str
    cell_name: str
    status: str
    n_records: int
    new_calls: int
    metrics: Optional[MetricsReport] = None
    error: Optional[str] = None


def run_experiment(config: ExperimentConfig,
                   split: TrainTestSplit,
                   transport: Transport,
                   schema: AttributeSchema,
                   weights: SimilarityWeights,
                   normalizer: NumericNormalizer,
                   store_dir: Union[str, Path],
                   template: Optional[PromptTemplate] = None,
                   aliases: Optional[Mapping[str, str]] = None,
                   max_tokens: int = 512,
                   parallel: int = 1) -> CellSummary:
    """Execute one cell over the test set, resuming past persisted agents.

    Parse failures and out-of-set choices degrade to INVALID records and the
    cell continues; a transport failure stops the cell with partial status,
    safe to resume. A complete cell is evaluated and its metrics document
    written next to the record store.
    """
    store_dir = Path(store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    template = template or PromptTemplate()
    fingerprint = config.fingerprint()
    store = RecordStore(store_dir / (config.cell_name() + ".records.jsonl"))
    done = store.agent_ids(fingerprint)
    pending = [inst for inst in split.test if inst.id not in done]
    params = GenerationParams(temperature=config.temperature, max_tokens=max_tokens)

    tasks = []
    for subject in pending:
        audit_rows: list[dict] = []
        if config.shot_type == "zeroshot":
            examples = []
        elif config.shot_type == "fewshot_random":
            agent_seed = derive_agent_seed(config.seed, fingerprint, subject.id)
            examples = select_random(split.train, config.k, agent_seed)
        else:
            chosen = select_targeted(subject, split.train, config.k,
                                     weights, normalizer, schema)
            examples = [inst for inst, _ in chosen]
            audit_rows = [
                {"agent_id": subject.id, "rank": rank, "example_id": inst.id,
                 **breakdown.to_dict()}
                for rank, (inst, breakdown) in enumerate(chosen, start=1)
            ]
        bundle = assemble_prompt(subject, examples, config.prompt_style, schema,
                                 k=config.k, template=template)
        tasks.append((bundle, audit_rows))

    audit_path = store_dir / (config.cell_name() + ".similarity.jsonl")
    new_calls = 0
    error: Optional[str] = None

    def call(task):
        bundle, _ = task
        return run_single(transport, bundle, params, fingerprint, aliases)

    executor = ThreadPoolExecutor(max_workers=parallel) if parallel > 1 else None
    try:
        results = executor.map(call, tasks) if executor else map(call, tasks)
        for (_, audit_rows), record in zip(tasks, results):
            store.append(record)
            new_calls += 1
            if audit_rows:
                with audit_path.open("a", encoding="utf-8") as handle:
                    for row in audit_rows:
                        handle.write(json.dumps(row, sort_keys=True) + "\n")
    except GatewayError as exc:
        error = str(exc)
    finally:
        if executor:
            executor.shutdown(wait=False, cancel_futures=True)

    n_records = len(store.agent_ids(fingerprint))
    if n_records < len(split.test):
        return CellSummary(fingerprint, config.cell_name(),
                           "partial" if n_records else "pending",
                           n_records, new_calls, error=error)

    metrics = _evaluate_cell(config, store, split, schema)
    metrics_path = store_dir / (config.cell_name() + ".metrics.json")
    doc = {"cell": config.cell_name(), "fingerprint": fingerprint,
           "config": asdict(config), "metrics": metrics.to_dict()}
    metrics_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return CellSummary(fingerprint, config.cell_name(), "complete",
                       n_records, new_calls, metrics=metrics)


def _evaluate_cell(config: ExperimentConfig, store: RecordStore,
                   split: TrainTestSplit, schema: AttributeSchema) -> MetricsReport:
    by_agent = {
        r.agent_id: r for r in store.load()
        if r.config_fingerprint == config.fingerprint()
    }
    records = [by_agent[inst.id] for inst in split.test]
    truths = {inst.id: inst.chosen_mode for inst in split.test}
    return evaluate_run(records, truths, schema.mode_labels)


METRIC_COLUMNS = (
    "accuracy", "precision_macro", "recall_macro", "f1_macro", "f1_weighted",
    "dist_mae", "jsd", "cross_entropy", "invalid_count", "n_records",
)


def report(manifest: RunManifest,
           store_dir: Union[str, Path],
           splits: Mapping[str, TrainTestSplit],
           schemas: Mapping[str, AttributeSchema],
           out_dir: Union[str, Path],
           lexicon: Optional[FactorLexicon] = None) -> dict:
    """Consolidate complete cells into the run-level metrics table, emit the
    reasoning-strength aggregate, and list incomplete cells."""
    store_dir, out_dir = Path(store_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lexicon = lexicon or FactorLexicon()

    table_rows = []
    incomplete = []
    esi_groups: dict[tuple, list[str]] = {}
    for config in manifest.configs:
        split = splits[config.dataset]
        schema = schemas[config.dataset]
        store = RecordStore(store_dir / (config.cell_name() + ".records.jsonl"))
        by_agent = {
            r.agent_id: r for r in store.load()
            if r.config_fingerprint == config.fingerprint()
        }
        if len(by_agent) < len(split.test):
            incomplete.append(
                {"fingerprint": config.fingerprint(), "cell": config.cell_name(),
                 "records": len(by_agent), "expected": len(split.test)}
            )
            continue
        records = [by_agent[inst.id] for inst in split.test]
        truths = {inst.id: inst.chosen_mode for inst in split.test}
        metrics = evaluate_run(records, truths, schema.mode_labels)
        row = {
            "fingerprint": config.fingerprint(),
            "dataset": config.dataset,
            "model": config.model,
            "shot_type": config.shot_type,
            "prompt_style": config.prompt_style,
            "temperature": format(config.temperature, "g"),
        }
        row.update({k: metrics.to_dict()[k] for k in METRIC_COLUMNS})
        table_rows.append(row)
        key = (config.dataset, config.model, config.shot_type,
               config.prompt_style, format(config.temperature, "g"))
        esi_groups[key] = [r.reasoning for r in records]

    table_path = out_dir / "metrics_table.csv"
    header = ["fingerprint", "dataset", "model", "shot_type", "prompt_style",
              "temperature", *METRIC_COLUMNS]
    with table_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=header)
        writer.writeheader()
        writer.writerows(table_rows)

    esi_rows = esi_aggregate(esi_groups, lexicon)
    esi_path = out_dir / "esi_aggregate.csv"
    with esi_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["dataset", "model", "shot_type", "prompt_style",
                         "temperature", "mean_esi", "iqr_esi", "count"])
        for row in esi_rows:
            writer.writerow([*row["group"], row["mean"], row["iqr"], row["count"]])

    incomplete_path = out_dir / "incomplete_cells.json"
    incomplete_path.write_text(
        json.dumps(incomplete, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return {"table": str(table_path), "rows": len(table_rows),
            "incomplete": len(incomplete)}


def cells_from_table(path: Union[str, Path]) -> list[ExperimentCell]:
    """Read a metrics table (ours or user-supplied) into analysis cells.

    Only the five factor columns and f1_weighted are required, so externally
    produced runs can be compared in the same format.
    """
    cells = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            cells.append(ExperimentCell(
                model=row["model"],
                dataset=row["dataset"],
                shot_type=row["shot_type"],
                prompt_style=row["prompt_style"],
                temperature=float(row["temperature"]),
                f1_weighted=float(row["f1_weighted"]),
            ))
    return cells


def analyze_cells(cells: Sequence[ExperimentCell], out_dir: Union[str, Path]) -> dict:
    """Cross-cell analysis tables plus one plot-data document per figure
    analogue (variance bars, rank chart, gain chart)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    factors = ("model", "shot_type", "prompt_style", "temperature")
    datasets = sorted({c.dataset for c in cells})

    variance_rows = []
    for dataset in datasets:
        subset = [c for c in cells if c.dataset == dataset]
        try:
            share = variance_decomposition(subset, factors)
        except (UnbalancedDesignError, UndefinedSharesError) as exc:
            variance_rows.append({"dataset": dataset, "error": str(exc)})
            continue
        for factor, value in share.shares.items():
            variance_rows.append({"dataset": dataset, "factor": factor,
                                  "share_pct": 100.0 * value})
    _write_csv(out_dir / "variance_shares.csv",
               ["dataset", "factor", "share_pct", "error"], variance_rows)

    ranking = rank_models(cells)
    rank_rows = [
        {"dataset": key[0], "shot_type": key[1], **row}
        for key, rows in sorted(ranking.items()) for row in rows
    ]
    _write_csv(out_dir / "model_ranking.csv",
               ["dataset", "shot_type", "model", "mean_f1_weighted", "rank"], rank_rows)

    gain_rows = learning_style_gain(cells)
    _write_csv(out_dir / "learning_style_gains.csv",
               ["model", "dataset", "transition", "baseline_f1", "target_f1",
                "gain_pct", "flag"], gain_rows)

    summary_rows = learning_style_summary(cells)
    _write_csv(out_dir / "learning_style_summary.csv",
               ["dataset", "shot_type", "top_mean", "top_mean_model", "top_peak",
                "top_peak_model", "tightest_iqr", "tightest_iqr_model"], summary_rows)

    (out_dir / "variance_bars.json").write_text(
        json.dumps({"kind": "variance_bars", "rows": variance_rows},
                   sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (out_dir / "rank_chart.json").write_text(
        json.dumps({"kind": "rank_chart", "rows": rank_rows},
                   sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (out_dir / "gain_chart.json").write_text(
        json.dumps({"kind": "gain_chart", "rows": gain_rows},
                   sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return {
        "variance_rows": len(variance_rows),
        "rank_rows": len(rank_rows),
        "gain_rows": len(gain_rows),
        "summary_rows": len(summary_rows),
    }


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Mapping]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(header))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in header})
