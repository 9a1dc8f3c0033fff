"""Command-line front end: plan, run, report, analyze.

All state lives in the config document and the output directory; the CLI is
a thin layer over the library so campaigns are equally drivable from code.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .config import RunSetup, load_config
from .gateway import HttpTransport
from .mocking import DeterministicMock
from .runner import (
    RunManifest,
    analyze_cells,
    cells_from_table,
    enumerate_matrix,
    report,
    run_experiment,
)


def build_manifest(setup: RunSetup) -> RunManifest:
    """Enumerate the matrix, stamping each config with its dataset's template
    version and content hash so edited wording re-fingerprints the cell."""
    m = setup.matrix
    manifest = enumerate_matrix(
        models=m.models, datasets=m.datasets, shots=m.shot_types,
        styles=m.prompt_styles, temps=m.temperatures, k=m.k, seed=m.seed,
    )
    labels = {
        name: f"{t.version}+{t.fingerprint()}"
        for name, t in ((d, setup.template_for(d)) for d in m.datasets
                        if d in setup.datasets)
    }
    fallback = f"{setup.template.version}+{setup.template.fingerprint()}"
    configs = tuple(
        replace(c, template_version=labels.get(c.dataset, fallback))
        for c in manifest.configs
    )
    return RunManifest(configs=configs)


def _load_splits(setup: RunSetup, names: Sequence[str]):
    splits, normalizers, schemas = {}, {}, {}
    for name in names:
        split, normalizer, _ = setup.load_split(name)
        splits[name] = split
        normalizers[name] = normalizer
        schemas[name] = setup.datasets[name].schema
    return splits, normalizers, schemas


def cmd_plan(args) -> int:
    setup = load_config(args.config)
    manifest = build_manifest(setup)
    test_size = setup.split.n_test
    print(f"configs: {len(manifest)}")
    print(f"planned calls: {manifest.planned_calls(test_size)}")
    store_dir = setup.output_dir / "records"
    statuses = manifest.statuses(store_dir, test_size)
    counts = {"pending": 0, "partial": 0, "complete": 0}
    for config in manifest.configs:
        status = statuses[config.fingerprint()]
        counts[status] += 1
        print(f"{config.fingerprint()}  {status:8s}  {config.cell_name()}")
    print(f"complete: {counts['complete']}  partial: {counts['partial']}  "
          f"pending: {counts['pending']}")
    return 0


def cmd_run(args) -> int:
    setup = load_config(args.config)
    manifest = build_manifest(setup)
    only = set(args.only or [])
    configs = [c for c in manifest.configs if not only or c.fingerprint() in only]
    if only and len(configs) != len(only):
        missing = only - {c.fingerprint() for c in configs}
        print(f"unknown fingerprints: {sorted(missing)}", file=sys.stderr)
        return 2
    dataset_names = sorted({c.dataset for c in configs})
    splits, normalizers, schemas = _load_splits(setup, dataset_names)
    store_dir = setup.output_dir / "records"

    failures = 0
    for config in configs:
        dataset = setup.datasets[config.dataset]
        if args.mock:
            transport = DeterministicMock(salt=config.fingerprint())
        else:
            transport = HttpTransport(setup.endpoints[config.model])
        summary = run_experiment(
            config=config,
            split=splits[config.dataset],
            transport=transport,
            schema=schemas[config.dataset],
            weights=dataset.weights,
            normalizer=normalizers[config.dataset],
            store_dir=store_dir,
            template=setup.template_for(config.dataset),
            aliases=dataset.aliases,
            max_tokens=setup.matrix.max_tokens,
            parallel=args.parallel,
        )
        line = (f"{summary.fingerprint}  {summary.status:8s}  "
                f"{summary.n_records:4d} records  {summary.new_calls:4d} new  "
                f"{summary.cell_name}")
        if summary.error:
            line += f"  [{summary.error}]"
            failures += 1
        print(line)
    return 1 if failures else 0


def cmd_report(args) -> int:
    setup = load_config(args.config)
    manifest = build_manifest(setup)
    splits, _, schemas = _load_splits(setup, sorted(setup.matrix.datasets))
    outcome = report(
        manifest=manifest,
        store_dir=setup.output_dir / "records",
        splits=splits,
        schemas=schemas,
        out_dir=setup.output_dir / "reports",
        lexicon=setup.lexicon,
    )
    print(f"metrics table: {outcome['table']} ({outcome['rows']} complete cells, "
          f"{outcome['incomplete']} incomplete)")
    return 0


def cmd_analyze(args) -> int:
    if args.table:
        table = Path(args.table)
    else:
        setup = load_config(args.config)
        table = setup.output_dir / "reports" / "metrics_table.csv"
    if not table.exists():
        print(f"no metrics table at {table}; run `report` first", file=sys.stderr)
        return 2
    cells = cells_from_table(table)
    if not cells:
        print("metrics table holds no complete cells", file=sys.stderr)
        return 2
    out_dir = table.parent / "analysis" if args.table else setup.output_dir / "analysis"
    outcome = analyze_cells(cells, out_dir)
    print(f"analysis written to {out_dir} "
          f"({outcome['rank_rows']} rank rows, {outcome['gain_rows']} gain rows)")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modebench",
        description="Benchmark chat-completion LLMs as synthetic commuters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="enumerate the matrix and show cell statuses")
    plan.add_argument("--config", required=True)
    plan.set_defaults(func=cmd_plan)

    run = sub.add_parser("run", help="execute pending cells, resumably")
    run.add_argument("--config", required=True)
    run.add_argument("--only", nargs="*", metavar="FINGERPRINT")
    run.add_argument("--parallel", type=int, default=1,
                     help="max in-flight requests within a cell")
    run.add_argument("--mock", action="store_true",
                     help="answer with the deterministic offline mock")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="consolidate metrics over complete cells")
    rep.add_argument("--config", required=True)
    rep.set_defaults(func=cmd_report)

    analyze = sub.add_parser("analyze", help="variance shares, rankings, gains")
    analyze.add_argument("--config")
    analyze.add_argument("--table", help="analyze a user-supplied metrics table instead")
    analyze.set_defaults(func=cmd_analyze)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command == "analyze" and not (args.config or args.table):
        parser.error("analyze needs --config or --table")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
