"""Command-line entry point.

Subcommands: ``run`` (one experiment), ``simplify`` (phenotype extraction
for a single tree file), ``batch`` (seeds x operator settings x datasets
matrix with parallel jobs), ``datasets`` (list resolvable datasets).

Exit codes: 0 success, 1 configuration error, 2 data/parse error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .data import BUILTIN_DATASETS, DataError, load_csv, load_registry
from .evolution import GPConfig
from .experiment import DEFAULT_T_LEVELS, RunManifest, run_batch, run_experiment
from .phenotype import simplify
from .semantics import evaluate_with_cache
from .trees import ParseError, TreeError, parse


def _parse_t_levels(text: str) -> tuple:
    levels = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        value = float(chunk)
        if not 0.0 <= value < 100.0:
            raise ValueError(f"t level must be in [0, 100), got {value}")
        if value > 0.0:
            levels.append(value)
    return tuple(sorted(set(levels)))


def _config_from_args(args) -> GPConfig:
    if getattr(args, "config", None):
        config = GPConfig.from_json(Path(args.config).read_text())
    else:
        config = GPConfig()
    overrides = {}
    for flag, field_name in (
        ("pc", "p_crossover"),
        ("pm", "p_mutation"),
        ("pop", "population_size"),
        ("generations", "generations"),
        ("pressure", "tournament_pressure"),
        ("init_depth", "init_max_depth"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    if getattr(args, "elitism", False):
        overrides["elitism"] = True
    return replace(config, **overrides) if overrides else config


def cmd_run(args) -> int:
    config = _config_from_args(args)
    t_levels = _parse_t_levels(args.t_levels) if args.t_levels else DEFAULT_T_LEVELS
    manifest = RunManifest(
        dataset=args.dataset,
        seed=args.seed,
        config=config,
        t_levels=t_levels,
        standardize_scope=args.standardize_scope,
        monitor=not args.no_monitor,
        registry_path=args.registry,
    )
    result = run_experiment(manifest, args.out)
    print(f"run {result.run_id}: {result.rows_written} metric rows -> {result.metrics_path}")
    return 0


def cmd_simplify(args) -> int:
    if args.t < 0 or args.t >= 100:
        raise ValueError(f"--t must be in [0, 100), got {args.t}")
    tree_text = Path(args.tree).read_text().strip()
    tree = parse(tree_text)
    dataset = load_csv(args.data)
    semantics = evaluate_with_cache(tree, dataset.features)
    report = simplify(tree, semantics, args.t)
    payload = report.to_json(indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    else:
        print(payload)
    return 0


def cmd_batch(args) -> int:
    config = _config_from_args(args)
    t_levels = _parse_t_levels(args.t_levels) if args.t_levels else DEFAULT_T_LEVELS
    datasets = [d.strip() for d in args.dataset.split(",") if d.strip()]
    if args.preset == "full":
        runs = 30
        pc_values = [0.8, 0.2]
    else:
        runs = args.runs
        pc_values = [float(x) for x in args.pc_list.split(",")] if args.pc_list else [config.p_crossover]
    if not datasets:
        raise ValueError("no datasets given")
    manifests = []
    for dataset in datasets:
        for pc in pc_values:
            run_config = replace(config, p_crossover=pc, p_mutation=round(1.0 - pc, 12))
            for offset in range(runs):
                manifests.append(
                    RunManifest(
                        dataset=dataset,
                        seed=args.seed + offset,
                        config=run_config,
                        t_levels=t_levels,
                        standardize_scope=args.standardize_scope,
                        registry_path=args.registry,
                    )
                )
    successes, failures = run_batch(manifests, args.out, jobs=args.jobs)
    print(f"batch: {len(successes)} succeeded, {len(failures)} failed")
    for run_id, error in failures:
        print(f"  FAILED {run_id}: {error}", file=sys.stderr)
    if successes:
        print(f"combined metrics: {Path(args.out) / 'combined.csv'}")
    return 0 if not failures else 3


def cmd_datasets(args) -> int:
    registry = load_registry(args.registry)
    print("built-in synthetic datasets:")
    for name, (gen_id, n, noise, _seed) in sorted(BUILTIN_DATASETS.items()):
        print(f"  {name}: generator={gen_id} n={n} noise={noise}")
    if registry:
        print("registry datasets:")
        for name, path in sorted(registry.items()):
            status = "ok" if Path(path).exists() else "MISSING"
            print(f"  {name}: {path} [{status}]")
    else:
        print("registry: empty (set PHENOGP_DATA_DIR or pass --registry)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phenogp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--pc", type=float, default=None, help="crossover probability")
        p.add_argument("--pm", type=float, default=None, help="mutation probability")
        p.add_argument("--pop", type=int, default=None, help="population size")
        p.add_argument("--generations", type=int, default=None)
        p.add_argument("--pressure", type=float, default=None, help="tournament pressure")
        p.add_argument("--init-depth", dest="init_depth", type=int, default=None)
        p.add_argument("--elitism", action="store_true")
        p.add_argument("--t-levels", dest="t_levels", default=None,
                       help="comma-separated approximation percentiles, e.g. 2.5,5,10,20")
        p.add_argument("--standardize-scope", choices=["train", "full"], default="train")
        p.add_argument("--registry", default=None, help="dataset registry JSON path")

    p_run = sub.add_parser("run", help="execute one run and write metrics")
    add_common(p_run)
    p_run.add_argument("--dataset", required=True, help="CSV path, registry name or built-in id")
    p_run.add_argument("--out", default="phenogp-run", help="output directory")
    p_run.add_argument("--no-monitor", action="store_true",
                       help="skip phenotype extraction (genotype metrics only)")
    p_run.set_defaults(func=cmd_run)

    p_simp = sub.add_parser("simplify", help="extract the phenotype of one tree")
    p_simp.add_argument("--tree", required=True, help="file containing one tree expression")
    p_simp.add_argument("--data", required=True, help="CSV file (last column ignored as target)")
    p_simp.add_argument("--t", type=float, default=0.0, help="approximation percentile (0 = exact)")
    p_simp.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p_simp.set_defaults(func=cmd_simplify)

    p_batch = sub.add_parser("batch", help="run a seeds x operators x datasets matrix")
    add_common(p_batch)
    p_batch.add_argument("--dataset", required=True,
                         help="comma-separated dataset names/paths")
    p_batch.add_argument("--runs", type=int, default=1, help="seeds per cell (seed, seed+1, ...)")
    p_batch.add_argument("--pc-list", dest="pc_list", default=None,
                         help="comma-separated crossover probabilities (pm = 1 - pc each)")
    p_batch.add_argument("--jobs", type=int, default=1, help="parallel runs")
    p_batch.add_argument("--out", default="phenogp-batch", help="output root directory")
    p_batch.add_argument("--preset", choices=["full"], default=None,
                         help="'full' = 30 runs x pc in {0.8, 0.2}")
    p_batch.set_defaults(func=cmd_batch)

    p_data = sub.add_parser("datasets", help="list resolvable datasets")
    p_data.add_argument("--registry", default=None)
    p_data.set_defaults(func=cmd_datasets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ParseError, TreeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
