"""Run orchestration: per-generation metric families and persistence.

For every generation and every variant (the genotype population plus the
extracted phenotype population at each approximation level) one CSV row is
written with size, fitness, diversity, structure and deviation aggregates.
Metric collection is pure observation: it consumes no randomness and never
touches the evolving genotypes, so the trajectory with monitoring disabled
is identical generation for generation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .data import SplitDataset, monte_carlo_split, resolve_dataset
from .evolution import (
    GPConfig,
    Individual,
    evolve_generation,
    initialize_population,
    rmse_fitness,
)
from .phenotype import SimplificationReport, extract_population_phenotypes
from .semantics import evaluate_with_cache
from .trees import Tree, canonical_serialize

CSV_COLUMNS = [
    "run_id", "dataset", "seed", "generation", "variant",
    "mean_length", "median_train_fit", "median_test_fit", "diversity",
    "mean_terminal_prop", "median_smad",
    "elite_train_fit", "elite_test_fit", "elite_length",
]

DEFAULT_T_LEVELS = (2.5, 5.0, 10.0, 20.0)


def variant_label(t: Optional[float]) -> str:
    return "genotype" if t is None else f"t{t:g}"


def diversity(trees: Sequence[Tree]) -> int:
    """Number of structurally unique trees (distinct canonical texts)."""
    if not trees:
        raise ValueError("empty population")
    return len({canonical_serialize(t) for t in trees})


def terminal_proportion(tree: Tree) -> float:
    """Share of terminal nodes (features and constants) in the tree."""
    return tree.terminal_count() / len(tree)


@dataclass(frozen=True)
class GenerationMetrics:
    run_id: str
    dataset: str
    seed: int
    generation: int
    variant: str
    mean_length: float
    median_train_fit: float
    median_test_fit: float
    diversity: int
    mean_terminal_prop: float
    median_smad: float
    elite_train_fit: float
    elite_test_fit: float
    elite_length: int

    def row(self) -> list[str]:
        return [
            self.run_id, self.dataset, repr(self.seed), repr(self.generation), self.variant,
            repr(self.mean_length), repr(self.median_train_fit), repr(self.median_test_fit),
            repr(self.diversity), repr(self.mean_terminal_prop), repr(self.median_smad),
            repr(self.elite_train_fit), repr(self.elite_test_fit), repr(self.elite_length),
        ]


@dataclass(frozen=True)
class _VariantView:
    trees: list
    train_fits: np.ndarray
    test_fits: np.ndarray
    smads: np.ndarray


def _aggregate(run_id, dataset, seed, generation, label, view: _VariantView) -> GenerationMetrics:
    elite = int(np.argmin(view.train_fits))
    return GenerationMetrics(
        run_id=run_id,
        dataset=dataset,
        seed=seed,
        generation=generation,
        variant=label,
        mean_length=float(np.mean([len(t) for t in view.trees])),
        median_train_fit=float(np.median(view.train_fits)),
        median_test_fit=float(np.median(view.test_fits)),
        diversity=diversity(view.trees),
        mean_terminal_prop=float(np.mean([terminal_proportion(t) for t in view.trees])),
        median_smad=float(np.median(view.smads)),
        elite_train_fit=float(view.train_fits[elite]),
        elite_test_fit=float(view.test_fits[elite]),
        elite_length=len(view.trees[elite]),
    )


def generation_metrics(
    run_id: str,
    dataset: str,
    seed: int,
    generation: int,
    population: Sequence[Individual],
    reports: Optional[Sequence[dict[float, SimplificationReport]]],
    data: SplitDataset,
) -> list[GenerationMetrics]:
    """One metrics record per variant for a single generation.

    ``reports`` maps each individual to its per-level simplification report
    (as produced by phenotype extraction); None limits output to the
    genotype variant.  Phenotype fitness is obtained by re-evaluating the
    phenotype trees from scratch on train and test; the genotype's own
    deviation column is identically zero.
    """
    if reports is not None and len(reports) != len(population):
        raise ValueError(
            f"got {len(reports)} phenotype reports for {len(population)} individuals"
        )
    geno_view = _VariantView(
        trees=[ind.genotype for ind in population],
        train_fits=np.array([ind.train_fitness for ind in population]),
        test_fits=np.array([ind.test_fitness for ind in population]),
        smads=np.zeros(len(population)),
    )
    rows = [_aggregate(run_id, dataset, seed, generation, "genotype", geno_view)]
    if reports is None:
        return rows
    levels = sorted(reports[0].keys())
    for level in levels:
        trees = [rep[level].phenotype for rep in reports]
        train_fits = np.empty(len(trees))
        test_fits = np.empty(len(trees))
        for i, tree in enumerate(trees):
            train_fits[i] = rmse_fitness(
                evaluate_with_cache(tree, data.train.features).root, data.train.targets
            )
            test_fits[i] = rmse_fitness(
                evaluate_with_cache(tree, data.test.features).root, data.test.targets
            )
        smads = np.array([rep[level].smad_vs_genotype for rep in reports])
        view = _VariantView(trees, train_fits, test_fits, smads)
        rows.append(_aggregate(run_id, dataset, seed, generation, variant_label(level), view))
    return rows


# ---------------------------------------------------------------------------
# single run
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    dataset: str
    seed: int
    config: GPConfig = field(default_factory=GPConfig)
    t_levels: tuple = DEFAULT_T_LEVELS
    split_ratio: float = 0.7
    standardize_scope: str = "train"
    monitor: bool = True
    run_id: str = ""
    registry_path: Optional[str] = None

    def resolved_run_id(self) -> str:
        if self.run_id:
            return self.run_id
        stem = Path(self.dataset).stem
        return f"{stem}-s{self.seed}-pc{self.config.p_crossover:g}"

    def to_dict(self) -> dict:
        return {
            "run_id": self.resolved_run_id(),
            "dataset": self.dataset,
            "seed": self.seed,
            "config": json.loads(replace(self.config, rng_seed=self.seed).to_json()),
            "t_levels": list(self.t_levels),
            "split_ratio": self.split_ratio,
            "standardize_scope": self.standardize_scope,
            "monitor": self.monitor,
            "software_version": __version__,
        }


@dataclass
class RunResult:
    run_id: str
    out_dir: Path
    metrics_path: Path
    manifest_path: Path
    elites_path: Path
    trajectory_path: Path
    rows_written: int


def _population_digest(population: Sequence[Individual]) -> str:
    h = hashlib.sha256()
    for ind in population:
        h.update(canonical_serialize(ind.genotype).encode())
        h.update(b"\n")
    return h.hexdigest()


def _collect(manifest, run_id, generation, population, data, writer, elites_fh, traj_fh):
    if manifest.monitor:
        reports = extract_population_phenotypes(
            [ind.genotype for ind in population],
            data.train.features,
            manifest.t_levels,
        )
    else:
        reports = None
    rows = generation_metrics(
        run_id, Path(manifest.dataset).stem, manifest.seed, generation,
        population, reports, data,
    )
    for row in rows:
        writer.writerow(row.row())
    levels = sorted(reports[0].keys()) if reports else []
    for row, level in zip(rows, [None] + levels):
        elite_entry = {
            "generation": generation,
            "variant": row.variant,
            "elite_train_fit": row.elite_train_fit,
            "elite_test_fit": row.elite_test_fit,
        }
        if level is None:
            best = int(np.argmin([ind.train_fitness for ind in population]))
            elite_entry["tree"] = canonical_serialize(population[best].genotype)
        else:
            fits = [
                rmse_fitness(
                    evaluate_with_cache(rep[level].phenotype, data.train.features).root,
                    data.train.targets,
                )
                for rep in reports
            ]
            best = int(np.argmin(fits))
            elite_entry["tree"] = canonical_serialize(reports[best][level].phenotype)
        elites_fh.write(json.dumps(elite_entry) + "\n")
    traj_fh.write(_population_digest(population) + "\n")
    return len(rows)


def run_experiment(manifest: RunManifest, out_dir) -> RunResult:
    """Execute one full run: init, generational loop, per-generation metrics.

    Writes ``metrics.csv`` (appended generation by generation so interrupted
    runs keep a usable prefix), ``manifest.json``, ``elites.jsonl`` and
    ``trajectory.txt`` (one population digest per generation).  Output is a
    pure function of the manifest: repeating a run reproduces the metrics
    CSV byte for byte.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_id = manifest.resolved_run_id()
    metrics_path = out_dir / "metrics.csv"
    manifest_path = out_dir / "manifest.json"
    elites_path = out_dir / "elites.jsonl"
    trajectory_path = out_dir / "trajectory.txt"

    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    dataset = resolve_dataset(manifest.dataset, manifest.registry_path)
    rng = np.random.default_rng(manifest.seed)
    data = monte_carlo_split(dataset, manifest.split_ratio, rng, manifest.standardize_scope)
    config = replace(manifest.config, rng_seed=manifest.seed)

    # written up front with status "running" so an aborted run is visibly
    # incomplete; rewritten with the final status at the end
    payload = manifest.to_dict()
    payload.update({"started": started, "status": "running"})
    manifest_path.write_text(json.dumps(payload, indent=2) + "\n")

    rows_written = 0
    with open(metrics_path, "w", newline="") as metrics_fh, \
            open(elites_path, "w") as elites_fh, \
            open(trajectory_path, "w") as traj_fh:
        writer = csv.writer(metrics_fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        population = initialize_population(config, data, rng)
        rows_written += _collect(
            manifest, run_id, 0, population, data, writer, elites_fh, traj_fh
        )
        metrics_fh.flush()
        for generation in range(1, config.generations + 1):
            population = evolve_generation(population, config, data, rng)
            rows_written += _collect(
                manifest, run_id, generation, population, data, writer, elites_fh, traj_fh
            )
            metrics_fh.flush()

    payload = manifest.to_dict()
    payload.update({
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "status": "complete",
        "outputs": {
            "metrics": str(metrics_path),
            "elites": str(elites_path),
            "trajectory": str(trajectory_path),
        },
        "rows_written": rows_written,
    })
    manifest_path.write_text(json.dumps(payload, indent=2) + "\n")
    return RunResult(
        run_id, out_dir, metrics_path, manifest_path, elites_path, trajectory_path,
        rows_written,
    )


# ---------------------------------------------------------------------------
# batch execution
# ---------------------------------------------------------------------------

def _run_job(args: tuple) -> tuple[str, str, Optional[str]]:
    manifest, out_dir = args
    try:
        result = run_experiment(manifest, out_dir)
        return manifest.resolved_run_id(), str(result.metrics_path), None
    except Exception as exc:  # isolate failures per run
        return manifest.resolved_run_id(), "", f"{type(exc).__name__}: {exc}"


def combine_metrics(metric_paths: Sequence, combined_path) -> Path:
    """Concatenate per-run metrics CSVs (sorted by path) into one file."""
    combined_path = Path(combined_path)
    with open(combined_path, "w", newline="") as out:
        out.write(",".join(CSV_COLUMNS) + "\n")
        for path in sorted(str(p) for p in metric_paths):
            with open(path, newline="") as fh:
                next(fh)  # skip header
                for line in fh:
                    out.write(line)
    return combined_path


def run_batch(
    manifests: Sequence[RunManifest], out_root, jobs: int = 1
) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Run a manifest matrix, up to ``jobs`` in parallel, one directory per
    run; aggregates successful runs into ``combined.csv``.

    Returns (successes, failures) as (run_id, detail) pairs.  Failed runs do
    not stop the rest of the batch.
    """
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    jobs = max(1, jobs)
    tasks = [(m, out_root / m.resolved_run_id()) for m in manifests]
    ids = [m.resolved_run_id() for m in manifests]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate run ids in batch matrix")
    successes: list[tuple[str, str]] = []
    failures: list[tuple[str, str]] = []
    if jobs == 1:
        outcomes = [_run_job(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_job, task) for task in tasks]
            outcomes = [f.result() for f in futures]
    for run_id, metrics_path, error in outcomes:
        if error is None:
            successes.append((run_id, metrics_path))
        else:
            failures.append((run_id, error))
    if successes:
        combine_metrics([p for _, p in successes], out_root / "combined.csv")
    return successes, failures
