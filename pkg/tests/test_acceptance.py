"""Acceptance suite: one test per top-level criterion, each printing a
PASS line (run with ``pytest tests/test_acceptance.py -v -s``).

The desk-scale dynamics tests execute the full 10-seed reference batch
(population 100, 100 generations, crossover 0.8 / mutation 0.2, tournament
pressure 4%, ramped-half-and-half 2..5, no depth limits) on the bundled
``rational2`` dataset and are the slow part of the suite.
"""

import csv
from types import SimpleNamespace

import numpy as np
import pytest

from phenogp.data import builtin_dataset, monte_carlo_split
from phenogp.evolution import GPConfig
from phenogp.experiment import RunManifest, run_batch, run_experiment
from phenogp.phenotype import (
    build_matrix,
    percentile_threshold,
    similarity,
    simplify,
)
from phenogp.semantics import evaluate_with_cache
from phenogp.trees import canonical_serialize, parse

import enumeration
from conftest import random_tree

T_LEVELS = (2.5, 5.0, 10.0, 20.0)


def _passed(name, detail=""):
    print(f"\nACCEPTANCE PASS: {name}" + (f" ({detail})" if detail else ""))


# ---------------------------------------------------------------------------
# 1. worked-example oracle
# ---------------------------------------------------------------------------

def test_worked_example_oracle():
    import time

    start = time.perf_counter()
    t = parse("(+ x0 (* 0 (* 3 x1)))")
    x = np.array([[1.0, 7.0], [2.0, 9.0]])
    rep = simplify(t, evaluate_with_cache(t, x), 0)
    assert canonical_serialize(rep.phenotype) == "x0"

    t2 = parse("(+ (* 3 x1) (+ x1 (+ x1 x1)))")
    x2 = np.array([[0.0, 1.0], [0.0, 2.0]])
    rep2 = simplify(t2, evaluate_with_cache(t2, x2), 0)
    assert canonical_serialize(rep2.phenotype) == "(+ (* 3.0 x1) (* 3.0 x1))"
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _passed("worked-example oracle", f"{elapsed * 1000:.0f} ms")


# ---------------------------------------------------------------------------
# 2. behavior preservation at t=0
# ---------------------------------------------------------------------------

def test_behavior_preservation():
    rng = np.random.default_rng(20240810)
    n_trees = 1000
    mismatch_mads = []
    for _ in range(n_trees):
        t = random_tree(rng, size_budget=199, n_features=3)
        x = rng.normal(size=(64, 3))
        sem = evaluate_with_cache(t, x)
        rep = simplify(t, sem, 0)
        mad = similarity(sem.root, evaluate_with_cache(rep.phenotype, x).root)
        if round(mad, 5) != 0.0:
            mismatch_mads.append(mad)
    fraction = 1.0 - len(mismatch_mads) / n_trees
    assert fraction >= 0.99, f"only {fraction:.1%} behavior-preserving"
    assert all(m < 1e-3 for m in mismatch_mads), f"large mismatches: {mismatch_mads}"
    _passed(
        "behavior preservation",
        f"{fraction:.1%} exact over {n_trees} trees, {len(mismatch_mads)} small mismatches",
    )


# ---------------------------------------------------------------------------
# 3. shrink and nesting properties
# ---------------------------------------------------------------------------

def test_shrink_and_nesting_properties():
    rng = np.random.default_rng(77)
    n_trees = 400
    for _ in range(n_trees):
        t = random_tree(rng, size_budget=101, n_features=3)
        x = rng.normal(size=(16, 3))
        sem = evaluate_with_cache(t, x)
        matrix = build_matrix(t, sem) if len(t) > 1 else None
        thresholds = []
        for level in (0.0,) + T_LEVELS:
            rep = simplify(t, sem, level)
            assert rep.phenotype_size <= len(t)
            spans = sorted(tgt for tgt, _ in rep.replacements)
            for (t0, t1), (s0, s1) in rep.replacements:
                assert (s1 - s0) < (t1 - t0), "non-shrinking replacement logged"
            for (a0, a1), (b0, _) in zip(spans, spans[1:]):
                assert a1 <= b0, "overlapping replacement targets"
            if level > 0.0 and matrix is not None and matrix.pair_count:
                thresholds.append(percentile_threshold(matrix, level))
        assert thresholds == sorted(thresholds), "p(t) not monotone"
    _passed("shrink and nesting properties", f"{n_trees} trees x 5 levels, 100%")


# ---------------------------------------------------------------------------
# 4. oracle equivalence on the exhaustive small-tree enumeration
# ---------------------------------------------------------------------------

def test_oracle_equivalence_exhaustive():
    x = np.random.default_rng(2024).normal(size=(6, 2))
    seen, candidates, mismatches, quiet_checked = enumeration.run_exhaustive(
        9, x, quiet_sample_rate=0.002, processes=2
    )
    assert seen == 4 + 64 + 2048 + 81920 + 3670016
    assert mismatches == [], f"{len(mismatches)} disagreements, first: {mismatches[:3]}"
    _passed(
        "oracle equivalence",
        f"{seen} trees enumerated, {candidates} fully compared, "
        f"{quiet_checked} no-op trees cross-checked, 100% size agreement",
    )


# ---------------------------------------------------------------------------
# 5-8. desk-scale dynamics, SMAD ordering, non-intervention, determinism
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def dynamics(tmp_path_factory):
    out_root = tmp_path_factory.mktemp("dynamics")
    manifests = [
        RunManifest(dataset="rational2", seed=seed, config=GPConfig())
        for seed in range(1, 11)
    ]
    successes, failures = run_batch(manifests, out_root, jobs=2)
    assert not failures, failures
    with open(out_root / "combined.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return SimpleNamespace(root=out_root, rows=rows, manifests=manifests)


def _metric(rows, seed, generation, variant, column):
    for r in rows:
        if (
            int(r["seed"]) == seed
            and int(r["generation"]) == generation
            and r["variant"] == variant
        ):
            return float(r[column])
    raise KeyError((seed, generation, variant, column))


def test_desk_scale_dynamics(dynamics):
    seeds = range(1, 11)
    g5 = np.array([_metric(dynamics.rows, s, 5, "genotype", "mean_length") for s in seeds])
    g100 = np.array([_metric(dynamics.rows, s, 100, "genotype", "mean_length") for s in seeds])
    t0 = np.array([_metric(dynamics.rows, s, 100, "t0", "mean_length") for s in seeds])
    t20 = np.array([_metric(dynamics.rows, s, 100, "t20", "mean_length") for s in seeds])
    g0 = np.array([_metric(dynamics.rows, s, 0, "genotype", "mean_length") for s in seeds])
    g1 = np.array([_metric(dynamics.rows, s, 1, "genotype", "mean_length") for s in seeds])

    growth = g100.mean() / g5.mean()
    assert growth >= 2.0, f"bloat too weak: gen100/gen5 = {growth:.2f}"

    exact_ratio = g100.mean() / t0.mean()
    assert 1.5 <= exact_ratio <= 4.0, f"genotype/t0 ratio {exact_ratio:.2f} outside [1.5, 4]"

    rough_ratio = g100.mean() / t20.mean()
    assert rough_ratio >= 5.0, f"genotype/t20 ratio {rough_ratio:.2f} < 5"

    drops = int((g1 < g0).sum())
    assert drops >= 7, f"initial size drop in only {drops}/10 seeds"
    _passed(
        "desk-scale dynamics",
        f"growth {growth:.1f}x, genotype/t0 {exact_ratio:.2f}, "
        f"genotype/t20 {rough_ratio:.1f}, drop {drops}/10 seeds",
    )


def test_smad_ordering(dynamics):
    seeds = range(1, 11)
    wins = 0
    for s in seeds:
        low = _metric(dynamics.rows, s, 100, "t2.5", "median_smad")
        high = _metric(dynamics.rows, s, 100, "t20", "median_smad")
        if high >= low:
            wins += 1
    assert wins >= 8, f"SMAD(t20) >= SMAD(t2.5) in only {wins}/10 seeds"
    _passed("SMAD ordering", f"{wins}/10 seeds")


def test_non_intervention(dynamics, tmp_path):
    manifest = dynamics.manifests[0]
    monitored_dir = dynamics.root / manifest.resolved_run_id()
    silent = run_experiment(
        RunManifest(
            dataset=manifest.dataset, seed=manifest.seed, config=manifest.config,
            monitor=False,
        ),
        tmp_path / "silent",
    )
    assert (
        silent.trajectory_path.read_bytes()
        == (monitored_dir / "trajectory.txt").read_bytes()
    ), "genotype trajectory changed when monitoring was disabled"
    _passed("non-intervention", "101 generation digests bit-identical")


def test_full_run_determinism(dynamics, tmp_path):
    manifest = dynamics.manifests[0]
    again = run_experiment(manifest, tmp_path / "again")
    original = (dynamics.root / manifest.resolved_run_id() / "metrics.csv").read_bytes()
    assert again.metrics_path.read_bytes() == original
    _passed("determinism", f"{len(original)} byte metrics CSV reproduced exactly")
