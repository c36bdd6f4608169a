import csv
import json

import numpy as np
import pytest

from phenogp.data import monte_carlo_split, synthetic_dataset
from phenogp.evolution import GPConfig, Individual, evaluate_individual
from phenogp.experiment import (
    CSV_COLUMNS,
    GenerationMetrics,
    RunManifest,
    combine_metrics,
    diversity,
    generation_metrics,
    run_batch,
    run_experiment,
    terminal_proportion,
    variant_label,
)
from phenogp.phenotype import extract_population_phenotypes, similarity
from phenogp.trees import parse

from conftest import random_tree

SMALL = GPConfig(population_size=16, generations=3)


@pytest.fixture
def split():
    ds = synthetic_dataset("poly3", 40, 0.1, np.random.default_rng(3))
    return monte_carlo_split(ds, 0.7, np.random.default_rng(3))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestAggregates:
    def test_diversity_identical_population(self):
        trees = [parse("(+ x0 x1)") for _ in range(100)]
        assert diversity(trees) == 1

    def test_diversity_direct_count(self):
        trees = [parse("x0"), parse("x0"), parse("(+ x0 x1)")]
        assert diversity(trees) == 2

    def test_diversity_bounded_by_population(self, rng):
        trees = [random_tree(rng) for _ in range(50)]
        assert 1 <= diversity(trees) <= 50

    def test_terminal_proportion_single_node(self):
        assert terminal_proportion(parse("x0")) == 1.0

    def test_terminal_proportion_three_nodes(self):
        assert terminal_proportion(parse("(+ x0 x1)")) == pytest.approx(2 / 3)

    def test_binary_tree_leaf_identity(self, rng):
        for _ in range(50):
            t = random_tree(rng)
            k = (len(t) - 1) // 2
            assert terminal_proportion(t) == pytest.approx((k + 1) / (2 * k + 1))

    def test_variant_labels(self):
        assert variant_label(None) == "genotype"
        assert variant_label(0.0) == "t0"
        assert variant_label(2.5) == "t2.5"
        assert variant_label(20.0) == "t20"


class TestGenerationMetrics:
    def _population(self, split, texts):
        return [evaluate_individual(parse(t), split) for t in texts]

    def test_identical_individuals_collapse_medians(self, split):
        pop = self._population(split, ["(+ x0 x1)"] * 5)
        reports = extract_population_phenotypes(
            [i.genotype for i in pop], split.train.features, (2.5,)
        )
        rows = generation_metrics("r", "d", 1, 0, pop, reports, split)
        geno = rows[0]
        assert geno.median_train_fit == pop[0].train_fitness
        assert geno.median_test_fit == pop[0].test_fitness
        assert geno.mean_length == 3.0
        assert geno.diversity == 1

    def test_hand_built_fixture(self, split):
        pop = self._population(split, ["x0", "(+ x0 x1)", "x0"])
        reports = extract_population_phenotypes(
            [i.genotype for i in pop], split.train.features, ()
        )
        rows = generation_metrics("r", "d", 1, 7, pop, reports, split)
        geno = rows[0]
        assert geno.mean_length == pytest.approx((1 + 3 + 1) / 3)
        assert geno.diversity == 2
        assert geno.mean_terminal_prop == pytest.approx((1.0 + 2 / 3 + 1.0) / 3)
        assert geno.median_train_fit == pytest.approx(sorted(
            i.train_fitness for i in pop)[1])
        elite = min(pop, key=lambda i: i.train_fitness)
        assert geno.elite_train_fit == elite.train_fitness
        assert geno.elite_length == len(elite.genotype)
        assert geno.median_smad == 0.0
        t0 = rows[1]
        assert t0.variant == "t0"
        assert t0.mean_length <= geno.mean_length

    def test_exact_level_smad_rounds_to_zero(self, rng, split):
        trees = [random_tree(rng, size_budget=31, n_features=2) for _ in range(40)]
        pop = [evaluate_individual(t, split) for t in trees]
        reports = extract_population_phenotypes(trees, split.train.features, ())
        smads = [rep[0.0].smad_vs_genotype for rep in reports]
        zero_fraction = np.mean([round(s, 5) == 0.0 for s in smads])
        assert zero_fraction >= 0.99

    def test_smad_is_the_similarity_of_the_phenotype_module(self, rng, split):
        t = random_tree(rng, size_budget=31, n_features=2)
        reports = extract_population_phenotypes([t], split.train.features, (20.0,))
        rep = reports[0][20.0]
        from phenogp.semantics import evaluate_with_cache

        geno_sem = evaluate_with_cache(t, split.train.features).root
        pheno_sem = evaluate_with_cache(rep.phenotype, split.train.features).root
        assert rep.smad_vs_genotype == similarity(geno_sem, pheno_sem)

    def test_report_count_mismatch_rejected(self, split):
        pop = self._population(split, ["x0", "x1"])
        with pytest.raises(ValueError):
            generation_metrics("r", "d", 1, 0, pop, [], split)


class TestRunExperiment:
    def test_row_counts(self, tmp_path):
        manifest = RunManifest(dataset="poly3", seed=3, config=SMALL)
        result = run_experiment(manifest, tmp_path / "run")
        rows = read_rows(result.metrics_path)
        # (generations + 1) generations x (genotype + t0 + 4 levels)
        assert len(rows) == 4 * 6
        assert result.rows_written == 24
        assert [r["variant"] for r in rows[:6]] == [
            "genotype", "t0", "t2.5", "t5", "t10", "t20"]
        assert {r["generation"] for r in rows} == {"0", "1", "2", "3"}

    def test_phenotype_mean_length_never_exceeds_genotype(self, tmp_path):
        manifest = RunManifest(dataset="rational2", seed=2, config=SMALL)
        result = run_experiment(manifest, tmp_path / "run")
        rows = read_rows(result.metrics_path)
        genotype_mean = {
            r["generation"]: float(r["mean_length"])
            for r in rows if r["variant"] == "genotype"
        }
        for r in rows:
            if r["variant"] != "genotype":
                assert float(r["mean_length"]) <= genotype_mean[r["generation"]]

    def test_zero_generations_records_initial_population(self, tmp_path):
        manifest = RunManifest(
            dataset="poly3", seed=3, config=GPConfig(population_size=16, generations=0)
        )
        result = run_experiment(manifest, tmp_path / "run")
        assert len(read_rows(result.metrics_path)) == 6

    def test_repeat_run_is_byte_identical(self, tmp_path):
        manifest = RunManifest(dataset="poly3", seed=11, config=SMALL)
        a = run_experiment(manifest, tmp_path / "a")
        b = run_experiment(manifest, tmp_path / "b")
        assert a.metrics_path.read_bytes() == b.metrics_path.read_bytes()

    def test_monitoring_does_not_change_trajectory(self, tmp_path):
        on = run_experiment(
            RunManifest(dataset="poly3", seed=5, config=SMALL, monitor=True),
            tmp_path / "on",
        )
        off = run_experiment(
            RunManifest(dataset="poly3", seed=5, config=SMALL, monitor=False),
            tmp_path / "off",
        )
        assert on.trajectory_path.read_bytes() == off.trajectory_path.read_bytes()
        # genotype rows are identical too; monitoring only adds variants
        rows_on = [r for r in read_rows(on.metrics_path) if r["variant"] == "genotype"]
        rows_off = read_rows(off.metrics_path)
        assert rows_on == rows_off

    def test_manifest_snapshot(self, tmp_path):
        manifest = RunManifest(dataset="poly3", seed=9, config=SMALL)
        result = run_experiment(manifest, tmp_path / "run")
        payload = json.loads(result.manifest_path.read_text())
        assert payload["config"]["population_size"] == 16
        assert payload["config"]["rng_seed"] == 9
        assert payload["seed"] == 9
        assert payload["t_levels"] == [2.5, 5.0, 10.0, 20.0]
        assert payload["rows_written"] == 24
        assert payload["status"] == "complete"

    def test_aborted_run_keeps_flagged_prefix(self, tmp_path, monkeypatch):
        import phenogp.experiment as ex

        calls = {"n": 0}
        orig = ex.evolve_generation

        def boom(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] >= 2:
                raise RuntimeError("disk full")
            return orig(*args, **kwargs)

        monkeypatch.setattr(ex, "evolve_generation", boom)
        with pytest.raises(RuntimeError):
            run_experiment(RunManifest(dataset="poly3", seed=3, config=SMALL), tmp_path / "r")
        payload = json.loads((tmp_path / "r/manifest.json").read_text())
        assert payload["status"] == "running"  # never reached "complete"
        assert len(read_rows(tmp_path / "r/metrics.csv")) == 2 * 6  # usable prefix

    def test_elites_file(self, tmp_path):
        result = run_experiment(RunManifest(dataset="poly3", seed=3, config=SMALL), tmp_path / "r")
        entries = [json.loads(line) for line in result.elites_path.read_text().splitlines()]
        assert len(entries) == 24
        for entry in entries:
            parse(entry["tree"])  # every recorded elite is a valid tree


class TestBatch:
    def test_partial_failure_isolated(self, tmp_path):
        manifests = [
            RunManifest(dataset="poly3", seed=1, config=SMALL),
            RunManifest(dataset="does-not-exist", seed=1, config=SMALL),
            RunManifest(dataset="rational2", seed=2, config=SMALL),
        ]
        successes, failures = run_batch(manifests, tmp_path, jobs=1)
        assert len(successes) == 2
        assert len(failures) == 1
        assert failures[0][0].startswith("does-not-exist")
        combined = read_rows(tmp_path / "combined.csv")
        assert len(combined) == 2 * 24

    def test_combined_csv_deterministic(self, tmp_path):
        manifests = [
            RunManifest(dataset="poly3", seed=s, config=SMALL) for s in (1, 2)
        ]
        run_batch(manifests, tmp_path / "x", jobs=1)
        run_batch(manifests, tmp_path / "y", jobs=1)
        assert (tmp_path / "x/combined.csv").read_bytes() == (tmp_path / "y/combined.csv").read_bytes()

    def test_duplicate_run_ids_rejected(self, tmp_path):
        manifests = [RunManifest(dataset="poly3", seed=1, config=SMALL)] * 2
        with pytest.raises(ValueError):
            run_batch(manifests, tmp_path, jobs=1)

    def test_combine_metrics_single_header(self, tmp_path):
        m = RunManifest(dataset="poly3", seed=1, config=SMALL)
        result = run_experiment(m, tmp_path / "r")
        out = combine_metrics([result.metrics_path, result.metrics_path], tmp_path / "c.csv")
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 2 * 24
