"""Population initialization, selection, variation and the generational loop.

A run is a pure function of (config, dataset, seed): all randomness flows
through one ``numpy.random.Generator`` and the draw order is fixed (operator
choice, then tournament draws, then variation-point draws).  No depth or
size limit is enforced after initialization, so genotypes are free to grow.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .data import SplitDataset, round_half_up
from .semantics import InputMismatchError, evaluate_with_cache
from .trees import ProgramElement, Tree, splice, subtree_span, tree_from_elements

N_OPS = 4


@dataclass(frozen=True)
class GPConfig:
    population_size: int = 100
    generations: int = 100
    p_crossover: float = 0.8
    p_mutation: float = 0.2
    tournament_pressure: float = 0.04
    init_max_depth: int = 5
    rng_seed: int = 0
    constant_range: tuple[float, float] = (-1.0, 1.0)
    elitism: bool = False

    def __post_init__(self):
        if abs(self.p_crossover + self.p_mutation - 1.0) > 1e-9:
            raise ValueError(
                f"p_crossover + p_mutation must be 1, got {self.p_crossover} + {self.p_mutation}"
            )
        if not 0.0 <= self.p_crossover <= 1.0:
            raise ValueError(f"p_crossover must be in [0, 1], got {self.p_crossover}")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.init_max_depth < 2:
            raise ValueError("init_max_depth must be >= 2")
        if not 0.0 < self.tournament_pressure <= 1.0:
            raise ValueError("tournament_pressure must be in (0, 1]")
        lo, hi = self.constant_range
        if not lo < hi:
            raise ValueError(f"constant_range must be an interval, got {self.constant_range}")
        object.__setattr__(self, "constant_range", (float(lo), float(hi)))

    def to_json(self, **kwargs) -> str:
        payload = asdict(self)
        payload["constant_range"] = list(self.constant_range)
        return json.dumps(payload, **kwargs)

    @staticmethod
    def from_json(text: str) -> "GPConfig":
        payload = json.loads(text)
        if "constant_range" in payload:
            payload["constant_range"] = tuple(payload["constant_range"])
        return GPConfig(**payload)


def tournament_size(config: GPConfig) -> int:
    return max(2, round_half_up(config.tournament_pressure * config.population_size))


@dataclass
class Individual:
    genotype: Tree
    train_semantics: np.ndarray
    train_fitness: float
    test_fitness: float


def rmse_fitness(semantics, targets) -> float:
    """Root mean squared error; lower is better."""
    s = np.asarray(semantics, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise InputMismatchError(f"semantics/targets shape mismatch: {s.shape} vs {y.shape}")
    with np.errstate(over="ignore"):
        return float(np.sqrt(np.mean((s - y) ** 2)))


def evaluate_individual(tree: Tree, data: SplitDataset) -> Individual:
    train_sem = evaluate_with_cache(tree, data.train.features).root.copy()
    test_sem = evaluate_with_cache(tree, data.test.features).root
    return Individual(
        genotype=tree,
        train_semantics=train_sem,
        train_fitness=rmse_fitness(train_sem, data.train.targets),
        test_fitness=rmse_fitness(test_sem, data.test.targets),
    )


# ---------------------------------------------------------------------------
# random tree construction
# ---------------------------------------------------------------------------

def _draw_constant(config: GPConfig, rng: np.random.Generator) -> float:
    # 0 and 1 each get a 10% share of the constant draws (they seed the
    # algebraic identities that make code semantically inert); the rest is
    # uniform over the configured range.
    u = rng.random()
    if u < 0.10:
        return 0.0
    if u < 0.20:
        return 1.0
    lo, hi = config.constant_range
    return float(rng.uniform(lo, hi))


def _draw_terminal(n_features: int, config: GPConfig, rng: np.random.Generator) -> ProgramElement:
    # terminal set: the d features plus one ephemeral-constant slot
    pick = int(rng.integers(0, n_features + 1))
    if pick < n_features:
        return ProgramElement.feature(pick)
    return ProgramElement.constant(_draw_constant(config, rng))


def _grow(
    out: list, n_features: int, config: GPConfig, rng: np.random.Generator,
    depth: int, max_depth: int, force_function: bool,
) -> None:
    if depth >= max_depth:
        out.append(_draw_terminal(n_features, config, rng))
        return
    if force_function:
        pick = int(rng.integers(0, N_OPS))
    else:
        # uniform over the union of functions and terminals
        pick = int(rng.integers(0, N_OPS + n_features + 1))
    if pick < N_OPS:
        out.append(ProgramElement.func(pick))
        _grow(out, n_features, config, rng, depth + 1, max_depth, False)
        _grow(out, n_features, config, rng, depth + 1, max_depth, False)
    elif pick - N_OPS < n_features:
        out.append(ProgramElement.feature(pick - N_OPS))
    else:
        out.append(ProgramElement.constant(_draw_constant(config, rng)))


def _full(
    out: list, n_features: int, config: GPConfig, rng: np.random.Generator,
    depth: int, max_depth: int,
) -> None:
    if depth >= max_depth:
        out.append(_draw_terminal(n_features, config, rng))
        return
    out.append(ProgramElement.func(int(rng.integers(0, N_OPS))))
    _full(out, n_features, config, rng, depth + 1, max_depth)
    _full(out, n_features, config, rng, depth + 1, max_depth)


def grow_tree(
    n_features: int, max_depth: int, config: GPConfig, rng: np.random.Generator,
    force_function_root: bool = True,
) -> Tree:
    """Grow-method tree of edge depth <= max_depth.

    Initialization forces a function at the root (a grown tree is at least
    depth 1); mutation subtrees pass ``force_function_root=False`` so a bare
    terminal is a possible outcome.
    """
    out: list[ProgramElement] = []
    _grow(out, n_features, config, rng, 0, max_depth, force_function_root)
    return tree_from_elements(out)


def full_tree(n_features: int, depth: int, config: GPConfig, rng: np.random.Generator) -> Tree:
    """Full-method tree: functions at every level below ``depth``."""
    out: list[ProgramElement] = []
    _full(out, n_features, config, rng, 0, depth)
    return tree_from_elements(out)


def ramped_half_and_half(config: GPConfig, n_features: int, rng: np.random.Generator) -> list[Tree]:
    """Initial population ramped over depths {2..init_max_depth}, half
    grow / half full per depth bucket."""
    depths = list(range(2, config.init_max_depth + 1))
    trees = []
    for i in range(config.population_size):
        depth = depths[i % len(depths)]
        use_grow = (i // len(depths)) % 2 == 0
        if use_grow:
            trees.append(grow_tree(n_features, depth, config, rng, force_function_root=True))
        else:
            trees.append(full_tree(n_features, depth, config, rng))
    return trees


# ---------------------------------------------------------------------------
# selection and variation
# ---------------------------------------------------------------------------

def _tournament(fitnesses: np.ndarray, k: int, rng: np.random.Generator) -> int:
    draws = rng.integers(0, fitnesses.shape[0], size=k)
    return int(draws[np.argmin(fitnesses[draws])])


def tournament_select(population: Sequence[Individual], k: int, rng: np.random.Generator) -> int:
    """Index of the best (lowest train fitness) of k draws with replacement.

    Ties go to the first-drawn minimum.
    """
    if not population:
        raise ValueError("empty population")
    fitnesses = np.array([ind.train_fitness for ind in population])
    return _tournament(fitnesses, k, rng)


def swap_crossover(a: Tree, b: Tree, rng: np.random.Generator) -> Tree:
    """One offspring: a copy of ``a`` with a uniformly chosen subtree span
    replaced by a uniformly chosen subtree span of ``b``.  No size cap."""
    ia = int(rng.integers(0, len(a)))
    ib = int(rng.integers(0, len(b)))
    target = subtree_span(a, ia)
    s0, s1 = subtree_span(b, ib)
    donor = Tree(b.kinds[s0:s1], b.codes[s0:s1], b.values[s0:s1])
    return splice(a, target, donor)


def subtree_mutation(
    a: Tree, config: GPConfig, n_features: int, rng: np.random.Generator
) -> Tree:
    """Copy of ``a`` with a uniformly chosen subtree span replaced by a fresh
    grow-generated subtree of depth <= init_max_depth."""
    ia = int(rng.integers(0, len(a)))
    target = subtree_span(a, ia)
    replacement = grow_tree(
        n_features, config.init_max_depth, config, rng, force_function_root=False
    )
    return splice(a, target, replacement)


def breed_offspring(
    population: Sequence[Individual],
    fitnesses: np.ndarray,
    config: GPConfig,
    n_features: int,
    rng: np.random.Generator,
) -> tuple[Tree, int]:
    """One offspring tree plus the index of its (first) parent."""
    k = tournament_size(config)
    if rng.random() < config.p_crossover:
        p1 = _tournament(fitnesses, k, rng)
        p2 = _tournament(fitnesses, k, rng)
        return swap_crossover(population[p1].genotype, population[p2].genotype, rng), p1
    p1 = _tournament(fitnesses, k, rng)
    return subtree_mutation(population[p1].genotype, config, n_features, rng), p1


def evolve_generation(
    population: Sequence[Individual],
    config: GPConfig,
    data: SplitDataset,
    rng: np.random.Generator,
) -> list[Individual]:
    """One generational step: tournament parents, crossover-or-mutation per
    offspring, full generational replacement.

    Selection reads train fitness only; test data is used for reporting.
    With ``config.elitism`` the best parent survives into slot 0.
    """
    n_features = data.train.d
    fitnesses = np.array([ind.train_fitness for ind in population])
    offspring: list[Individual] = []
    for _ in range(config.population_size):
        child, _parent = breed_offspring(population, fitnesses, config, n_features, rng)
        offspring.append(evaluate_individual(child, data))
    if config.elitism:
        offspring[0] = population[int(np.argmin(fitnesses))]
    return offspring


def initialize_population(
    config: GPConfig, data: SplitDataset, rng: np.random.Generator
) -> list[Individual]:
    trees = ramped_half_and_half(config, data.train.d, rng)
    return [evaluate_individual(t, data) for t in trees]
