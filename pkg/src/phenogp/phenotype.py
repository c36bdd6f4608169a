"""Genotype-to-phenotype simplification through subtree-semantics similarity.

Given the cached semantics of every subtree, a lower-triangular similarity
matrix over all subtree pairs drives a greedy replacement loop: repeatedly
take the largest subtree that has a strictly smaller equivalent partner and
swap in that partner, then drop the replaced region from consideration.
With threshold level 0 "equivalent" means the distance rounds to zero at
five decimals (behavior preserving); with level t in (0, 100) it means the
distance is at most the t-th percentile of the tree's own pairwise distance
distribution (coarse-graining).

The pairwise distance matrix is the dominant cost (O(size^2 * n)); it is
computed blockwise by the kernels module, which bounds peak temporary
memory to one row block regardless of tree size, with no sampling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .kernels import greedy_replacements, pairwise_mad
from .semantics import InputMismatchError, SemanticsTable, evaluate_with_cache
from .trees import Tree, canonical_serialize

# Distances are compared after rounding to exactly five decimal places;
# numpy rounds half to even.
ROUND_DECIMALS = 5


@dataclass(frozen=True)
class ApproximationLevel:
    """Percentile of a tree's pairwise distance distribution; 0 is exact."""

    t: float

    def __post_init__(self):
        if not 0.0 <= self.t < 100.0:
            raise ValueError(f"approximation level must be in [0, 100), got {self.t}")

    @property
    def exact(self) -> bool:
        return self.t == 0.0


def _as_level(t) -> ApproximationLevel:
    if isinstance(t, ApproximationLevel):
        return t
    return ApproximationLevel(float(t))


def similarity(a, b) -> float:
    """Mean absolute deviation between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 1:
        raise InputMismatchError(f"vectors must share a length >= 1, got {a.shape} and {b.shape}")
    return float(np.mean(np.abs(a - b)))


class SimilarityMatrix:
    """Condensed pairwise subtree distances plus span metadata.

    Only the lower triangle is stored: entry ``i*(i-1)//2 + j`` holds the
    distance between the subtrees rooted at i and j for i > j.  Subtree
    lengths give spans ([i, i + length_i)), and containment falls out of
    span inclusion.
    """

    __slots__ = ("dists", "lengths")

    def __init__(self, dists: np.ndarray, lengths: np.ndarray):
        self.dists = dists
        self.lengths = lengths

    @property
    def size(self) -> int:
        return self.lengths.shape[0]

    @property
    def pair_count(self) -> int:
        return self.dists.shape[0]

    def distance(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if i < j:
            i, j = j, i
        return float(self.dists[i * (i - 1) // 2 + j])

    def contains(self, i: int, j: int) -> bool:
        """True when subtree j lies inside subtree i."""
        return i <= j and j + self.lengths[j] <= i + self.lengths[i]


def build_matrix(tree: Tree, semantics: SemanticsTable) -> SimilarityMatrix:
    """All pairwise subtree distances for one tree."""
    if len(semantics) != len(tree):
        raise InputMismatchError(
            f"semantics table covers {len(semantics)} nodes, tree has {len(tree)}"
        )
    return SimilarityMatrix(pairwise_mad(semantics.matrix), np.asarray(tree.lengths))


def percentile_threshold(matrix: SimilarityMatrix, t) -> float | None:
    """Nearest-rank t-th percentile of the stored distance distribution.

    Returns None for an empty matrix (single-node tree): nothing to do.
    """
    level = _as_level(t)
    if level.exact:
        raise ValueError("percentile threshold is defined for t > 0 only")
    p = matrix.pair_count
    if p == 0:
        return None
    k = math.ceil(level.t / 100.0 * p)
    k = min(max(k, 1), p)
    return float(np.partition(matrix.dists, k - 1)[k - 1])


def _kept_mask(matrix: SimilarityMatrix, level: ApproximationLevel) -> np.ndarray | None:
    if matrix.pair_count == 0:
        return None
    if level.exact:
        return np.round(matrix.dists, ROUND_DECIMALS) == 0.0
    threshold = percentile_threshold(matrix, level)
    return matrix.dists <= threshold


def _decode_condensed(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # invert k = i*(i-1)/2 + j (0 <= j < i < size)
    i = ((1.0 + np.sqrt(1.0 + 8.0 * k)) / 2.0).astype(np.int64)
    base = i * (i - 1) // 2
    over = base > k
    i[over] -= 1
    base[over] = i[over] * (i[over] - 1) // 2
    j = (k - base).astype(np.int64)
    return i, j


def equivalent_pairs(matrix: SimilarityMatrix, t) -> np.ndarray:
    """(K, 2) array of node-index pairs (i > j) within the level's threshold."""
    mask = _kept_mask(matrix, _as_level(t))
    if mask is None:
        return np.empty((0, 2), dtype=np.int64)
    k = np.flatnonzero(mask).astype(np.float64)
    i, j = _decode_condensed(k)
    return np.column_stack((i, j))


@dataclass(frozen=True)
class SimplificationReport:
    """Result of one genotype-to-phenotype extraction."""

    phenotype: Tree
    replacements: tuple  # ((target_start, target_end), (source_start, source_end)), ...
    original_size: int
    phenotype_size: int
    smad_vs_genotype: float

    def to_dict(self) -> dict:
        return {
            "phenotype": canonical_serialize(self.phenotype),
            "replacements": [[list(t), list(s)] for t, s in self.replacements],
            "original_size": self.original_size,
            "phenotype_size": self.phenotype_size,
            "smad_vs_genotype": self.smad_vs_genotype,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _select_replacements(matrix: SimilarityMatrix, level: ApproximationLevel) -> list[tuple[int, int]]:
    """Greedy loop over the pair set; returns (target_root, source_root) picks.

    A pair is eligible when its distance passed the level's filter and the
    source is strictly smaller than the target (which already rules out the
    source containing the target: a container is always strictly larger).
    Ties break toward the lowest node index on both sides.
    """
    mask = _kept_mask(matrix, level)
    if mask is None or not mask.any():
        return []
    kept = np.flatnonzero(mask).astype(np.float64)
    i, j = _decode_condensed(kept)
    lengths = matrix.lengths
    li = lengths[i]
    lj = lengths[j]
    unequal = li != lj
    if not unequal.any():
        return []
    i, j, li, lj = i[unequal], j[unequal], li[unequal], lj[unequal]
    tgt = np.where(li > lj, i, j)
    src = np.where(li > lj, j, i)
    lt = lengths[tgt]
    ls = lengths[src]
    order = np.lexsort((src, ls, tgt, -lt))
    tgt = np.ascontiguousarray(tgt[order])
    src = np.ascontiguousarray(src[order])
    fired = greedy_replacements(tgt, src, lengths, matrix.size)
    return [(int(tgt[p]), int(src[p])) for p in fired]


def _materialize(tree: Tree, picks: Sequence[tuple[int, int]]) -> tuple[Tree, tuple]:
    lengths = tree.lengths
    spans = sorted(
        ((t, t + int(lengths[t]), s, s + int(lengths[s])) for t, s in picks),
        key=lambda q: q[0],
    )
    replacements = []
    segments_k, segments_c, segments_v = [], [], []
    cursor = 0
    for t0, t1, s0, s1 in spans:
        if t0 < cursor:
            raise AssertionError("replacement targets overlap; greedy invariant broken")
        segments_k.append(tree.kinds[cursor:t0])
        segments_c.append(tree.codes[cursor:t0])
        segments_v.append(tree.values[cursor:t0])
        segments_k.append(tree.kinds[s0:s1])
        segments_c.append(tree.codes[s0:s1])
        segments_v.append(tree.values[s0:s1])
        replacements.append(((t0, t1), (s0, s1)))
        cursor = t1
    segments_k.append(tree.kinds[cursor:])
    segments_c.append(tree.codes[cursor:])
    segments_v.append(tree.values[cursor:])
    phenotype = Tree(
        np.concatenate(segments_k),
        np.concatenate(segments_c),
        np.concatenate(segments_v),
    )
    return phenotype, tuple(replacements)


def simplify_with_matrix(
    tree: Tree, semantics: SemanticsTable, matrix: SimilarityMatrix, t
) -> SimplificationReport:
    """Like :func:`simplify` but reusing a prebuilt similarity matrix."""
    level = _as_level(t)
    picks = _select_replacements(matrix, level)
    if not picks:
        return SimplificationReport(tree, (), len(tree), len(tree), 0.0)
    phenotype, replacements = _materialize(tree, picks)
    pheno_sem = evaluate_with_cache(phenotype, semantics.inputs)
    smad = similarity(semantics.root, pheno_sem.root)
    return SimplificationReport(phenotype, replacements, len(tree), len(phenotype), smad)


def simplify(tree: Tree, semantics: SemanticsTable, t) -> SimplificationReport:
    """Extract the (exact or approximate) phenotype of ``tree``.

    Replacements are recorded against original-tree spans; the largest-first
    loop with containment removal keeps targets pairwise disjoint, so they
    are applied in one splice pass at the end.  The reported deviation is
    computed by re-evaluating the phenotype from scratch on the same inputs.
    """
    if len(tree) == 1:
        _as_level(t)  # still validate the level
        return SimplificationReport(tree, (), 1, 1, 0.0)
    matrix = build_matrix(tree, semantics)
    return simplify_with_matrix(tree, semantics, matrix, t)


def extract_population_phenotypes(
    trees: Sequence[Tree], inputs, t_levels: Iterable[float]
) -> list[dict[float, SimplificationReport]]:
    """Per-tree, per-level simplification reports; level 0 always included.

    Pure observation: input trees are never modified, and the similarity
    matrix is built once per tree and shared across levels.
    """
    levels = sorted({0.0} | {_as_level(t).t for t in t_levels})
    out = []
    for tree in trees:
        sem = evaluate_with_cache(tree, inputs)
        if len(tree) == 1:
            out.append({lv: SimplificationReport(tree, (), 1, 1, 0.0) for lv in levels})
            continue
        matrix = build_matrix(tree, sem)
        out.append({lv: simplify_with_matrix(tree, sem, matrix, lv) for lv in levels})
    return out
