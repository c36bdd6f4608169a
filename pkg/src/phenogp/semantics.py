"""Vectorized tree evaluation with per-subtree semantics caching.

Evaluation fills one output row per node in a single bottom-up pass over
the flat prefix array, vectorized across all input rows, so the cost of
fitness evaluation already yields the semantics of every subtree.
"""

from __future__ import annotations

import numpy as np

from .kernels import eval_prefix
from .trees import Tree


class InputMismatchError(ValueError):
    """Inputs incompatible with the tree or with each other."""


class SemanticsTable:
    """Output vector of every subtree, keyed by root node index.

    Row 0 is the whole tree's output.  Keeps a read-only reference to the
    inputs it was computed from so downstream consumers can re-evaluate
    derived trees on the same data.
    """

    __slots__ = ("matrix", "inputs")

    def __init__(self, matrix: np.ndarray, inputs: np.ndarray):
        matrix.setflags(write=False)
        self.matrix = matrix
        self.inputs = inputs

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def __getitem__(self, node_index: int) -> np.ndarray:
        return self.matrix[node_index]

    @property
    def n_cases(self) -> int:
        return self.matrix.shape[1]

    @property
    def root(self) -> np.ndarray:
        return self.matrix[0]


def as_input_matrix(inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2:
        raise InputMismatchError(f"inputs must be a 2-d (rows, features) matrix, got ndim={x.ndim}")
    if x.shape[0] < 1:
        raise InputMismatchError("need at least one input row")
    return np.ascontiguousarray(x)


def evaluate_with_cache(tree: Tree, inputs) -> SemanticsTable:
    """Semantics of every subtree of ``tree`` over the given input rows.

    Division is protected (|denominator| < 1e-9 yields 1.0) and function
    outputs are clamped into the finite float64 range, so the table never
    contains NaN or infinity.
    """
    x = as_input_matrix(inputs)
    if tree.max_feature >= x.shape[1]:
        raise InputMismatchError(
            f"tree uses feature x{tree.max_feature} but inputs have {x.shape[1]} columns"
        )
    matrix = eval_prefix(tree.kinds, tree.codes, tree.values, x)
    return SemanticsTable(matrix, x)


def evaluate_root(tree: Tree, inputs) -> np.ndarray:
    """Whole-tree output vector only (cheaper to hold than a full table)."""
    return evaluate_with_cache(tree, inputs).root.copy()
