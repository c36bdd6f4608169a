"""Expression trees as flat prefix-order arrays.

A tree is three parallel numpy arrays (node kind, op/feature code, constant
value).  Every subtree occupies a contiguous index range, so containment is
a range-inclusion test and replacement is a contiguous splice.  Trees are
immutable after construction and safe to share across processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .kernels import (
    KIND_CONST,
    KIND_FEATURE,
    KIND_FUNC,
    OP_ADD,
    OP_DIV,
    OP_MUL,
    OP_SUB,
    subtree_lengths,
)

OP_TOKENS = {OP_ADD: "+", OP_SUB: "-", OP_MUL: "*", OP_DIV: "div"}
TOKEN_OPS = {tok: op for op, tok in OP_TOKENS.items()}


class TreeError(ValueError):
    """Malformed tree structure."""


class SpanError(TreeError):
    """Index or span outside the tree, or not a subtree boundary."""


class CircularReplacementError(SpanError):
    """Replacement target lies strictly inside its own source."""


class ParseError(ValueError):
    """Unparseable tree text."""


@dataclass(frozen=True)
class ProgramElement:
    """One tree node: a binary operator, an input feature, or a constant."""

    kind: int
    code: int = 0
    value: float = 0.0

    @staticmethod
    def func(op: int) -> "ProgramElement":
        if op not in OP_TOKENS:
            raise TreeError(f"unknown operator code {op}")
        return ProgramElement(KIND_FUNC, op)

    @staticmethod
    def feature(index: int) -> "ProgramElement":
        if index < 0:
            raise TreeError(f"feature index must be >= 0, got {index}")
        return ProgramElement(KIND_FEATURE, index)

    @staticmethod
    def constant(value: float) -> "ProgramElement":
        value = float(value)
        if not np.isfinite(value):
            raise TreeError(f"constants must be finite, got {value}")
        return ProgramElement(KIND_CONST, 0, value)

    @property
    def is_terminal(self) -> bool:
        return self.kind != KIND_FUNC

    def token(self) -> str:
        if self.kind == KIND_FUNC:
            return OP_TOKENS[self.code]
        if self.kind == KIND_FEATURE:
            return f"x{self.code}"
        return repr(self.value)


class Tree:
    """Immutable prefix-order expression tree."""

    __slots__ = ("kinds", "codes", "values", "lengths")

    def __init__(self, kinds, codes, values, lengths=None):
        kinds = np.ascontiguousarray(kinds, dtype=np.int8)
        codes = np.ascontiguousarray(codes, dtype=np.int32)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if not (kinds.shape == codes.shape == values.shape) or kinds.ndim != 1:
            raise TreeError("kinds/codes/values must be equal-length 1-d arrays")
        if kinds.shape[0] == 0:
            raise TreeError("empty element sequence")
        _validate_prefix(kinds)
        const = kinds == KIND_CONST
        if const.any() and not np.isfinite(values[const]).all():
            raise TreeError("constant values must be finite")
        if lengths is None:
            lengths = subtree_lengths(kinds)
        for arr in (kinds, codes, values, lengths):
            arr.setflags(write=False)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lengths", lengths)

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    def __len__(self) -> int:
        return self.kinds.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return (
            np.array_equal(self.kinds, other.kinds)
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.kinds.tobytes(), self.codes.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return f"Tree({canonical_serialize(self)!r})"

    @property
    def elements(self) -> tuple:
        return tuple(
            ProgramElement(int(k), int(c), float(v))
            for k, c, v in zip(self.kinds, self.codes, self.values)
        )

    @property
    def max_feature(self) -> int:
        """Largest feature index used, or -1 when the tree has none."""
        feats = self.codes[self.kinds == KIND_FEATURE]
        return int(feats.max()) if feats.size else -1

    def depth(self) -> int:
        """Edge depth: a single terminal has depth 0."""
        best = 0
        open_slots = [0]  # depth of each pending child slot; root at depth 0
        for k in self.kinds:
            d = open_slots.pop()
            if k == KIND_FUNC:
                open_slots.append(d + 1)
                open_slots.append(d + 1)
            else:
                best = max(best, d)
        return best

    def terminal_count(self) -> int:
        return int((self.kinds != KIND_FUNC).sum())


def _validate_prefix(kinds) -> None:
    # One open slot before the first element; functions add two, every
    # element consumes one.  Valid iff slots hit zero exactly at the end.
    delta = np.where(kinds == KIND_FUNC, 1, -1)
    opens = 1 + np.cumsum(delta)
    if opens[-1] != 0 or (opens[:-1] < 1).any():
        raise TreeError("element sequence is not a complete prefix encoding")


def tree_from_elements(elements: Iterable[ProgramElement]) -> Tree:
    elems = list(elements)
    kinds = np.fromiter((e.kind for e in elems), dtype=np.int8, count=len(elems))
    codes = np.fromiter((e.code for e in elems), dtype=np.int32, count=len(elems))
    values = np.fromiter((e.value for e in elems), dtype=np.float64, count=len(elems))
    return Tree(kinds, codes, values)


def subtree_span(tree: Tree, root_index: int) -> tuple[int, int]:
    """Half-open index range [i, j) of the subtree rooted at ``root_index``."""
    if not 0 <= root_index < len(tree):
        raise SpanError(f"node index {root_index} out of range for tree of size {len(tree)}")
    return root_index, root_index + int(tree.lengths[root_index])


def _check_span(tree: Tree, span: tuple[int, int], name: str) -> None:
    i, j = span
    if not (0 <= i < len(tree)) or j != i + int(tree.lengths[i]):
        raise SpanError(f"{name} {span} is not a subtree span of the tree")


def replace_span(tree: Tree, target: tuple[int, int], source: tuple[int, int]) -> Tree:
    """New tree with the target span's elements swapped for the source span's.

    Both spans must be subtree spans of ``tree``; the source content is
    copied from the original, so the source may lie inside the target
    (hoisting) but the target must not lie inside the source.
    """
    _check_span(tree, target, "target span")
    _check_span(tree, source, "source span")
    ti, tj = target
    si, sj = source
    if (si <= ti and tj <= sj) and target != source:
        raise CircularReplacementError(
            f"target {target} is contained in source {source}"
        )
    kinds = np.concatenate((tree.kinds[:ti], tree.kinds[si:sj], tree.kinds[tj:]))
    codes = np.concatenate((tree.codes[:ti], tree.codes[si:sj], tree.codes[tj:]))
    values = np.concatenate((tree.values[:ti], tree.values[si:sj], tree.values[tj:]))
    return Tree(kinds, codes, values)


def subtree(tree: Tree, root_index: int) -> Tree:
    i, j = subtree_span(tree, root_index)
    return Tree(tree.kinds[i:j], tree.codes[i:j], tree.values[i:j])


def splice(tree: Tree, target: tuple[int, int], replacement: Tree) -> Tree:
    """New tree with a subtree span of ``tree`` replaced by another tree."""
    _check_span(tree, target, "target span")
    ti, tj = target
    kinds = np.concatenate((tree.kinds[:ti], replacement.kinds, tree.kinds[tj:]))
    codes = np.concatenate((tree.codes[:ti], replacement.codes, tree.codes[tj:]))
    values = np.concatenate((tree.values[:ti], replacement.values, tree.values[tj:]))
    return Tree(kinds, codes, values)


def canonical_serialize(tree: Tree) -> str:
    """Deterministic prefix s-expression; round-trips through ``parse``."""
    parts: list[str] = []
    pending: list[int] = [0]  # children still owed at each open paren level
    for k, c, v in zip(tree.kinds, tree.codes, tree.values):
        if k == KIND_FUNC:
            parts.append("(" + OP_TOKENS[int(c)])
            pending.append(2)
        else:
            if k == KIND_FEATURE:
                parts.append(f"x{int(c)}")
            else:
                parts.append(repr(float(v)))
            pending[-1] -= 1
            while pending[-1] == 0:
                pending.pop()
                parts.append(")")
                pending[-1] -= 1
    text = ""
    for p in parts:
        if p == ")":
            text += ")"
        elif text:
            text += " " + p
        else:
            text += p
    return text


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse(text: str) -> Tree:
    """Parse the canonical grammar: ``expr := terminal | "(" op expr expr ")"``."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty input")
    pos = 0

    def next_token() -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        return tok

    elements: list[ProgramElement] = []

    def parse_expr() -> None:
        tok = next_token()
        if tok == "(":
            op_tok = next_token()
            if op_tok not in TOKEN_OPS:
                raise ParseError(f"unknown operator {op_tok!r}")
            elements.append(ProgramElement.func(TOKEN_OPS[op_tok]))
            parse_expr()
            parse_expr()
            closing = next_token()
            if closing != ")":
                raise ParseError(f"expected ')', got {closing!r}")
        elif tok == ")":
            raise ParseError("unexpected ')'")
        else:
            elements.append(_parse_terminal(tok))

    parse_expr()
    if pos != len(tokens):
        raise ParseError(f"trailing tokens starting at {tokens[pos]!r}")
    return tree_from_elements(elements)


def _parse_terminal(tok: str) -> ProgramElement:
    if tok.startswith("x") and tok[1:].isdigit():
        return ProgramElement.feature(int(tok[1:]))
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(f"bad terminal {tok!r}") from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite constant {tok!r}")
    return ProgramElement.constant(value)
