import numpy as np
import pytest

from phenogp.trees import ProgramElement, Tree, tree_from_elements


def random_tree(rng, size_budget=31, n_features=3, p_stop=0.3, p_zero_one=0.3) -> Tree:
    """Random valid tree of odd size <= size_budget.

    Zero/one constants appear often enough that semantically inert regions
    (times-zero, plus-zero, divide-by-one) are common.
    """
    elems = []

    def gen(budget):
        if budget < 3 or rng.random() < p_stop:
            r = rng.random()
            if r < p_zero_one / 2:
                elems.append(ProgramElement.constant(0.0))
            elif r < p_zero_one:
                elems.append(ProgramElement.constant(1.0))
            elif r < p_zero_one + 0.2:
                elems.append(ProgramElement.constant(round(float(rng.uniform(-2, 2)), 3)))
            else:
                elems.append(ProgramElement.feature(int(rng.integers(0, n_features))))
            return
        elems.append(ProgramElement.func(int(rng.integers(0, 4))))
        max_left = budget - 2
        left = int(rng.integers(0, (max_left - 1) // 2 + 1)) * 2 + 1
        gen(left)
        gen(budget - 1 - left)

    gen(size_budget if size_budget % 2 == 1 else size_budget - 1)
    return tree_from_elements(elems)


class FakeRng:
    """Scripted stand-in for numpy.random.Generator in stub tests."""

    def __init__(self, integers=(), randoms=(), uniforms=()):
        self._integers = list(integers)
        self._randoms = list(randoms)
        self._uniforms = list(uniforms)

    def integers(self, low, high, size=None):
        if size is None:
            return self._integers.pop(0)
        return np.array([self._integers.pop(0) for _ in range(size)])

    def random(self):
        return self._randoms.pop(0)

    def uniform(self, low, high):
        return self._uniforms.pop(0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
