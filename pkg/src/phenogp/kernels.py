"""Hot numeric kernels: prefix-tree evaluation, subtree lengths, pairwise
semantic distances and the greedy replacement pass.

Every kernel has two implementations: a numba ``@njit`` version and a pure
numpy/Python fallback.  The backend is chosen once at import time from the
``PHENOGP_BACKEND`` environment variable:

    PHENOGP_BACKEND=numba   force numba (ImportError if unavailable)
    PHENOGP_BACKEND=numpy   force the pure-numpy path
    unset / "auto"          numba when importable, numpy otherwise

Elementwise arithmetic (evaluation) is bit-identical across backends.  The
pairwise distance kernel differs only in summation order, so the two paths
can disagree in the last ulp of a mean; see ``benchmarks/bench_kernels.py``
for a speed comparison.
"""

import os

import numpy as np

KIND_FUNC = 0
KIND_FEATURE = 1
KIND_CONST = 2

OP_ADD = 0
OP_SUB = 1
OP_MUL = 2
OP_DIV = 3

# |denominator| below this returns 1.0 (protected division).
DIV_EPS = 1e-9
# Function outputs are clamped into the finite float64 range so that no
# NaN/Inf can ever enter a semantics table (overflow maps to +-FLOAT_MAX).
FLOAT_MAX = float(np.finfo(np.float64).max)

_ENV_VAR = "PHENOGP_BACKEND"


def _resolve_backend() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if choice == "auto":
        try:
            import numba  # noqa: F401
        except ImportError:
            return "numpy"
        return "numba"
    if choice == "numba":
        import numba  # noqa: F401  # fail loudly if the forced backend is missing
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"{_ENV_VAR} must be 'numba', 'numpy' or 'auto', got {choice!r}")


BACKEND = _resolve_backend()


# ---------------------------------------------------------------------------
# pure numpy / Python implementations
# ---------------------------------------------------------------------------

def eval_prefix_numpy(kinds, codes, values, x):
    """Evaluate a prefix-order tree on inputs ``x`` (n rows, d features).

    Returns an (size, n) matrix whose row i is the output vector of the
    subtree rooted at node i.  Iterates the flat tree back-to-front with an
    index stack, so each function node finds its children already computed.
    """
    n = x.shape[0]
    size = kinds.shape[0]
    sem = np.empty((size, n))
    stack = np.empty(size, dtype=np.int64)
    top = 0
    with np.errstate(over="ignore"):  # overflow is clamped below by design
        for i in range(size - 1, -1, -1):
            k = kinds[i]
            if k == KIND_FEATURE:
                sem[i] = x[:, codes[i]]
            elif k == KIND_CONST:
                sem[i] = values[i]
            else:
                left = stack[top - 1]
                right = stack[top - 2]
                top -= 2
                a = sem[left]
                b = sem[right]
                op = codes[i]
                if op == OP_ADD:
                    out = a + b
                elif op == OP_SUB:
                    out = a - b
                elif op == OP_MUL:
                    out = a * b
                else:
                    ok = np.abs(b) >= DIV_EPS
                    out = np.where(ok, a / np.where(ok, b, 1.0), 1.0)
                np.clip(out, -FLOAT_MAX, FLOAT_MAX, out=out)
                sem[i] = out
            stack[top] = i
            top += 1
    return sem


def subtree_lengths_numpy(kinds):
    """Node count of the subtree rooted at each index (back-to-front pass)."""
    size = kinds.shape[0]
    lengths = np.empty(size, dtype=np.int64)
    stack = np.empty(size, dtype=np.int64)
    top = 0
    for i in range(size - 1, -1, -1):
        if kinds[i] == KIND_FUNC:
            length = 1 + stack[top - 1] + stack[top - 2]
            top -= 2
        else:
            length = 1
        lengths[i] = length
        stack[top] = length
        top += 1
    return lengths


def pairwise_mad_numpy(sem):
    """Condensed lower-triangular matrix of mean absolute deviations.

    Entry ``i*(i-1)//2 + j`` (i > j) is mean(|sem[i] - sem[j]|).  Computed
    one row block at a time so peak temporary memory stays O(size * n).
    """
    size = sem.shape[0]
    out = np.empty(size * (size - 1) // 2)
    pos = 0
    for i in range(1, size):
        out[pos:pos + i] = np.abs(sem[i] - sem[:i]).mean(axis=1)
        pos += i
    return out


def greedy_replacements_numpy(pair_tgt, pair_src, lengths, size):
    """Single descending pass over eligible pairs, largest target first.

    ``pair_tgt``/``pair_src`` must already be sorted by (target length desc,
    target index asc, source length asc, source index asc).  A pair fires
    when both ends are still alive; firing kills the whole target span
    [t, t + lengths[t]).  Eligibility only shrinks as nodes die, so one
    sorted pass reproduces the iterated pick-the-largest loop.  Returns the
    indices of the fired pairs, in firing order.
    """
    alive = np.ones(size, dtype=np.bool_)
    fired = np.empty(pair_tgt.shape[0], dtype=np.int64)
    count = 0
    for p in range(pair_tgt.shape[0]):
        t = pair_tgt[p]
        if not alive[t]:
            continue
        if not alive[pair_src[p]]:
            continue
        fired[count] = p
        count += 1
        alive[t:t + lengths[t]] = False
    return fired[:count]


# ---------------------------------------------------------------------------
# numba twins
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _eval_prefix_numba(kinds, codes, values, x):
        n = x.shape[0]
        size = kinds.shape[0]
        sem = np.empty((size, n))
        stack = np.empty(size, dtype=np.int64)
        top = 0
        for i in range(size - 1, -1, -1):
            k = kinds[i]
            if k == KIND_FEATURE:
                col = codes[i]
                for r in range(n):
                    sem[i, r] = x[r, col]
            elif k == KIND_CONST:
                v = values[i]
                for r in range(n):
                    sem[i, r] = v
            else:
                left = stack[top - 1]
                right = stack[top - 2]
                top -= 2
                op = codes[i]
                for r in range(n):
                    a = sem[left, r]
                    b = sem[right, r]
                    if op == OP_ADD:
                        o = a + b
                    elif op == OP_SUB:
                        o = a - b
                    elif op == OP_MUL:
                        o = a * b
                    else:
                        if abs(b) >= DIV_EPS:
                            o = a / b
                        else:
                            o = 1.0
                    if o > FLOAT_MAX:
                        o = FLOAT_MAX
                    elif o < -FLOAT_MAX:
                        o = -FLOAT_MAX
                    sem[i, r] = o
            stack[top] = i
            top += 1
        return sem

    @njit(cache=True)
    def _subtree_lengths_numba(kinds):
        size = kinds.shape[0]
        lengths = np.empty(size, dtype=np.int64)
        stack = np.empty(size, dtype=np.int64)
        top = 0
        for i in range(size - 1, -1, -1):
            if kinds[i] == KIND_FUNC:
                length = 1 + stack[top - 1] + stack[top - 2]
                top -= 2
            else:
                length = 1
            lengths[i] = length
            stack[top] = length
            top += 1
        return lengths

    @njit(cache=True)
    def _pairwise_mad_numba(sem):
        size, n = sem.shape
        out = np.empty(size * (size - 1) // 2)
        for i in range(1, size):
            base = i * (i - 1) // 2
            for j in range(i):
                acc = 0.0
                for r in range(n):
                    acc += abs(sem[i, r] - sem[j, r])
                out[base + j] = acc / n
        return out

    @njit(cache=True)
    def _greedy_replacements_numba(pair_tgt, pair_src, lengths, size):
        alive = np.ones(size, dtype=np.bool_)
        fired = np.empty(pair_tgt.shape[0], dtype=np.int64)
        count = 0
        for p in range(pair_tgt.shape[0]):
            t = pair_tgt[p]
            if not alive[t]:
                continue
            if not alive[pair_src[p]]:
                continue
            fired[count] = p
            count += 1
            for q in range(t, t + lengths[t]):
                alive[q] = False
        return fired[:count]

    eval_prefix = _eval_prefix_numba
    subtree_lengths = _subtree_lengths_numba
    pairwise_mad = _pairwise_mad_numba
    greedy_replacements = _greedy_replacements_numba
else:
    eval_prefix = eval_prefix_numpy
    subtree_lengths = subtree_lengths_numpy
    pairwise_mad = pairwise_mad_numpy
    greedy_replacements = greedy_replacements_numpy
