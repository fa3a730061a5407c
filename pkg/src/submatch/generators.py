"""Deterministic instance generators.

Every generator is backed by a vectorized block function so instances can
be evaluated lazily at any size; costs depend only on (name, params, seed,
i, j), never on query order.  Uniform and (1,2)-metric entries come from a
counter-based integer mix (SplitMix64) so no matrix is ever materialized.
"""

from __future__ import annotations

import numpy as np

from .core import BipartiteInstance, FunctionCost

__all__ = [
    "uniform_instance", "euclidean_instance", "one_two_metric_instance",
    "permutation_instance", "make_instance", "GENERATORS",
]

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = (x + _GOLD) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def _pair_hash(rows: np.ndarray, cols: np.ndarray, seed: int) -> np.ndarray:
    """uint64 hash of every (row, col) pair in the outer product."""
    r = _splitmix(rows.astype(np.uint64) + np.uint64(seed & (2 ** 64 - 1)))
    c = _splitmix(cols.astype(np.uint64) ^ np.uint64(0xA5A5A5A5A5A5A5A5))
    with np.errstate(over="ignore"):
        return _splitmix(r[:, None] * _GOLD + c[None, :])


def _unit(rows, cols, seed):
    return (_pair_hash(rows, cols, seed) >> np.uint64(11)).astype(np.float64) / float(2 ** 53)


def _elem_hash(is_, js, seed):
    r = _splitmix(is_.astype(np.uint64) + np.uint64(seed & (2 ** 64 - 1)))
    c = _splitmix(js.astype(np.uint64) ^ np.uint64(0xA5A5A5A5A5A5A5A5))
    with np.errstate(over="ignore"):
        return _splitmix(r * _GOLD + c)


def _unit_pairs(is_, js, seed):
    return (_elem_hash(is_, js, seed) >> np.uint64(11)).astype(np.float64) / float(2 ** 53)


def uniform_instance(n: int, seed: int) -> BipartiteInstance:
    """iid Uniform[0,1] costs."""
    return BipartiteInstance(n, FunctionCost(
        n, lambda r, c: _unit(r, c, seed), lambda i, j: _unit_pairs(i, j, seed)))


def euclidean_instance(n: int, seed: int, dim: int = 2) -> BipartiteInstance:
    """Pairwise Euclidean distances between two point clouds in [0,1]^dim."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, dim, n]))
    p0 = rng.random((n, dim))
    p1 = rng.random((n, dim))

    def block(rows, cols):
        diff = p0[rows][:, None, :] - p1[cols][None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2))

    def pair(is_, js):
        return np.sqrt(((p0[is_] - p1[js]) ** 2).sum(axis=1))

    inst = BipartiteInstance(n, FunctionCost(n, block, pair))
    inst.points = (p0, p1)  # exposed so tests can recompute distances
    return inst


def one_two_metric_instance(n: int, seed: int, p: float = 0.5) -> BipartiteInstance:
    """Costs in {1, 2}: cost 1 with probability p (always a metric)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")

    def block(rows, cols):
        return np.where(_unit(rows, cols, seed) < p, 1.0, 2.0)

    def pair(is_, js):
        return np.where(_unit_pairs(is_, js, seed) < p, 1.0, 2.0)

    return BipartiteInstance(n, FunctionCost(n, block, pair))


def permutation_instance(n: int, seed: int) -> BipartiteInstance:
    """A planted zero-cost perfect matching; every other edge costs 1."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, n]))
    perm = rng.permutation(n)

    def block(rows, cols):
        return np.where(perm[rows][:, None] == np.asarray(cols)[None, :], 0.0, 1.0)

    def pair(is_, js):
        return np.where(perm[is_] == js, 0.0, 1.0)

    inst = BipartiteInstance(n, FunctionCost(n, block, pair))
    inst.permutation = perm
    return inst


GENERATORS = {
    "uniform": uniform_instance,
    "euclidean": euclidean_instance,
    "one-two-metric": one_two_metric_instance,
    "permutation": permutation_instance,
}


def make_instance(name: str, n: int, seed: int, **params) -> BipartiteInstance:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    return gen(n, seed, **params)
