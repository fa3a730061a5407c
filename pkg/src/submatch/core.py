"""Bipartite instances, query-counted cost access, and the oracle layer.

Everything downstream is built from four oracle kinds: cost oracles (the
only objects that may touch the cost matrix, every access counted at the
root), matching oracles (``mate`` queries), potential oracles (integer
dual values with a declared range bound) and membership oracles (vertex
set predicates).  Oracles are immutable after construction; derived
oracles hold references to the oracles they are built from, never copies.

Vertices carry a side bit: the V0 vertex with index ``i`` is encoded as
``2*i`` and the V1 vertex with index ``j`` as ``2*j + 1``.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "v0", "v1", "side", "index", "decode",
    "QueryCounter", "CostOracle", "MatrixCost", "FunctionCost",
    "ScaledCost", "ThresholdedCostView",
    "BipartiteInstance", "write_instance", "read_instance", "query_count",
    "MatchingOracle", "EmptyMatching", "ArrayMatching", "OverlayMatching",
    "PotentialOracle", "ZeroPotential",
    "MembershipOracle", "SetMembership", "FreeV0Membership",
    "EligibilityView", "is_one_feasible", "is_eligible",
]

UNMATCHED = -1  # array encoding of "no mate"

BINARY_MAGIC = b"SUBM1"


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Normalize an int or SeedSequence into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def seed_label(seed):
    """Reportable form of a seed (ints pass through, children are labeled)."""
    if isinstance(seed, np.random.SeedSequence):
        return f"entropy={seed.entropy},spawn_key={seed.spawn_key}"
    return int(seed)


def v0(i):
    """Global id of the side-0 vertex with index ``i``."""
    return i << 1


def v1(j):
    """Global id of the side-1 vertex with index ``j``."""
    return (j << 1) | 1


def side(u):
    return u & 1


def index(u):
    return u >> 1


def decode(u):
    """Global id -> (side, index) pair."""
    return u & 1, u >> 1


class QueryCounter:
    """Monotone counter of cost-matrix accesses.

    Single object per instance; every counted access adds exactly once.
    Oracles are read-only after construction, so under CPython's GIL the
    increment below is exact for concurrent readers.
    """

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, k: int):
        self.count += int(k)

    def reset(self):
        self.count = 0


class CostOracle:
    """Query access to an ``n x n`` nonnegative cost matrix.

    Subclasses implement ``_block(rows, cols, counted)``.  Counting happens
    at the root oracle only; adapters forward the ``counted`` flag so each
    matrix access is counted exactly once no matter how many adapters are
    stacked on top.  ``peek_*`` variants bypass the counter and exist for
    diagnostics and test harnesses only.

    A value of ``+inf`` is a sentinel meaning "non-edge"; all matching
    machinery treats it as an absent edge.
    """

    def __init__(self, n: int):
        self.n = int(n)

    # -- interface ---------------------------------------------------------
    def _block(self, rows: np.ndarray, cols: np.ndarray, counted: bool) -> np.ndarray:
        raise NotImplementedError

    def _pairs(self, is_: np.ndarray, js: np.ndarray, counted: bool) -> np.ndarray:
        # grouped fallback: one thin block query per distinct row
        out = np.empty(len(is_), dtype=np.float64)
        order = np.argsort(is_, kind="stable")
        si, sj = is_[order], js[order]
        start = 0
        while start < len(si):
            stop = start
            while stop < len(si) and si[stop] == si[start]:
                stop += 1
            vals = self._block(si[start:start + 1], sj[start:stop], counted)[0]
            out[order[start:stop]] = vals
            start = stop
        return out

    @property
    def counter(self) -> QueryCounter:
        raise NotImplementedError

    # -- counted access ----------------------------------------------------
    def block(self, rows, cols) -> np.ndarray:
        """Costs of the outer product ``rows x cols`` (side-0 x side-1 indices)."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return self._block(rows, cols, True)

    def pairs(self, is_, js) -> np.ndarray:
        """Element-wise costs ``c(is_[t], js[t])``."""
        is_ = np.asarray(is_, dtype=np.int64)
        js = np.asarray(js, dtype=np.int64)
        return self._pairs(is_, js, True)

    def peek_pairs(self, is_, js) -> np.ndarray:
        is_ = np.asarray(is_, dtype=np.int64)
        js = np.asarray(js, dtype=np.int64)
        return self._pairs(is_, js, False)

    def value(self, i: int, j: int) -> float:
        return float(self._block(np.array([i]), np.array([j]), True)[0, 0])

    # -- uncounted diagnostics ---------------------------------------------
    def peek_block(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return self._block(rows, cols, False)

    def peek_value(self, i: int, j: int) -> float:
        return float(self._block(np.array([i]), np.array([j]), False)[0, 0])

    def peek_dense(self) -> np.ndarray:
        idx = np.arange(self.n)
        return self.peek_block(idx, idx)

    def dense(self) -> np.ndarray:
        """Counted read of the full matrix."""
        idx = np.arange(self.n)
        return self.block(idx, idx)


class _RootCost(CostOracle):
    """Base for oracles that own the counter."""

    def __init__(self, n: int):
        super().__init__(n)
        self._counter = QueryCounter()

    @property
    def counter(self) -> QueryCounter:
        return self._counter


class MatrixCost(_RootCost):
    """Dense-matrix adapter (used for file-backed instances)."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("cost matrix must be square")
        super().__init__(matrix.shape[0])
        self._m = matrix

    def _block(self, rows, cols, counted):
        if counted:
            self._counter.add(len(rows) * len(cols))
        return self._m[np.ix_(rows, cols)]

    def _pairs(self, is_, js, counted):
        if counted:
            self._counter.add(len(is_))
        return self._m[is_, js]


class FunctionCost(_RootCost):
    """Cost oracle backed by a vectorized block callback.

    ``fn(rows, cols)`` must return the outer-product block; an optional
    ``pair_fn(is_, js)`` answers element-wise queries without forming the
    block.  It is the generator's job to make both deterministic.
    """

    def __init__(self, n: int, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 pair_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None):
        super().__init__(n)
        self._fn = fn
        self._pair_fn = pair_fn

    def _block(self, rows, cols, counted):
        if counted:
            self._counter.add(len(rows) * len(cols))
        return np.asarray(self._fn(rows, cols), dtype=np.float64)

    def _pairs(self, is_, js, counted):
        if self._pair_fn is None:
            return super()._pairs(is_, js, counted)
        if counted:
            self._counter.add(len(is_))
        return np.asarray(self._pair_fn(is_, js), dtype=np.float64)


class _AdapterCost(CostOracle):
    """Base for cost adapters layered over another oracle."""

    def __init__(self, base: CostOracle, n: int | None = None):
        super().__init__(base.n if n is None else n)
        self.base = base

    @property
    def counter(self) -> QueryCounter:
        return self.base.counter


class ScaledCost(_AdapterCost):
    """Lazy multiplicative rescale ``c <- factor * c``."""

    def __init__(self, base: CostOracle, factor: float):
        super().__init__(base)
        self.factor = float(factor)

    def _block(self, rows, cols, counted):
        return self.base._block(rows, cols, counted) * self.factor

    def _pairs(self, is_, js, counted):
        return self.base._pairs(is_, js, counted) * self.factor


class ThresholdedCostView(_AdapterCost):
    """Keep edges of cost <= limit; everything above becomes a non-edge."""

    def __init__(self, base: CostOracle, limit: float):
        super().__init__(base)
        self.limit = float(limit)

    def _block(self, rows, cols, counted):
        vals = self.base._block(rows, cols, counted)
        return np.where(vals <= self.limit, vals, np.inf)

    def _pairs(self, is_, js, counted):
        vals = self.base._pairs(is_, js, counted)
        return np.where(vals <= self.limit, vals, np.inf)


def query_count(instance: "BipartiteInstance") -> int:
    """Exact number of cost-matrix entries read since construction/reset."""
    return instance.query_count


class BipartiteInstance:
    """A complete bipartite instance: side size ``n`` plus a cost oracle."""

    def __init__(self, n: int, cost: CostOracle):
        if n <= 0:
            raise ValueError("n must be positive")
        if cost.n != n:
            raise ValueError("cost oracle size mismatch")
        self.n = int(n)
        self.cost = cost

    @classmethod
    def from_matrix(cls, matrix) -> "BipartiteInstance":
        cost = MatrixCost(np.asarray(matrix, dtype=np.float64))
        return cls(cost.n, cost)

    @classmethod
    def from_function(cls, n, fn) -> "BipartiteInstance":
        return cls(n, FunctionCost(n, fn))

    @property
    def query_count(self) -> int:
        return self.cost.counter.count

    def reset_query_count(self):
        self.cost.counter.reset()


def write_instance(instance_or_matrix, path, binary: bool = False):
    """Write an instance file.

    Text format: a header line ``n`` followed by n rows of n space-separated
    decimal costs.  Binary format: magic ``SUBM1``, little-endian u64 n, then
    n^2 little-endian f64 values in row-major order.
    """
    if isinstance(instance_or_matrix, BipartiteInstance):
        matrix = instance_or_matrix.cost.peek_dense()
    else:
        matrix = np.asarray(instance_or_matrix, dtype=np.float64)
    n = matrix.shape[0]
    path = Path(path)
    if binary:
        with open(path, "wb") as fh:
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<Q", n))
            fh.write(matrix.astype("<f8").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"{n}\n")
            for row in matrix:
                fh.write(" ".join(repr(float(x)) for x in row))
                fh.write("\n")


def read_instance(path) -> BipartiteInstance:
    """Read an instance file (format auto-detected from the magic bytes)."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
        if head == BINARY_MAGIC:
            (n,) = struct.unpack("<Q", fh.read(8))
            data = np.frombuffer(fh.read(8 * n * n), dtype="<f8")
            matrix = data.reshape(n, n).astype(np.float64)
            return BipartiteInstance.from_matrix(matrix)
    with open(path, "r") as fh:
        n = int(fh.readline().strip())
        rows = [np.array(fh.readline().split(), dtype=np.float64) for _ in range(n)]
    matrix = np.vstack(rows)
    if matrix.shape != (n, n):
        raise ValueError(f"malformed instance file: expected {n}x{n} matrix")
    return BipartiteInstance.from_matrix(matrix)


# ---------------------------------------------------------------------------
# Matching oracles
# ---------------------------------------------------------------------------

class MatchingOracle:
    """Implicit matching answering ``mate(u) -> v or None`` on global ids.

    Invariants (enforced by construction, checked by the test suite):
    symmetry ``mate(mate(u)) == u``, bipartiteness (mates live on the
    opposite side) and determinism.

    Oracles are immutable, so layered implementations (overlays, filters,
    thresholds) memoize their answers; without the memo a query would walk
    the whole layer chain every time.
    """

    #: rough query-time budget class, for accounting/reporting
    time_class = "exact-array"
    #: layered subclasses set this to memoize resolved mates
    cache_mates = False

    def __init__(self, n: int, size_hint: int | None = None):
        self.n = int(n)
        self.size_hint = size_hint
        if self.cache_mates:
            self._mcache = np.zeros(2 * self.n, dtype=np.int64)
            self._mhave = np.zeros(2 * self.n, dtype=bool)

    def _mates_impl(self, us: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def mates(self, us) -> np.ndarray:
        """Vectorized mate query; UNMATCHED encodes "no mate"."""
        us = np.asarray(us, dtype=np.int64)
        if not self.cache_mates:
            return self._mates_impl(us)
        missing = us[~self._mhave[us]]
        if len(missing):
            missing = np.unique(missing)
            self._mcache[missing] = self._mates_impl(missing)
            self._mhave[missing] = True
        return self._mcache[us]

    def mate(self, u: int):
        m = int(self.mates(np.array([u], dtype=np.int64))[0])
        return None if m == UNMATCHED else m

    # side-indexed convenience: mates of all V0 / V1 vertices as index arrays
    def mate_of_v0(self) -> np.ndarray:
        out = self.mates(v0(np.arange(self.n, dtype=np.int64)))
        return np.where(out == UNMATCHED, UNMATCHED, out >> 1)

    def mate_of_v1(self) -> np.ndarray:
        out = self.mates(v1(np.arange(self.n, dtype=np.int64)))
        return np.where(out == UNMATCHED, UNMATCHED, out >> 1)

    def size(self) -> int:
        """Exact matched-pair count (Theta(n) mate queries; desk scale)."""
        return int(np.count_nonzero(self.mate_of_v0() != UNMATCHED))

    def edges(self) -> list[tuple[int, int]]:
        """Explicit (i, j) index pairs (desk scale)."""
        m0 = self.mate_of_v0()
        return [(i, int(j)) for i, j in enumerate(m0) if j != UNMATCHED]


class EmptyMatching(MatchingOracle):
    def __init__(self, n: int):
        super().__init__(n, size_hint=0)

    def _mates_impl(self, us):
        return np.full(len(us), UNMATCHED, dtype=np.int64)


class ArrayMatching(MatchingOracle):
    """Matching stored as per-side mate-index arrays."""

    def __init__(self, mate0: np.ndarray, mate1: np.ndarray):
        mate0 = np.asarray(mate0, dtype=np.int64)
        mate1 = np.asarray(mate1, dtype=np.int64)
        if len(mate0) != len(mate1):
            raise ValueError("side arrays must have equal length")
        super().__init__(len(mate0), size_hint=int(np.count_nonzero(mate0 >= 0)))
        self._mate0 = mate0
        self._mate1 = mate1

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "ArrayMatching":
        mate0 = np.full(n, UNMATCHED, dtype=np.int64)
        mate1 = np.full(n, UNMATCHED, dtype=np.int64)
        for i, j in pairs:
            if mate0[i] != UNMATCHED or mate1[j] != UNMATCHED:
                raise ValueError("pairs do not form a matching")
            mate0[i] = j
            mate1[j] = i
        return cls(mate0, mate1)

    def _mates_impl(self, us):
        idx = us >> 1
        is1 = (us & 1).astype(bool)
        out = np.where(is1, self._mate1[idx], self._mate0[idx])
        # encode side: V0's mate is on side 1 and vice versa
        enc = np.where(is1, out << 1, (out << 1) | 1)
        return np.where(out == UNMATCHED, UNMATCHED, enc)


class OverlayMatching(MatchingOracle):
    """A matching expressed as a small patch over a base oracle.

    Holds a reference to the base (never a copy); only the vertices whose
    mate changed are stored explicitly.
    """

    time_class = "lazy-overlay"
    cache_mates = True

    def __init__(self, base: MatchingOracle, changed: dict[int, int]):
        # changed maps global id -> new mate global id (UNMATCHED to free it)
        super().__init__(base.n)
        self.base = base
        keys = np.fromiter(changed.keys(), dtype=np.int64, count=len(changed))
        order = np.argsort(keys)
        self._keys = keys[order]
        self._vals = np.fromiter(changed.values(), dtype=np.int64, count=len(changed))[order]
        base_hint = base.size_hint if base.size_hint is not None else base.size()
        gained = sum(1 for u, m in changed.items() if m != UNMATCHED)
        lost = sum(1 for u, m in changed.items() if m == UNMATCHED)
        self.size_hint = base_hint + (gained - lost) // 2

    def _mates_impl(self, us):
        out = self.base.mates(us)
        if len(self._keys):
            pos = np.clip(np.searchsorted(self._keys, us), 0, len(self._keys) - 1)
            hit = self._keys[pos] == us
            out = np.where(hit, self._vals[pos], out)
        return out


# ---------------------------------------------------------------------------
# Potential and membership oracles
# ---------------------------------------------------------------------------

class PotentialOracle:
    """Integer dual potential with a declared range bound.

    ``range_bound`` is an upper bound on the number of distinct values the
    oracle may take.  Evaluations are cached: the oracle DAG built across
    template iterations is immutable, so the cache is sound and keeps the
    layered evaluation cost linear instead of exponential in depth.
    """

    def __init__(self, n: int, range_bound: int):
        self.n = int(n)
        self.range_bound = int(range_bound)
        self._cache = np.zeros(2 * n, dtype=np.int64)
        self._have = np.zeros(2 * n, dtype=bool)

    def _eval_missing(self, us: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eval_many(self, us) -> np.ndarray:
        us = np.asarray(us, dtype=np.int64)
        missing = us[~self._have[us]]
        if len(missing):
            missing = np.unique(missing)
            self._cache[missing] = self._eval_missing(missing)
            self._have[missing] = True
        return self._cache[us]

    def eval(self, u: int) -> int:
        return int(self.eval_many(np.array([u], dtype=np.int64))[0])

    def on_v0(self) -> np.ndarray:
        return self.eval_many(v0(np.arange(self.n, dtype=np.int64)))

    def on_v1(self) -> np.ndarray:
        return self.eval_many(v1(np.arange(self.n, dtype=np.int64)))


class ZeroPotential(PotentialOracle):
    def __init__(self, n: int, range_bound: int = 1):
        super().__init__(n, range_bound)

    def _eval_missing(self, us):
        return np.zeros(len(us), dtype=np.int64)


class MembershipOracle:
    """Deterministic vertex-set predicate on global ids (cached)."""

    def __init__(self, n: int):
        self.n = int(n)
        self._cache = np.zeros(2 * n, dtype=bool)
        self._have = np.zeros(2 * n, dtype=bool)

    def _contains_missing(self, us: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains_many(self, us) -> np.ndarray:
        us = np.asarray(us, dtype=np.int64)
        missing = us[~self._have[us]]
        if len(missing):
            missing = np.unique(missing)
            self._cache[missing] = self._contains_missing(missing)
            self._have[missing] = True
        return self._cache[us]

    def contains(self, u: int) -> bool:
        return bool(self.contains_many(np.array([u], dtype=np.int64))[0])


class SetMembership(MembershipOracle):
    def __init__(self, n: int, members: Iterable[int]):
        super().__init__(n)
        self._members = frozenset(int(u) for u in members)

    def _contains_missing(self, us):
        return np.fromiter((u in self._members for u in us), dtype=bool, count=len(us))


class FreeV0Membership(MembershipOracle):
    """The set F0 of matching-free side-0 vertices."""

    def __init__(self, matching: MatchingOracle):
        super().__init__(matching.n)
        self.matching = matching

    def _contains_missing(self, us):
        is0 = (us & 1) == 0
        out = np.zeros(len(us), dtype=bool)
        if is0.any():
            out[is0] = self.matching.mates(us[is0]) == UNMATCHED
        return out


# ---------------------------------------------------------------------------
# Eligibility
# ---------------------------------------------------------------------------

def is_one_feasible(u: int, v: int, phi: PotentialOracle, matching: MatchingOracle,
                    cost: CostOracle) -> bool:
    """1-feasibility of the edge (u, v), u on side 0 and v on side 1.

    phi(u) + phi(v) <= c(u, v) + 1 always, with equality at c(u, v) required
    on matched edges.
    """
    if side(u) != 0 or side(v) != 1:
        raise ValueError("u must be a V0 vertex and v a V1 vertex")
    c = cost.value(index(u), index(v))
    s = phi.eval(u) + phi.eval(v)
    if matching.mate(u) == v:
        return s == c
    return s <= c + 1


class EligibilityView:
    """Tight-edge predicate over (cost, potential, matching).

    A non-matched edge is eligible iff phi(u) + phi(v) == c(u, v) + 1; a
    matched edge is eligible iff phi(u) + phi(v) == c(u, v).  In forward
    mode only non-matched eligible edges (oriented V0 -> V1) are exposed.
    """

    def __init__(self, cost: CostOracle, phi: PotentialOracle,
                 matching: MatchingOracle, mode: str = "eligibility"):
        if mode not in ("eligibility", "forward"):
            raise ValueError("mode must be 'eligibility' or 'forward'")
        self.cost = cost
        self.phi = phi
        self.matching = matching
        self.mode = mode

    def eligible(self, u: int, v: int) -> bool:
        if side(u) == side(v):
            raise ValueError("u and v must be on opposite sides")
        if side(u) == 1:
            u, v = v, u
        c = self.cost.value(index(u), index(v))
        s = self.phi.eval(u) + self.phi.eval(v)
        if self.matching.mate(u) == v:
            return False if self.mode == "forward" else s == c
        return s == c + 1

    def forward_block(self, rows, cols, counted: bool = True) -> np.ndarray:
        """Boolean block of non-matched eligible edges rows x cols."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        c = self.cost._block(rows, cols, counted)
        p0 = self.phi.eval_many(v0(rows))
        p1 = self.phi.eval_many(v1(cols))
        tight = (p0[:, None] + p1[None, :]) == c + 1
        mate_r = self.matching.mates(v0(rows))
        has = mate_r != UNMATCHED
        if has.any():
            mate_idx = np.where(has, mate_r >> 1, -1)
            colpos = {int(j): t for t, j in enumerate(cols)}
            for r in np.nonzero(has)[0]:
                t = colpos.get(int(mate_idx[r]))
                if t is not None:
                    tight[r, t] = False
        return tight


def is_eligible(u: int, v: int, view: EligibilityView) -> bool:
    return view.eligible(u, v)
