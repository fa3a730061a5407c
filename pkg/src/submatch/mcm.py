"""Max-cardinality-matching subroutines behind one contract, two backends.

The template algorithm only ever talks to three subroutines: approximate
matching size, large-matching extraction inside a vertex set, and
bounded-length augmentation over eligible edges (plus the potential-aware
forward variant that buckets edges by potential values).  The exact
backend satisfies every contract deterministically by materializing the
relevant graph lazily and running Hopcroft-Karp; the sampled backend is a
best-effort randomized implementation under a hard per-call query budget
and exists to demonstrate empirical sublinearity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    UNMATCHED, ArrayMatching, CostOracle, MatchingOracle, MembershipOracle,
    OverlayMatching, PotentialOracle, v0, v1,
)

__all__ = [
    "SubroutineParams", "Backend", "backend_query_budget", "delta_out",
    "delta_out_forward", "GraphView", "MaskView", "ThresholdView",
]


@dataclass(frozen=True)
class SubroutineParams:
    """Knobs shared by the matching subroutines."""

    epsilon: float = 0.1   # query/time knob, (0, 0.2]
    delta_in: float = 0.1  # matching-density threshold
    gamma: float = 0.1
    k: int = 3             # odd-path length bound

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.2:
            raise ValueError("epsilon must be in (0, 0.2]")
        if not 0.0 < self.delta_in < 1.0:
            raise ValueError("delta_in must be in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def delta_out(delta_in: float) -> float:
    """Guaranteed matching density returned by large_match."""
    return delta_in ** 5 / 2000.0


def delta_out_forward(delta_in: float, range_bound: int) -> float:
    """Density guarantee of the potential-bucketed forward variant."""
    return delta_in ** 5 / (2000.0 * range_bound ** 10)


def backend_query_budget(params: SubroutineParams, n: int, variant: str = "sampled") -> int:
    """Maximum cost/edge queries one subroutine call may spend.

    The exact backend nominally reads the full matrix; the sampled backend
    is capped at O(n^(2-eps) log n) and the cap is asserted per call.
    """
    if n <= 0:
        return 0
    if variant == "exact":
        return n * n
    return math.ceil(4.0 * n ** (2.0 - params.epsilon) * math.log(max(n, 2)))


# ---------------------------------------------------------------------------
# Graph views
# ---------------------------------------------------------------------------

class GraphView:
    """Edge predicate over V0 x V1, block- and pair-queryable."""

    n: int

    def edge_block(self, rows, cols) -> np.ndarray:
        raise NotImplementedError

    def edge_pairs(self, is_, js) -> np.ndarray:
        raise NotImplementedError

    @property
    def counter(self):
        raise NotImplementedError


class MaskView(GraphView):
    """Explicit boolean adjacency (tests and small instances)."""

    def __init__(self, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ValueError("mask must be square")
        self.n = mask.shape[0]
        self._mask = mask
        from .core import QueryCounter
        self._counter = QueryCounter()

    def edge_block(self, rows, cols):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        self._counter.add(len(rows) * len(cols))
        return self._mask[np.ix_(rows, cols)]

    def edge_pairs(self, is_, js):
        is_ = np.asarray(is_, dtype=np.int64)
        self._counter.add(len(is_))
        return self._mask[is_, np.asarray(js, dtype=np.int64)]

    @property
    def counter(self):
        return self._counter


class ThresholdView(GraphView):
    """Edges of cost <= limit (infinite sentinels never qualify)."""

    def __init__(self, cost: CostOracle, limit: float):
        self.n = cost.n
        self.cost = cost
        self.limit = float(limit)

    def edge_block(self, rows, cols):
        return self.cost.block(rows, cols) <= self.limit

    def edge_pairs(self, is_, js):
        return self.cost.pairs(is_, js) <= self.limit

    @property
    def counter(self):
        return self.cost.counter


# ---------------------------------------------------------------------------
# Hopcroft-Karp over adjacency arrays (exact backend workhorse)
# ---------------------------------------------------------------------------

def _hopcroft_karp(adj: list[np.ndarray], n0: int, n1: int):
    """Iterative Hopcroft-Karp; adj[i] lists side-1 neighbors of i."""
    mate0 = np.full(n0, -1, dtype=np.int64)
    mate1 = np.full(n1, -1, dtype=np.int64)
    inf = n0 + n1 + 1
    dist = np.empty(n0, dtype=np.int64)
    size = 0
    while True:
        queue = []
        for i in range(n0):
            if mate0[i] == -1:
                dist[i] = 0
                queue.append(i)
            else:
                dist[i] = inf
        found = False
        head = 0
        while head < len(queue):
            i = queue[head]
            head += 1
            for j in adj[i]:
                m = mate1[j]
                if m == -1:
                    found = True
                elif dist[m] == inf:
                    dist[m] = dist[i] + 1
                    queue.append(int(m))
        if not found:
            return size, mate0, mate1
        # phase DFS, iterative to keep stack depth independent of n
        ptr = np.zeros(n0, dtype=np.int64)
        for start in range(n0):
            if mate0[start] != -1:
                continue
            stack = [start]
            path = []
            while stack:
                i = stack[-1]
                advanced = False
                while ptr[i] < len(adj[i]):
                    j = int(adj[i][ptr[i]])
                    ptr[i] += 1
                    m = mate1[j]
                    if m == -1:
                        # augment along path + (i, j)
                        path.append((i, j))
                        for pi, pj in path:
                            mate0[pi] = pj
                            mate1[pj] = pi
                        size += 1
                        for pi, _ in path:
                            dist[pi] = inf
                        stack = []
                        path = []
                        advanced = True
                        break
                    if dist[m] == dist[i] + 1:
                        path.append((i, j))
                        stack.append(int(m))
                        advanced = True
                        break
                if not advanced:
                    dist[i] = inf
                    stack.pop()
                    if path:
                        path.pop()


def _mask_to_adj(mask: np.ndarray) -> list[np.ndarray]:
    return [np.nonzero(row)[0] for row in mask]


def _global_matching(n: int, rows, cols, sub_mate0) -> ArrayMatching:
    """Lift a matching on (rows x cols) submatrix indices to instance indices."""
    mate0 = np.full(n, -1, dtype=np.int64)
    mate1 = np.full(n, -1, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    for r, jj in enumerate(sub_mate0):
        if jj != -1:
            i, j = rows[r], cols[jj]
            mate0[i] = j
            mate1[j] = i
    return ArrayMatching(mate0, mate1)


def _members_on_side(A: MembershipOracle | None, n: int, side_: int) -> np.ndarray:
    idx = np.arange(n, dtype=np.int64)
    if A is None:
        return idx
    ids = v0(idx) if side_ == 0 else v1(idx)
    return idx[A.contains_many(ids)]


# ---------------------------------------------------------------------------
# Eligibility helpers shared by both backends
# ---------------------------------------------------------------------------

class _Eligibility:
    """Dense snapshot of the eligibility graph for one subroutine call."""

    def __init__(self, cost: CostOracle, phi: PotentialOracle, matching: MatchingOracle):
        n = cost.n
        self.n = n
        self.phi0 = phi.eval_many(v0(np.arange(n, dtype=np.int64)))
        self.phi1 = phi.eval_many(v1(np.arange(n, dtype=np.int64)))
        self.mate0 = matching.mate_of_v0()
        self.mate1 = matching.mate_of_v1()
        c = cost.block(np.arange(n), np.arange(n))
        self.nonmatched = (self.phi0[:, None] + self.phi1[None, :]) == c + 1
        matched_rows = np.nonzero(self.mate0 != UNMATCHED)[0]
        self.nonmatched[matched_rows, self.mate0[matched_rows]] = False
        # matched edge (i, mate0[i]) is eligible iff potentials sum to its cost
        self.matched_tight = np.zeros(n, dtype=bool)
        if len(matched_rows):
            cm = c[matched_rows, self.mate0[matched_rows]]
            self.matched_tight[matched_rows] = (
                self.phi0[matched_rows] + self.phi1[self.mate0[matched_rows]] == cm)
        self._adj = None

    @property
    def adj(self) -> list[np.ndarray]:
        if self._adj is None:
            self._adj = [np.nonzero(row)[0] for row in self.nonmatched]
        return self._adj


def _free_edge_paths(elig: _Eligibility) -> list[list[int]]:
    """Length-1 case: greedy maximal matching on free x free eligible pairs."""
    free0 = np.nonzero(elig.mate0 == UNMATCHED)[0]
    free1 = np.nonzero(elig.mate1 == UNMATCHED)[0]
    if len(free0) == 0 or len(free1) == 0:
        return []
    sub = elig.nonmatched[np.ix_(free0, free1)]
    taken = np.zeros(len(free1), dtype=bool)
    paths = []
    for r, row in enumerate(sub):
        avail = row & ~taken
        c = int(np.argmax(avail))
        if avail[c]:
            taken[c] = True
            paths.append([int(free0[r]), int(free1[c])])
    return paths


def _find_exact_length_paths(elig: _Eligibility, half_len: int) -> list[list[int]]:
    """Maximal set of node-disjoint eligible augmenting paths with exactly
    ``half_len + 1`` non-matched edges (path length 2*half_len + 1).

    Greedy over free side-0 starts in ascending id order; within a start,
    exhaustive bounded-depth DFS with lowest-id-first neighbor order.  Once
    all starts are processed no further disjoint path of this exact length
    exists, which is the maximality the template needs.
    """
    if half_len == 0:
        return _free_edge_paths(elig)
    n = elig.n
    used0 = np.zeros(n, dtype=bool)
    used1 = np.zeros(n, dtype=bool)
    free0 = elig.mate0 == UNMATCHED
    free1 = elig.mate1 == UNMATCHED
    adj = elig.adj
    mate1 = elig.mate1
    mtight = elig.matched_tight
    paths = []
    for start in range(n):
        if not free0[start] or used0[start]:
            continue
        # pointer-stack DFS; the path alternates i, j, i, j, ...
        onpath0 = {start}
        onpath1 = set()
        seq = [start]
        nodes = [start]
        ptrs = [0]
        found = None
        while ptrs:
            i = nodes[-1]
            cand = adj[i]
            p = ptrs[-1]
            hops = len(ptrs)  # forward hops consumed by the next edge taken
            last = hops == half_len + 1
            advanced = False
            while p < len(cand):
                j = int(cand[p])
                p += 1
                if used1[j] or j in onpath1:
                    continue
                if last:
                    if free1[j]:
                        found = seq + [j]
                        break
                    continue
                i2 = int(mate1[j])
                if i2 == UNMATCHED or used0[i2] or i2 in onpath0 or not mtight[i2]:
                    continue
                ptrs[-1] = p
                onpath1.add(j)
                onpath0.add(i2)
                seq.extend([j, i2])
                nodes.append(i2)
                ptrs.append(0)
                advanced = True
                break
            if found is not None:
                break
            if not advanced:
                ptrs.pop()
                nodes.pop()
                if len(seq) > 1:
                    onpath0.discard(seq.pop())
                    onpath1.discard(seq.pop())
                else:
                    seq.pop()
        if found is not None:
            paths.append(found)
            for t, x in enumerate(found):
                if t % 2 == 0:
                    used0[x] = True
                else:
                    used1[x] = True
    return paths


def _augment_overlay(m_in: MatchingOracle, paths: list[list[int]]) -> OverlayMatching:
    """Flip a set of node-disjoint augmenting paths into an overlay oracle."""
    changed: dict[int, int] = {}
    for path in paths:
        # path = [i0, j1, i1, j2, ...]: new matched pairs are (i_t, j_{t+1})
        for t in range(0, len(path) - 1, 2):
            i, j = path[t], path[t + 1]
            changed[v0(i)] = v1(j)
            changed[v1(j)] = v0(i)
    out = OverlayMatching(m_in, changed)
    out.augmenting_paths = paths
    return out


# ---------------------------------------------------------------------------
# Backend
# ---------------------------------------------------------------------------

class Backend:
    """Exact or sampled realization of the matching subroutines.

    All randomness of the sampled backend derives from the seed; each call
    spawns a child RNG so runs are reproducible call-for-call.  Sampled
    calls are budget-capped and every call's query usage is logged and
    asserted against :func:`backend_query_budget`.
    """

    def __init__(self, variant: str = "exact", seed: int = 0, epsilon: float = 0.1):
        if variant not in ("exact", "sampled"):
            raise ValueError("variant must be 'exact' or 'sampled'")
        self.variant = variant
        self.seed = int(seed)
        self.epsilon = float(epsilon)
        self._seq = np.random.SeedSequence(self.seed)
        self.call_log: list[dict] = []

    @classmethod
    def exact(cls, seed: int = 0) -> "Backend":
        return cls("exact", seed)

    @classmethod
    def sampled(cls, seed: int = 0, epsilon: float = 0.1) -> "Backend":
        return cls("sampled", seed, epsilon)

    # -- plumbing -----------------------------------------------------------
    def _rng(self) -> np.random.Generator:
        child = self._seq.spawn(1)[0]
        return np.random.default_rng(child)

    def query_budget(self, n: int) -> int:
        params = SubroutineParams(epsilon=min(self.epsilon, 0.2))
        return backend_query_budget(params, n, self.variant)

    def _log(self, op: str, counter, before: int, n: int):
        used = counter.count - before
        budget = self.query_budget(n)
        rec = {"op": op, "queries": used, "budget": budget, "n": n}
        self.call_log.append(rec)
        if self.variant == "sampled" and used > budget:
            raise AssertionError(
                f"sampled backend exceeded its query budget in {op}: {used} > {budget}")

    # -- approx_match -------------------------------------------------------
    def approx_match(self, view: GraphView, epsilon: float):
        """Estimate the max-matching size of the view; returns (size, oracle)."""
        before = view.counter.count
        if self.variant == "exact":
            n = view.n
            mask = view.edge_block(np.arange(n), np.arange(n))
            size, mate0, mate1 = _hopcroft_karp(_mask_to_adj(mask), n, n)
            self._log("approx_match", view.counter, before, n)
            return size, ArrayMatching(mate0, mate1)
        size, mate0, mate1 = self._sampled_greedy(view, None, epsilon)
        self._log("approx_match", view.counter, before, view.n)
        return size, ArrayMatching(mate0, mate1)

    # -- large_match --------------------------------------------------------
    def large_match(self, view: GraphView, A: MembershipOracle | None,
                    epsilon: float, delta_in: float):
        """Matching oracle inside G[A] of density >= delta_out, or None.

        Exact backend: None exactly when mu(G[A]) < delta_in * n.
        """
        n = view.n
        before = view.counter.count
        rows = _members_on_side(A, n, 0)
        cols = _members_on_side(A, n, 1)
        if len(rows) == 0 or len(cols) == 0:
            self._log("large_match", view.counter, before, n)
            return None
        if self.variant == "exact":
            mask = view.edge_block(rows, cols)
            mu, sub_mate0, _ = _hopcroft_karp(_mask_to_adj(mask), len(rows), len(cols))
            self._log("large_match", view.counter, before, n)
            if mu < delta_in * n:
                return None
            return _global_matching(n, rows, cols, sub_mate0)
        size, mate0, mate1 = self._sampled_greedy(view, (rows, cols), epsilon)
        self._log("large_match", view.counter, before, n)
        if size >= delta_out(delta_in) * n and size > 0:
            return ArrayMatching(mate0, mate1)
        return None

    # -- large_matching_forward ---------------------------------------------
    def large_matching_forward(self, phi: PotentialOracle, A: MembershipOracle | None,
                               delta_in: float, epsilon: float,
                               matching: MatchingOracle, cost: CostOracle):
        """Large matching in the forward graph restricted to A, or None.

        Iterates potential-value pairs (i, j), restricting to
        phi^-1(i) x phi^-1(j) where the edge test degenerates to
        i + j == c(u, v) + 1, and halts at the first pair that yields a
        matching (each pair is a plain large_match with delta_in / R^2).
        """
        n = cost.n
        R = phi.range_bound
        before = cost.counter.count
        rows_all = _members_on_side(A, n, 0)
        cols_all = _members_on_side(A, n, 1)
        if len(rows_all) == 0 or len(cols_all) == 0:
            self._log("large_matching_forward", cost.counter, before, n)
            return None
        phi_r = phi.eval_many(v0(rows_all))
        phi_c = phi.eval_many(v1(cols_all))
        mate0 = matching.mate_of_v0()
        sub_delta = delta_in / (R * R)
        budget = self.query_budget(n)
        result = None
        for pv in np.unique(phi_r):
            rows = rows_all[phi_r == pv]
            for qv in np.unique(phi_c):
                cols = cols_all[phi_c == qv]
                target = float(pv + qv) - 1.0  # i + j == c + 1
                if target < 0.0:
                    continue  # costs are nonnegative: the bucket is empty
                if self.variant == "exact":
                    mask = cost.block(rows, cols) == target
                    _drop_matched(mask, rows, cols, mate0)
                    mu, sub_mate0, _ = _hopcroft_karp(
                        _mask_to_adj(mask), len(rows), len(cols))
                    if mu >= sub_delta * n:
                        result = _global_matching(n, rows, cols, sub_mate0)
                        break
                else:
                    remaining = budget - (cost.counter.count - before)
                    if remaining <= 0:
                        break
                    size, m0, m1 = self._sampled_greedy_subset(
                        cost, rows, cols, target, mate0, epsilon, remaining)
                    if size >= delta_out_forward(delta_in, R) * n and size > 0:
                        result = ArrayMatching(m0, m1)
                        break
            if result is not None:
                break
        self._log("large_matching_forward", cost.counter, before, n)
        return result

    # -- augment_eligible ----------------------------------------------------
    def augment_eligible(self, phi: PotentialOracle, m_in: MatchingOracle,
                         k: int, gamma: float, epsilon: float, cost: CostOracle):
        """Augment along node-disjoint eligible paths of length <= k, or None.

        Tries each exact odd length 2k'+1 <= k in turn and succeeds on the
        first length class that yields at least gamma * n / k disjoint paths
        (and at least one, so a successful call always makes progress).
        """
        n = cost.n
        before = cost.counter.count
        bar = gamma * n / k
        if not np.any(m_in.mate_of_v0() == UNMATCHED):
            self._log("augment_eligible", cost.counter, before, n)
            return None  # no free side-0 vertices, hence no augmenting paths
        if self.variant == "exact":
            elig = _Eligibility(cost, phi, m_in)
            out = None
            for half_len in range((k + 1) // 2):
                paths = _find_exact_length_paths(elig, half_len)
                if len(paths) >= bar and len(paths) >= 1:
                    out = _augment_overlay(m_in, paths)
                    break
            self._log("augment_eligible", cost.counter, before, n)
            return out
        out = self._sampled_augment(phi, m_in, k, bar, cost, before)
        self._log("augment_eligible", cost.counter, before, n)
        return out

    # -- sampled internals ---------------------------------------------------
    def _sampled_greedy(self, view: GraphView, subset, epsilon: float):
        """Greedy matching from random edge probes plus one length-3
        augmentation pass, all under the per-call budget."""
        n = view.n
        rng = self._rng()
        if subset is None:
            rows = np.arange(n, dtype=np.int64)
            cols = np.arange(n, dtype=np.int64)
        else:
            rows, cols = subset
        budget = self.query_budget(n)
        before = view.counter.count
        mate0 = np.full(n, -1, dtype=np.int64)
        mate1 = np.full(n, -1, dtype=np.int64)

        def remaining():
            return budget - (view.counter.count - before)

        stall = 0
        while remaining() > len(rows) and stall < 10:
            free_r = rows[mate0[rows] == -1]
            if len(free_r) == 0:
                break
            batch = min(len(free_r) * 2, max(remaining() // 2, 1), 400_000)
            is_ = rng.choice(free_r, size=batch)
            js = rng.choice(cols, size=batch)
            hits = view.edge_pairs(is_, js)
            progressed = False
            for i, j in zip(is_[hits], js[hits]):
                if mate0[i] == -1 and mate1[j] == -1:
                    mate0[i] = j
                    mate1[j] = i
                    progressed = True
            stall = 0 if progressed else stall + 1
        # one pass of random length-3 augmentations
        free_r = rows[mate0[rows] == -1]
        trials = 0
        while remaining() > 4 and trials < 2 * len(free_r):
            trials += 1
            if len(free_r) == 0:
                break
            i = int(rng.choice(free_r))
            j = int(rng.choice(cols))
            if not bool(view.edge_pairs([i], [j])[0]):
                continue
            if mate1[j] == -1:
                if mate0[i] == -1:
                    mate0[i] = j
                    mate1[j] = i
                    free_r = rows[mate0[rows] == -1]
                continue
            i2 = int(mate1[j])
            j2 = int(rng.choice(cols))
            if mate1[j2] == -1 and bool(view.edge_pairs([i2], [j2])[0]):
                mate0[i] = j
                mate1[j] = i
                mate0[i2] = j2
                mate1[j2] = i2
                free_r = rows[mate0[rows] == -1]
        size = int(np.count_nonzero(mate0 >= 0))
        return size, mate0, mate1

    def _sampled_greedy_subset(self, cost, rows, cols, target, base_mate0,
                               epsilon, sub_budget):
        """Greedy matching on a potential bucket under a budget slice."""
        n = cost.n
        rng = self._rng()
        before = cost.counter.count
        mate0 = np.full(n, -1, dtype=np.int64)
        mate1 = np.full(n, -1, dtype=np.int64)
        stall = 0
        while cost.counter.count - before < sub_budget - len(rows) and stall < 8:
            free_r = rows[mate0[rows] == -1]
            if len(free_r) == 0:
                break
            room = sub_budget - (cost.counter.count - before)
            batch = min(len(free_r) * 2, max(room // 2, 1), 400_000)
            is_ = rng.choice(free_r, size=batch)
            js = rng.choice(cols, size=batch)
            vals = cost.pairs(is_, js)
            hits = (vals == target) & (base_mate0[is_] != js)
            progressed = False
            for i, j in zip(is_[hits], js[hits]):
                if mate0[i] == -1 and mate1[j] == -1:
                    mate0[i] = j
                    mate1[j] = i
                    progressed = True
            stall = 0 if progressed else stall + 1
        return int(np.count_nonzero(mate0 >= 0)), mate0, mate1

    def _sampled_augment(self, phi, m_in, k, bar, cost, before):
        """Randomized bounded-depth search for disjoint eligible augmenting
        paths; succeeds on the first exact length class reaching the bar."""
        n = cost.n
        rng = self._rng()
        budget = self.query_budget(n)
        phi0 = phi.eval_many(v0(np.arange(n, dtype=np.int64)))
        phi1 = phi.eval_many(v1(np.arange(n, dtype=np.int64)))
        mate0 = m_in.mate_of_v0()
        mate1 = m_in.mate_of_v1()
        free0_all = np.nonzero(mate0 == UNMATCHED)[0]
        probes = max(16, int(round(n ** (1.0 - min(self.epsilon, 0.2)))))

        def tight_nm(i, js):
            vals = cost.pairs(np.full(len(js), i), js)
            return (phi0[i] + phi1[js] == vals + 1) & (mate0[i] != js)

        for half_len in range((k + 1) // 2):
            used0 = np.zeros(n, dtype=bool)
            used1 = np.zeros(n, dtype=bool)
            paths = []
            order = rng.permutation(free0_all)
            for start in order:
                if budget - (cost.counter.count - before) < probes * (half_len + 1) + 4:
                    break
                if used0[start]:
                    continue
                path = self._sample_one_path(
                    int(start), half_len, used0, used1, mate1, phi0, phi1,
                    mate0, cost, rng, probes, tight_nm)
                if path is not None:
                    paths.append(path)
                    for t, x in enumerate(path):
                        (used0 if t % 2 == 0 else used1)[x] = True
            if len(paths) >= bar and len(paths) >= 1:
                return _augment_overlay(m_in, paths)
        return None

    def _sample_one_path(self, start, half_len, used0, used1, mate1,
                         phi0, phi1, mate0, cost, rng, probes, tight_nm):
        seq = [start]
        onpath0 = {start}
        onpath1 = set()
        i = start
        for hop in range(half_len + 1):
            js = rng.integers(0, cost.n, size=probes)
            ok = tight_nm(i, js)
            cand = None
            last = hop == half_len
            for j in js[ok]:
                j = int(j)
                if used1[j] or j in onpath1:
                    continue
                i2 = int(mate1[j])
                if last:
                    if i2 == UNMATCHED:
                        cand = (j, None)
                        break
                    continue
                if i2 == UNMATCHED or used0[i2] or i2 in onpath0:
                    continue
                val = cost.pairs([i2], [j])[0]
                if phi0[i2] + phi1[j] != val:
                    continue  # matched edge not tight, cannot walk back
                cand = (j, i2)
                break
            if cand is None:
                return None
            j, i2 = cand
            seq.append(j)
            onpath1.add(j)
            if i2 is None:
                return seq
            seq.append(i2)
            onpath0.add(i2)
            i = i2
        return None


def _drop_matched(mask: np.ndarray, rows: np.ndarray, cols: np.ndarray,
                  mate0: np.ndarray):
    """Clear matched pairs from a non-matched-edge mask (in place)."""
    colpos = {int(j): t for t, j in enumerate(cols)}
    for r, i in enumerate(rows):
        m = mate0[i]
        if m != UNMATCHED:
            t = colpos.get(int(m))
            if t is not None:
                mask[r, t] = False
