import math

import numpy as np
import pytest

from submatch import baseline
from submatch.core import (
    UNMATCHED, ArrayMatching, BipartiteInstance, EmptyMatching, SetMembership,
    ZeroPotential, index, side, v0, v1,
)
from submatch.mcm import (
    Backend, MaskView, SubroutineParams, ThresholdView, backend_query_budget,
    delta_out,
)


class FixedPotential(ZeroPotential):
    """Potential given by explicit per-side arrays (test helper)."""

    def __init__(self, phi0, phi1, range_bound=None):
        self.p0 = np.asarray(phi0, dtype=np.int64)
        self.p1 = np.asarray(phi1, dtype=np.int64)
        values = len(set(self.p0) | set(self.p1))
        super().__init__(len(self.p0), range_bound or max(values, 1))

    def _eval_missing(self, us):
        out = np.empty(len(us), dtype=np.int64)
        for t, u in enumerate(us):
            out[t] = self.p0[index(u)] if side(u) == 0 else self.p1[index(u)]
        return out


def assert_valid_matching(m, n, view=None, members=None):
    m0 = m.mate_of_v0()
    m1 = m.mate_of_v1()
    for i in range(n):
        if m0[i] != UNMATCHED:
            assert m1[m0[i]] == i  # symmetry
            assert m.mate(v0(i)) == v1(m0[i])  # bipartite encoding
            if view is not None:
                assert view.edge_pairs([i], [m0[i]])[0]
            if members is not None:
                assert members.contains(v0(i)) and members.contains(v1(int(m0[i])))


# -- budgets -------------------------------------------------------------------

def test_backend_query_budget_examples():
    p = SubroutineParams(epsilon=0.2)
    assert backend_query_budget(p, 100, "exact") == 10_000
    assert backend_query_budget(p, 0, "sampled") == 0
    assert backend_query_budget(p, 0, "exact") == 0
    cap = backend_query_budget(SubroutineParams(epsilon=0.2), 10_000, "sampled")
    assert cap <= 40 * 10_000 ** 1.8 * math.log(10_000)


# -- approx_match ---------------------------------------------------------------

def test_approx_match_empty_graph():
    size, m = Backend.exact().approx_match(MaskView(np.zeros((5, 5), bool)), 0.1)
    assert size == 0 and m.size() == 0


def test_approx_match_perfect_matching_graph():
    size, m = Backend.exact().approx_match(MaskView(np.eye(8, dtype=bool)), 0.1)
    assert size == 8
    assert_valid_matching(m, 8, MaskView(np.eye(8, dtype=bool)))


def test_approx_match_complete_graph():
    size, _ = Backend.exact().approx_match(MaskView(np.ones((5, 5), bool)), 0.2)
    assert size == 5


def test_approx_match_exact_equals_hopcroft_karp_oracle():
    rng = np.random.default_rng(0)
    for _ in range(15):
        n = int(rng.integers(2, 24))
        mask = rng.random((n, n)) < 0.3
        size, m = Backend.exact().approx_match(MaskView(mask), 0.1)
        edges = [(i, j) for i in range(n) for j in range(n) if mask[i, j]]
        ref, _, _ = baseline.max_bipartite_matching(n, n, edges)
        assert size == ref
        assert m.size() == size
        assert_valid_matching(m, n, MaskView(mask))


# -- large_match -----------------------------------------------------------------

def test_large_match_bottom_cases():
    b = Backend.exact()
    empty_graph = MaskView(np.zeros((6, 6), bool))
    assert b.large_match(empty_graph, None, 0.1, 0.1) is None
    full = MaskView(np.ones((6, 6), bool))
    assert b.large_match(full, SetMembership(6, []), 0.1, 0.1) is None


def test_large_match_perfect_subgraph():
    n = 20
    m = Backend.exact().large_match(MaskView(np.eye(n, dtype=bool)), None, 0.1, 0.5)
    assert m is not None
    assert m.size() == n  # exact backend returns the full matching
    assert m.size() >= delta_out(0.5) * n


def test_large_match_exact_completeness():
    # bottom iff mu(G[A]) < delta_in * n, against an independent computation
    rng = np.random.default_rng(1)
    for trial in range(20):
        n = int(rng.integers(4, 28))
        mask = rng.random((n, n)) < rng.uniform(0.05, 0.5)
        a0 = rng.random(n) < 0.7
        a1 = rng.random(n) < 0.7
        members = SetMembership(n, [v0(i) for i in np.nonzero(a0)[0]]
                                + [v1(j) for j in np.nonzero(a1)[0]])
        delta_in = float(rng.uniform(0.05, 0.6))
        got = Backend.exact().large_match(MaskView(mask), members, 0.1, delta_in)
        edges = [(i, j) for i in range(n) for j in range(n)
                 if mask[i, j] and a0[i] and a1[j]]
        mu = baseline.max_bipartite_matching(n, n, edges)[0]
        if mu < delta_in * n:
            assert got is None
        else:
            assert got is not None
            assert got.size() == mu
            assert_valid_matching(got, n, MaskView(mask), members)


# -- large_matching_forward -------------------------------------------------------

def test_forward_bottom_when_no_tight_edges():
    n = 6
    inst = BipartiteInstance.from_matrix(np.full((n, n), 5.0))
    phi = FixedPotential(np.zeros(n), np.zeros(n))
    got = Backend.exact().large_matching_forward(
        phi, None, 0.3, 0.1, EmptyMatching(n), inst.cost)
    assert got is None


def test_forward_all_tight_returns_full_matching():
    n = 10
    inst = BipartiteInstance.from_matrix(np.zeros((n, n)))
    phi = FixedPotential(np.ones(n), np.zeros(n), range_bound=3)
    got = Backend.exact().large_matching_forward(
        phi, None, 0.3, 0.1, EmptyMatching(n), inst.cost)
    assert got is not None
    assert got.size() == n
    bar = 0.3 ** 5 / (2000 * 3 ** 10) * n
    assert got.size() >= math.ceil(bar)


def test_forward_bottom_when_one_side_missing():
    n = 6
    inst = BipartiteInstance.from_matrix(np.zeros((n, n)))
    phi = FixedPotential(np.ones(n), np.zeros(n))
    only_v0 = SetMembership(n, [v0(i) for i in range(n)])
    got = Backend.exact().large_matching_forward(
        phi, only_v0, 0.3, 0.1, EmptyMatching(n), inst.cost)
    assert got is None


def test_forward_excludes_matched_edges():
    n = 4
    costs = np.full((n, n), 5.0)
    np.fill_diagonal(costs, 1.0)  # only the matched edges satisfy c + 1 == 2
    inst = BipartiteInstance.from_matrix(costs)
    phi = FixedPotential([2, 2, 2, 2], [0, 0, 0, 0])
    matching = ArrayMatching.from_pairs(n, [(i, i) for i in range(n)])
    got = Backend.exact().large_matching_forward(
        phi, None, 0.2, 0.1, matching, inst.cost)
    assert got is None


# -- augment_eligible --------------------------------------------------------------

def test_augment_bottom_when_matching_perfect():
    n = 6
    inst = BipartiteInstance.from_matrix(np.ones((n, n)))
    matching = ArrayMatching.from_pairs(n, [(i, i) for i in range(n)])
    phi = FixedPotential(np.ones(n), np.zeros(n))
    got = Backend.exact().augment_eligible(phi, matching, 3, 0.3, 0.1, inst.cost)
    assert got is None


def test_augment_matches_all_free_edges():
    # all edges tight at c + 1, empty matching, gamma*n/k = 3
    n = 10
    inst = BipartiteInstance.from_matrix(np.ones((n, n)))
    phi = FixedPotential(np.full(n, 2), np.zeros(n))
    got = Backend.exact().augment_eligible(phi, EmptyMatching(n), 1, 0.3, 0.1, inst.cost)
    assert got is not None
    assert len(got.augmenting_paths) >= 3
    assert got.size() == n  # maximal set of length-1 paths on a complete graph


def test_augment_bottom_when_below_bar():
    # exactly one augmenting path available but gamma * n = 5 required
    n = 10
    costs = np.full((n, n), 50.0)
    costs[0, 0] = 1.0
    inst = BipartiteInstance.from_matrix(costs)
    phi = FixedPotential(np.full(n, 2), np.zeros(n))
    got = Backend.exact().augment_eligible(phi, EmptyMatching(n), 1, 0.5, 0.1, inst.cost)
    assert got is None


def test_augment_length_three_path():
    # single eligible length-3 path: u0 -> w1 -> u1 -> w2
    n = 4
    big = 50.0
    costs = np.full((n, n), big)
    costs[0, 1] = 1.0   # u0 - w1 tight at c+1: phi 2 + 0 = 2
    costs[1, 1] = 2.0   # matched (u1, w1) tight at c: 2 + 0 = 2
    costs[1, 2] = 1.0   # u1 - w2 tight at c+1
    inst = BipartiteInstance.from_matrix(costs)
    phi = FixedPotential([2, 2, 0, 0], [0, 0, 0, 0])
    matching = ArrayMatching.from_pairs(n, [(1, 1)])
    got = Backend.exact().augment_eligible(phi, matching, 3, 0.2, 0.1, inst.cost)
    assert got is not None
    assert got.augmenting_paths == [[0, 1, 1, 2]]
    assert got.mate(v0(0)) == v1(1)
    assert got.mate(v0(1)) == v1(2)


def test_augment_output_is_symmetric_difference_of_disjoint_paths():
    rng = np.random.default_rng(2)
    for trial in range(15):
        n = int(rng.integers(4, 16))
        costs = rng.integers(1, 4, (n, n)).astype(float)
        inst = BipartiteInstance.from_matrix(costs)
        pairs = []
        used1 = set()
        for i in range(0, n, 2):
            j = int(rng.integers(0, n))
            if j not in used1:
                pairs.append((i, j))
                used1.add(j)
        phi1 = np.zeros(n, dtype=int)
        phi0 = np.ones(n, dtype=int)
        for i, j in pairs:  # make matched edges tight at c
            phi1[j] = int(costs[i, j]) - 1
        inst2 = BipartiteInstance.from_matrix(costs)
        matching = ArrayMatching.from_pairs(n, pairs)
        phi = FixedPotential(phi0, phi1)
        k = 5
        got = Backend.exact().augment_eligible(phi, matching, k, 0.05, 0.1, inst2.cost)
        if got is None:
            continue
        # the symmetric difference must decompose into the reported paths
        before = set(map(tuple, ArrayMatching.from_pairs(n, pairs).edges()))
        after = set(map(tuple, got.edges()))
        sym = before ^ after
        seen_vertices = set()
        for path in got.augmenting_paths:
            assert len(path) % 2 == 0 and len(path) <= k + 1
            for t, x in enumerate(path):
                key = ("i", x) if t % 2 == 0 else ("j", x)
                assert key not in seen_vertices  # node-disjoint
                seen_vertices.add(key)
        path_edges = set()
        for path in got.augmenting_paths:
            for t in range(len(path) - 1):
                i, j = (path[t], path[t + 1]) if t % 2 == 0 else (path[t + 1], path[t])
                path_edges.add((i, j))
        assert sym == path_edges


# -- sampled backend -----------------------------------------------------------------

def test_sampled_backend_respects_budget_and_returns_valid_matchings():
    rng = np.random.default_rng(3)
    n = 64
    mask = rng.random((n, n)) < 0.5
    view = MaskView(mask)
    b = Backend.sampled(seed=7, epsilon=0.2)
    size, m = b.approx_match(view, 0.2)
    assert_valid_matching(m, n, MaskView(mask))
    assert size == m.size()
    for rec in b.call_log:
        assert rec["queries"] <= rec["budget"]


def test_sampled_large_match_finds_dense_matching():
    n = 64
    view = MaskView(np.ones((n, n), bool))
    b = Backend.sampled(seed=1, epsilon=0.1)
    m = b.large_match(view, None, 0.1, 0.5)
    assert m is not None
    assert m.size() >= delta_out(0.5) * n
    assert_valid_matching(m, n, MaskView(np.ones((n, n), bool)))


def test_sampled_augment_valid_and_budgeted():
    n = 48
    inst = BipartiteInstance.from_matrix(np.ones((n, n)))
    phi = FixedPotential(np.full(n, 2), np.zeros(n))
    b = Backend.sampled(seed=2, epsilon=0.1)
    got = b.augment_eligible(phi, EmptyMatching(n), 3, 0.1, 0.1, inst.cost)
    assert got is not None
    assert got.size() >= 1
    m0 = got.mate_of_v0()
    for i in np.nonzero(m0 != UNMATCHED)[0]:
        assert got.mate_of_v1()[m0[i]] == i
    for rec in b.call_log:
        assert rec["queries"] <= rec["budget"]


def test_sampled_reproducible():
    n = 40
    mask = np.random.default_rng(5).random((n, n)) < 0.4
    runs = []
    for _ in range(2):
        b = Backend.sampled(seed=11, epsilon=0.15)
        size, m = b.approx_match(MaskView(mask), 0.15)
        runs.append((size, tuple(m.mate_of_v0())))
    assert runs[0] == runs[1]
