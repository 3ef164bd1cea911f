import time

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from periodic_koopman.matching import (
    UNMATCHED,
    BipartiteGraph,
    Matching,
    has_augmenting_path,
    is_perfect,
    max_matching,
)


def kuhn_size(n_left, adjacency):
    """Reference maximum matching: one DFS augmenting path per left vertex."""
    match_r = {}

    def try_augment(u, seen):
        for v in adjacency[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_r or try_augment(match_r[v], seen):
                match_r[v] = u
                return True
        return False

    return sum(try_augment(u, set()) for u in range(n_left))


def random_graph(gen, n_left, n_right, p):
    adj = [sorted(set(np.flatnonzero(gen.random(n_right) < p).tolist())) for _ in range(n_left)]
    return adj, BipartiteGraph.from_adjacency(n_right, adj)


def test_small_examples():
    g = BipartiteGraph.from_edges(2, 2, [(0, 0), (0, 1), (1, 0)])
    m = max_matching(g)
    assert m.size == 2
    assert m.pair_of_left.tolist() == [1, 0]
    k33 = BipartiteGraph.from_edges(3, 3, [(i, j) for i in range(3) for j in range(3)])
    assert max_matching(k33).size == 3


def test_is_perfect_examples():
    k22 = BipartiteGraph.from_edges(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)])
    assert is_perfect(max_matching(k22), k22)
    g = BipartiteGraph.from_edges(2, 1, [(0, 0), (1, 0)])
    assert not is_perfect(max_matching(g), g)
    g = BipartiteGraph.from_edges(2, 2, [(0, 0), (1, 0)])
    assert not is_perfect(max_matching(g), g)
    empty = BipartiteGraph.from_edges(0, 0, [])
    assert is_perfect(max_matching(empty), empty)


def test_against_reference_on_random_graphs():
    gen = np.random.default_rng(2)
    for trial in range(50):
        nl, nr = int(gen.integers(1, 40)), int(gen.integers(1, 40))
        adj, g = random_graph(gen, nl, nr, float(gen.uniform(0.02, 0.3)))
        m = max_matching(g)
        assert m.is_valid(g)
        assert m.size == kuhn_size(nl, adj), trial
        assert not has_augmenting_path(g, m)


def test_against_scipy_on_larger_graphs():
    gen = np.random.default_rng(3)
    for _ in range(5):
        n = 3000
        adj, g = random_graph(gen, n, n, 2.5 / n)
        mat = csr_matrix((np.ones(g.n_edges), g.indices, g.indptr), shape=(n, n))
        ref = maximum_bipartite_matching(mat, perm_type="column")
        assert max_matching(g).size == int(np.sum(ref >= 0))


def test_warm_start_from_submatching():
    gen = np.random.default_rng(4)
    adj, g = random_graph(gen, 60, 60, 0.08)
    full = max_matching(g)
    partial = full.pair_of_left.copy()
    partial[::2] = UNMATCHED
    warm = max_matching(g, initial=Matching(partial, 60))
    assert warm.size == full.size
    assert warm.is_valid(g)


def test_deterministic():
    gen = np.random.default_rng(5)
    _, g = random_graph(gen, 200, 200, 0.02)
    assert np.array_equal(max_matching(g).pair_of_left, max_matching(g).pair_of_left)


def test_graph_normalisation_and_validation():
    g = BipartiteGraph.from_edges(2, 3, [(1, 2), (0, 1), (1, 0), (1, 2)])
    assert g.neighbors(0).tolist() == [1]
    assert g.neighbors(1).tolist() == [0, 2]
    assert g.n_edges == 3
    with pytest.raises(ValueError):
        BipartiteGraph.from_edges(2, 2, [(2, 0)])
    with pytest.raises(ValueError):
        BipartiteGraph.from_edges(2, 2, [(0, 5)])
    with pytest.raises(ValueError):
        BipartiteGraph(2, 2, np.array([0, 1]), np.array([0]))
    small = BipartiteGraph.from_edges(2, 3, [(1, 2)])
    assert small.is_subgraph_of(g)
    assert not g.is_subgraph_of(small)


def test_invalid_matching_detected():
    g = BipartiteGraph.from_edges(2, 2, [(0, 0), (1, 1)])
    assert not Matching(np.array([0, 0]), 2).is_valid()
    assert not Matching(np.array([1, UNMATCHED]), 2).is_valid(g)


def _timed(g, reps=3):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        max_matching(g)
        best = min(best, time.perf_counter() - t0)
    return best


def test_scaling_is_subquadratic():
    gen = np.random.default_rng(6)
    sizes = (20_000, 40_000)
    times = []
    for n in sizes:
        _, g = random_graph_sparse(gen, n, 3)
        times.append(_timed(g))
    assert times[1] / times[0] < 4.0, times


def random_graph_sparse(gen, n, degree):
    left = np.repeat(np.arange(n), degree)
    right = gen.integers(0, n, n * degree)
    g = BipartiteGraph.from_edges(n, n, np.column_stack([left, right]))
    return None, g
