import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from geoopinion.network import (
    Adjacency,
    ConnectionParams,
    EdgeSampler,
    clustering_coefficient,
    clustering_coefficients,
    connection_probability,
    mean_clustering_coefficient,
    mean_in_degree,
    sample_adjacency,
    sample_weight,
    sample_weights,
    weight_ccdf,
    weights_from_uniform,
)
from geoopinion.spatial import ConfigurationError


def brute_clustering(dense: np.ndarray, u: int) -> float:
    """dense[a, b] = 1 for edge a -> b."""
    n = len(dense)
    nbrs = [v for v in range(n) if v != u and dense[v, u]]
    k = len(nbrs)
    if k <= 1:
        return 0.0
    linked = sum(1 for a in nbrs for b in nbrs if a != b and dense[a, b])
    return linked / (k * (k - 1))


def random_dense(rng, n, p):
    dense = rng.random((n, n)) < p
    np.fill_diagonal(dense, False)
    return dense


def to_adjacency(dense):
    n = len(dense)
    return Adjacency.from_edges(n, [(a, b) for a in range(n) for b in range(n) if dense[a, b]])


# --- weights ---------------------------------------------------------------


def test_weight_closed_form():
    # 0.25 ** (-2/3) evaluated with mpmath at 30 digits
    assert weights_from_uniform(0.25, 1.5) == pytest.approx(2.519842099789746, rel=1e-15)


def test_weight_at_support_boundary():
    assert weights_from_uniform(1.0, 1.5) == 1.0
    assert weights_from_uniform(1 - 1e-12, 1.5) == pytest.approx(1.0, abs=1e-11)


def test_weight_rejects_bad_gamma():
    with pytest.raises(ConfigurationError):
        sample_weight(0.0, np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        sample_weights(5, -1.0, np.random.default_rng(0))


def test_weights_at_least_one():
    w = sample_weights(50_000, 1.5, np.random.default_rng(4))
    assert (w >= 1).all() and np.isfinite(w).all()


def test_weight_tail_and_ks():
    w = sample_weights(100_000, 1.5, np.random.default_rng(9))
    assert abs(np.mean(w > 4) - 4**-1.5) < 0.01
    ks = stats.kstest(w, lambda x: 1 - weight_ccdf(x, 1.5)).statistic
    assert ks < 0.01


# --- connection probability ------------------------------------------------

CP = ConnectionParams(lam=1.0, delta=8.0, alpha=2.0, b=1.5)


def test_probability_all_factors_one():
    assert connection_probability((0, 0), (0, 0), 1.0, 0.3, 0.3, CP) == 1.0


def test_probability_zero_at_threshold():
    assert connection_probability((0, 0), (0, 0), 1.0, 0.0, 1.5, CP) == 0.0
    assert connection_probability((0, 0), (0, 0), 1.0, -0.75, 0.75, CP) == 0.0


def test_probability_one_reference_length():
    assert connection_probability((0, 0), (1, 0), 1.0, 0.0, 0.0, CP) == pytest.approx(1 / 256, rel=1e-14)


def test_probability_capped():
    assert connection_probability((0, 0), (0, 0), 100.0, 0.0, 0.0, CP) == 1.0


def test_probability_huge_weight_far_away_is_finite():
    p = connection_probability((0, 0), (1e6, 0), 1e200, 0.0, 0.0, CP)
    assert 0.0 <= p <= 1.0


@given(
    d1=st.floats(0, 50),
    d2=st.floats(0, 50),
    w1=st.floats(1, 1e3),
    w2=st.floats(1, 1e3),
    delta=st.floats(0, 10),
    alpha=st.floats(0, 10),
)
def test_probability_monotone(d1, d2, w1, w2, delta, alpha):
    cp = ConnectionParams(lam=0.7, delta=delta, alpha=alpha, b=1.0)
    near, far = sorted((d1, d2))
    lo_w, hi_w = sorted((w1, w2))
    p = lambda d, w: connection_probability((0, 0), (d, 0), w, 0, 0, cp)
    assert p(far, lo_w) <= p(near, lo_w) * (1 + 1e-12)
    assert p(near, lo_w) <= p(near, hi_w) * (1 + 1e-12)
    assert 0 <= p(far, lo_w) <= 1


# --- sampling --------------------------------------------------------------


def test_two_agents_certain_edges():
    adj = sample_adjacency(np.zeros((2, 2)), np.ones(2), np.zeros(2), CP, seed=1)
    assert sorted(adj.edges()) == [(0, 1), (1, 0)]


def test_b_zero_gives_empty_graph():
    rng = np.random.default_rng(0)
    cp = ConnectionParams(lam=1.0, delta=0.0, alpha=0.0, b=0.0)
    adj = sample_adjacency(rng.random((30, 2)), np.ones(30), np.zeros(30), cp, seed=2)
    assert adj.edge_count == 0


def test_sampler_probabilities_match_scalar_formula():
    rng = np.random.default_rng(3)
    pos, w, h = rng.random((8, 2)), sample_weights(8, 1.5, rng), rng.uniform(-1, 1, 8)
    cp = ConnectionParams(lam=0.2, delta=3.0, alpha=1.5, b=0.8)
    p = EdgeSampler(pos, w, cp, seed=0).probabilities(h)
    for u, v in itertools.product(range(8), repeat=2):
        expected = 0.0 if u == v else connection_probability(pos[u], pos[v], w[v], h[u], h[v], cp)
        assert p[u, v] == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_edge_frequencies_and_independence():
    pos = np.array([[0.0, 0.0], [0.3, 0.0], [0.0, 0.5]])
    w = np.array([1.0, 1.4, 2.0])
    h = np.array([0.0, 0.4, -0.3])
    cp = ConnectionParams(lam=0.5, delta=2.0, alpha=1.0, b=1.0)
    sampler = EdgeSampler(pos, w, cp, seed=17)
    reps = 100_000
    hits = np.zeros((reps, 3, 3), dtype=bool)
    for t in range(reps):
        adj = sampler.sample(h, t)
        for u in range(3):
            hits[t, u, adj.in_neighbors(u)] = True
    freq = hits.mean(axis=0)
    analytic = np.array(
        [[0.0 if u == v else connection_probability(pos[u], pos[v], w[v], h[u], h[v], cp) for v in range(3)] for u in range(3)]
    )
    assert np.abs(freq - analytic).max() < 0.01
    # reciprocal pair (0->1, 1->0) and a shared-target pair are uncorrelated
    flat = hits.reshape(reps, 9).astype(float)
    for i, j in [(1, 3), (1, 2), (5, 7)]:
        cov = np.cov(flat[:, i], flat[:, j])[0, 1]
        assert abs(cov) < 0.005


def test_thread_count_does_not_change_graph():
    rng = np.random.default_rng(12)
    pos, w, h = rng.random((300, 2)), sample_weights(300, 1.5, rng), rng.uniform(-1, 1, 300)
    cp = ConnectionParams(lam=0.1, delta=8.0, alpha=2.0, b=1.5)
    a1 = EdgeSampler(pos, w, cp, seed=5, threads=1).sample(h, 3)
    a4 = EdgeSampler(pos, w, cp, seed=5, threads=4).sample(h, 3)
    assert np.array_equal(a1.indptr, a4.indptr) and np.array_equal(a1.indices, a4.indices)


def test_graphs_differ_between_steps():
    rng = np.random.default_rng(12)
    pos, w, h = rng.random((200, 2)), sample_weights(200, 1.5, rng), rng.uniform(-1, 1, 200)
    sampler = EdgeSampler(pos, w, ConnectionParams(0.1, 8.0, 2.0, 1.5), seed=5)
    assert set(sampler.sample(h, 0).edges()) != set(sampler.sample(h, 1).edges())


# --- statistics ------------------------------------------------------------


def test_empty_graph_stats():
    adj = Adjacency.from_edges(5, [])
    assert mean_in_degree(adj) == 0
    assert mean_clustering_coefficient(adj) == 0


def test_complete_graph_stats():
    adj = Adjacency.from_edges(4, [(a, b) for a in range(4) for b in range(4) if a != b])
    assert mean_in_degree(adj) == 3
    assert mean_clustering_coefficient(adj) == 1


def test_zero_agents_is_an_error():
    adj = Adjacency(0, np.zeros(1), np.zeros(0))
    with pytest.raises(ValueError):
        mean_in_degree(adj)
    with pytest.raises(ValueError):
        mean_clustering_coefficient(adj)


def test_clustering_single_in_neighbour():
    adj = Adjacency.from_edges(3, [(1, 0), (1, 2), (2, 1)])
    assert clustering_coefficient(adj, 0) == 0.0


def test_clustering_mutual_pair():
    adj = Adjacency.from_edges(3, [(1, 0), (2, 0), (1, 2), (2, 1)])
    assert clustering_coefficient(adj, 0) == 1.0
    adj = Adjacency.from_edges(3, [(1, 0), (2, 0), (1, 2)])
    assert clustering_coefficient(adj, 0) == 0.5


def test_clustering_five_node_oracle():
    dense = random_dense(np.random.default_rng(21), 5, 0.6)
    adj = to_adjacency(dense)
    for u in range(5):
        assert clustering_coefficient(adj, u) == brute_clustering(dense, u)
    assert np.array_equal(clustering_coefficients(adj), [brute_clustering(dense, u) for u in range(5)])


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 12), p=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_stats_match_brute_force(n, p, seed):
    dense = random_dense(np.random.default_rng(seed), n, p)
    adj = to_adjacency(dense)
    assert mean_in_degree(adj) == dense.sum() / n
    assert mean_in_degree(adj) == adj.out_degrees().sum() / n
    brute = [brute_clustering(dense, u) for u in range(n)]
    assert clustering_coefficients(adj).tolist() == brute
    assert [clustering_coefficient(adj, u) for u in range(n)] == brute


def test_adjacency_rejects_bad_edges():
    with pytest.raises(ValueError):
        Adjacency.from_edges(3, [(0, 0)])
    with pytest.raises(ValueError):
        Adjacency.from_edges(3, [(0, 3)])


def test_adjacency_membership():
    adj = Adjacency.from_edges(4, [(0, 1), (2, 1), (3, 0)])
    assert adj.has_edge(0, 1) and adj.has_edge(3, 0)
    assert not adj.has_edge(1, 0)
    assert adj.in_neighbors(1).tolist() == [0, 2]
