"""Influence weights, connection probabilities and the directed influence graph.

Edges are oriented source -> target: an edge ``v -> u`` means ``v`` influences
``u``.  Graphs are stored by target (in-neighbour lists), which is the access
pattern of both the opinion update and the clustering coefficient.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np
from scipy import sparse

from .seeding import KeyedRows, Stream
from .spatial import ConfigurationError, pairwise_distances


@dataclass(frozen=True)
class ConnectionParams:
    lam: float
    delta: float
    alpha: float
    b: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigurationError("lambda must be > 0")
        if self.delta < 0:
            raise ConfigurationError("delta must be >= 0")
        if self.alpha < 0:
            raise ConfigurationError("alpha must be >= 0")
        if self.b < 0:
            raise ConfigurationError("b must be >= 0")


def weights_from_uniform(u, gamma: float) -> np.ndarray:
    """Inverse-CDF transform: U in (0, 1) -> W with P(W > x) = x**-gamma."""
    if not gamma > 0:
        raise ConfigurationError("gamma must be > 0")
    return np.power(np.asarray(u, dtype=float), -1.0 / gamma)


def sample_weight(gamma: float, rng: np.random.Generator) -> float:
    return float(weights_from_uniform(_open_uniform(rng, 1), gamma)[0])


def sample_weights(n: int, gamma: float, rng: np.random.Generator) -> np.ndarray:
    return weights_from_uniform(_open_uniform(rng, n), gamma)


def _open_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    # Generator.random is [0, 1); 1 - U lies in (0, 1], and U = 1 gives W = 1,
    # the boundary of the support, rather than an infinite weight.
    return 1.0 - rng.random(size)


def weight_ccdf(x, gamma: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where(x > 1.0, np.power(np.maximum(x, 1.0), -gamma), 1.0)


def connection_probability(xu, xv, wv: float, hu: float, hv: float, cp: ConnectionParams) -> float:
    if not abs(hu - hv) < cp.b:
        return 0.0
    log_p = cp.alpha * math.log(wv) - cp.delta * math.log1p(math.dist(xu, xv) / cp.lam)
    return 1.0 if log_p >= 0.0 else math.exp(log_p)


class Adjacency:
    """Directed graph for one time step, indexed by target.

    ``indptr``/``indices`` are CSR arrays: the in-neighbours of ``u`` are
    ``indices[indptr[u]:indptr[u + 1]]``, sorted ascending.
    """

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        if self.indptr.shape != (self.n + 1,):
            raise ValueError("indptr must have n + 1 entries")

    @classmethod
    def from_in_mask(cls, mask: np.ndarray) -> "Adjacency":
        """``mask[u, v]`` true means edge v -> u.  The diagonal is ignored."""
        mask = np.array(mask, dtype=bool)
        np.fill_diagonal(mask, False)
        counts = mask.sum(axis=1)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return cls(mask.shape[0], indptr, np.nonzero(mask)[1])

    @classmethod
    def from_edges(cls, n: int, edges) -> "Adjacency":
        """Build from ``(source, target)`` pairs; duplicates are merged."""
        mask = np.zeros((n, n), dtype=bool)
        for v, u in edges:
            if not (0 <= v < n and 0 <= u < n):
                raise ValueError(f"edge ({v}, {u}) out of range for n={n}")
            if v == u:
                raise ValueError("self-edges are not allowed")
            mask[u, v] = True
        return cls.from_in_mask(mask)

    @classmethod
    def from_rows(cls, n: int, rows: list[np.ndarray]) -> "Adjacency":
        counts = np.fromiter((len(r) for r in rows), dtype=np.int64, count=n)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        indices = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
        return cls(n, indptr, indices)

    @property
    def edge_count(self) -> int:
        return int(self.indptr[-1])

    def in_neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def in_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.n)

    @cached_property
    def _edge_keys(self) -> frozenset[int]:
        targets = np.repeat(np.arange(self.n, dtype=np.int64), self.in_degrees())
        return frozenset((self.indices * self.n + targets).tolist())

    def has_edge(self, source: int, target: int) -> bool:
        return source * self.n + target in self._edge_keys

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in self.in_neighbors(u):
                yield int(v), u

    def in_matrix(self) -> sparse.csr_matrix:
        """Sparse matrix with entry (u, v) = 1 for each edge v -> u."""
        data = np.ones(self.edge_count, dtype=np.float64)
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))


class EdgeSampler:
    """Resamples the graph for new beliefs while positions and weights stay put.

    The belief-independent factor ``(1 + d/lambda)**-delta * w_v**alpha`` is
    computed once.  Row ``u`` (the incoming edges of ``u``) at step ``t`` draws
    its uniforms from its own keyed stream, so the graph does not depend on
    ``threads``.
    """

    def __init__(
        self,
        positions: np.ndarray,
        weights: np.ndarray,
        cp: ConnectionParams,
        seed: int,
        threads: int = 1,
    ):
        positions = np.asarray(positions, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if len(positions) != len(weights):
            raise ValueError("positions and weights must have the same length")
        self.n = len(weights)
        self.cp = cp
        self.threads = max(1, int(threads))
        self._rows = KeyedRows(seed, Stream.EDGES)
        dist = pairwise_distances(positions)
        # log form: w**alpha can overflow where the distance factor underflows
        log_k = cp.alpha * np.log(weights)[None, :] - cp.delta * np.log1p(dist / cp.lam)
        kernel = np.exp(np.minimum(log_k, 0.0))
        np.fill_diagonal(kernel, 0.0)
        self.kernel = kernel

    def probabilities(self, beliefs: np.ndarray) -> np.ndarray:
        h = np.asarray(beliefs, dtype=float)
        return np.where(np.abs(h[:, None] - h[None, :]) < self.cp.b, self.kernel, 0.0)

    def _sample_block(self, h: np.ndarray, step: int, lo: int, hi: int) -> list[np.ndarray]:
        out = []
        for u in range(lo, hi):
            p = np.where(np.abs(h[u] - h) < self.cp.b, self.kernel[u], 0.0)
            draws = self._rows.row(u, step).random(self.n)
            out.append(np.flatnonzero(draws < p))
        return out

    def sample(self, beliefs: np.ndarray, step: int) -> Adjacency:
        h = np.asarray(beliefs, dtype=float)
        if len(h) != self.n:
            raise ValueError("beliefs length does not match the population")
        if self.threads == 1 or self.n < 2 * self.threads:
            rows = self._sample_block(h, step, 0, self.n)
        else:
            bounds = np.linspace(0, self.n, self.threads + 1).astype(int)
            with ThreadPoolExecutor(self.threads) as pool:
                blocks = pool.map(
                    lambda lh: self._sample_block(h, step, *lh), zip(bounds[:-1], bounds[1:])
                )
                rows = [r for block in blocks for r in block]
        return Adjacency.from_rows(self.n, rows)


def sample_adjacency(
    positions: np.ndarray,
    weights: np.ndarray,
    beliefs: np.ndarray,
    cp: ConnectionParams,
    seed: int,
    step: int = 0,
    threads: int = 1,
) -> Adjacency:
    return EdgeSampler(positions, weights, cp, seed, threads).sample(beliefs, step)


def mean_in_degree(adj: Adjacency) -> float:
    if adj.n == 0:
        raise ValueError("mean in-degree of an empty population is undefined")
    return adj.edge_count / adj.n


def clustering_coefficients(adj: Adjacency) -> np.ndarray:
    """Per-agent directed clustering over ordered pairs of in-neighbours."""
    k = adj.in_degrees().astype(float)
    if adj.edge_count == 0:
        return np.zeros(adj.n)
    inm = adj.in_matrix()
    out = inm.T.tocsr()  # (a, b) = 1 for edge a -> b
    # linked[u] = #{(a, b): a, b in-neighbours of u, a -> b}
    linked = np.asarray((inm @ out).multiply(inm).sum(axis=1)).ravel()
    pairs = k * (k - 1.0)
    return np.divide(linked, pairs, out=np.zeros(adj.n), where=k > 1)


def clustering_coefficient(adj: Adjacency, u: int) -> float:
    nbrs = adj.in_neighbors(u)
    k = len(nbrs)
    if k <= 1:
        return 0.0
    linked = sum(adj.has_edge(int(a), int(b)) for a in nbrs for b in nbrs if a != b)
    return linked / (k * (k - 1))


def mean_clustering_coefficient(adj: Adjacency) -> float:
    if adj.n == 0:
        raise ValueError("mean clustering of an empty population is undefined")
    return float(clustering_coefficients(adj).mean())
