"""Connected (truncated) correlations, Moebius inversion, and decay bounds.

The connected n-point function is the partition sum

    T~_n(z) = sum_G (-1)^(l+1) (l-1)! prod_j K~_{n_j}(z restricted to G_j)

over set partitions G = (G_1, ..., G_l) of {1, ..., n}; Moebius inversion
recovers K~_n = sum_G prod_j T~_{n_j}.  Connected functions vanish when point
groups separate, at a rate controlled by the graph quantity

    d(z) = max over connected balanced oriented multigraphs of
           prod_edges |z_i - z_f|^2 exp(-|z_i - z_f|^2 / 2),

where balanced means in-degree = out-degree >= 1 at every vertex.  Such a
graph is exactly an Eulerian circuit through all n vertices, so the maximum
is computed by a max-product dynamic program over closed walks.  Every edge
factor is at most 2/e < 1, so a maximizer never contains a removable balanced
sub-cycle and 2(n-1) edges suffice; `decay_bound` exposes the cap so tests
can verify enumeration stability by raising it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .covariance import PointConfiguration
from .correlations import CorrelationRequest, Method, limit_correlation

__all__ = [
    "Partition",
    "BalancedGraph",
    "ConnectedValue",
    "DecayReport",
    "partitions",
    "bell_number",
    "connected_correlation",
    "moebius_reconstruct",
    "decay_bound",
    "balanced_graphs",
    "decay_check",
    "exact_wick_evaluator",
]

_MAX_PARTITION_N = 7
_MAX_DECAY_N = 5
_MIN_SEPARATION_HYPOTHESIS = 0.5


@dataclass(frozen=True)
class Partition:
    """Set partition of {0, ..., n-1} in canonical order (blocks sorted by
    smallest element, elements sorted within blocks)."""

    blocks: tuple

    def __post_init__(self):
        canon = tuple(sorted((tuple(sorted(b)) for b in self.blocks)))
        object.__setattr__(self, "blocks", canon)
        flat = [i for b in canon for i in b]
        if sorted(flat) != list(range(len(flat))) or any(len(b) == 0 for b in canon):
            raise ValueError("blocks must be disjoint, nonempty, and cover 0..n-1")

    @property
    def size(self) -> int:
        return len(self.blocks)


def partitions(n: int) -> list[Partition]:
    """All set partitions of {0, ..., n-1}; count is the Bell number."""
    if not (1 <= n <= _MAX_PARTITION_N):
        raise ValueError(f"partition enumeration supported for 1 <= n <= {_MAX_PARTITION_N}")
    out: list[list[list[int]]] = [[[0]]]
    for i in range(1, n):
        nxt = []
        for part in out:
            for j in range(len(part)):
                nxt.append([b + [i] if jj == j else list(b) for jj, b in enumerate(part)])
            nxt.append([list(b) for b in part] + [[i]])
        out = nxt
    return [Partition(tuple(tuple(b) for b in part)) for part in out]


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


@dataclass(frozen=True)
class ConnectedValue:
    value: float
    order: int


def exact_wick_evaluator(k: int, m: int) -> Callable[[PointConfiguration], float]:
    """Normalized-K~ evaluator via the exact Wick route (no MC noise, so the
    signed cancellations in the partition sum stay meaningful)."""

    def evaluate(config: PointConfiguration) -> float:
        if config.n == 1:
            return 1.0
        req = CorrelationRequest(config.n, k, m, config, Method.EXACT_WICK)
        return limit_correlation(req).normalized

    return evaluate


def _cached_block_evaluator(config: PointConfiguration, evaluator):
    cache: dict[tuple, float] = {}

    def on_block(block: tuple) -> float:
        if len(block) == 1:
            return 1.0
        if block not in cache:
            cache[block] = evaluator(config.subset(block))
        return cache[block]

    return on_block


def connected_correlation(
    n: int,
    k: int,
    m: int,
    config: PointConfiguration,
    evaluator: Optional[Callable[[PointConfiguration], float]] = None,
) -> ConnectedValue:
    """Connected correlation T~_n from the signed partition sum.

    `evaluator` maps a sub-configuration to its normalized K~; it defaults to
    the exact Wick route.  Sub-configuration values are cached per index
    block, since partitions re-query identical blocks many times.
    """
    if config.n != n:
        raise ValueError("configuration size disagrees with n")
    if evaluator is None:
        evaluator = exact_wick_evaluator(k, m)
    on_block = _cached_block_evaluator(config, evaluator)
    total = 0.0
    for part in partitions(n):
        l = part.size
        term = (-1.0) ** (l + 1) * math.factorial(l - 1)
        for b in part.blocks:
            term *= on_block(b)
        total += term
    return ConnectedValue(value=total, order=n)


def moebius_reconstruct(
    n: int,
    t_evaluator: Callable[[tuple], float],
    config: PointConfiguration,
) -> float:
    """K~_n = sum over partitions of products of connected values.

    `t_evaluator` maps an index block (tuple into config) to T~ of the
    corresponding sub-configuration.
    """
    if config.n != n:
        raise ValueError("configuration size disagrees with n")
    total = 0.0
    for part in partitions(n):
        term = 1.0
        for b in part.blocks:
            term *= t_evaluator(b)
        total += term
    return total


def _edge_weights(config: PointConfiguration) -> np.ndarray:
    pts = config.points
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    w = d**2 * np.exp(-(d**2) / 2.0)
    np.fill_diagonal(w, 0.0)
    return w


def decay_bound(config: PointConfiguration, edge_cap: Optional[int] = None) -> float:
    """d(z): maximal edge-weight product over connected balanced oriented
    multigraphs on the n points, each weight |dz|^2 exp(-|dz|^2/2).

    Equivalent to maximizing over closed walks through all vertices (Euler
    circuits of the graphs); computed by max-product dynamic programming over
    (current vertex, visited set, steps <= edge_cap).  Default cap 2(n-1);
    since every factor is <= 2/e < 1, raising the cap cannot raise the max.
    """
    n = config.n
    if not (2 <= n <= _MAX_DECAY_N):
        raise ValueError(f"decay bound enumeration supported for 2 <= n <= {_MAX_DECAY_N}")
    cap = 2 * (n - 1) if edge_cap is None else int(edge_cap)
    if cap < n:
        raise ValueError("edge cap below the minimal tour length")
    w = _edge_weights(config)
    full = (1 << n) - 1
    # dp[(vertex, visited)] = max product over walks from vertex 0 of given length
    dp = {(0, 1): 1.0}
    best = 0.0
    for _ in range(cap):
        nxt: dict[tuple, float] = {}
        for (v, vis), val in dp.items():
            for u in range(n):
                if u == v:
                    continue
                cand = val * w[v, u]
                key = (u, vis | (1 << u))
                if cand > nxt.get(key, 0.0):
                    nxt[key] = cand
        dp = nxt
        best = max(best, dp.get((0, full), 0.0))
    return best


@dataclass(frozen=True)
class BalancedGraph:
    """Oriented multigraph with explicit edge multiset, in-degree = out-degree
    at every vertex, and undirected connectivity over all n vertices."""

    n: int
    edges: tuple  # multiset of (i, f) ordered pairs

    def __post_init__(self):
        edges = tuple(sorted((int(i), int(f)) for i, f in self.edges))
        object.__setattr__(self, "edges", edges)
        indeg = [0] * self.n
        outdeg = [0] * self.n
        adj = [set() for _ in range(self.n)]
        for i, f in edges:
            if i == f or not (0 <= i < self.n and 0 <= f < self.n):
                raise ValueError("edges must join distinct vertices in range")
            outdeg[i] += 1
            indeg[f] += 1
            adj[i].add(f)
            adj[f].add(i)
        if any(indeg[v] != outdeg[v] or indeg[v] < 1 for v in range(self.n)):
            raise ValueError("graph is not balanced with positive degree")
        seen = {0}
        stack = [0]
        while stack:
            for u in adj[stack.pop()]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != self.n:
            raise ValueError("graph is not connected")

    def weight(self, config: PointConfiguration) -> float:
        w = _edge_weights(config)
        out = 1.0
        for i, f in self.edges:
            out *= w[i, f]
        return out


def balanced_graphs(n: int, max_edges: int) -> list[BalancedGraph]:
    """Explicit enumeration of connected balanced oriented multigraphs (used
    as the independent oracle for `decay_bound` on small n)."""
    pairs = [(i, f) for i in range(n) for f in range(n) if i != f]
    out = []
    for ne in range(n, max_edges + 1):
        for combo in itertools.combinations_with_replacement(pairs, ne):
            try:
                out.append(BalancedGraph(n=n, edges=combo))
            except ValueError:
                continue
    return out


@dataclass(frozen=True)
class DecayReport:
    n: int
    radii: np.ndarray          # max pairwise distance R per configuration
    connected: np.ndarray      # T~_n values
    bounds: np.ndarray         # d(z) values
    ratios: np.ndarray         # |T~| / d
    max_ratio: float
    slope: float               # fitted d log|T~| / d(R^2)


def decay_check(
    n: int,
    k: int,
    m: int,
    configs: Sequence[PointConfiguration],
    evaluator: Optional[Callable[[PointConfiguration], float]] = None,
) -> DecayReport:
    """Measure |T~_n| / d(z) over a family and the decay exponent in R^2.

    Requires the family to respect the minimum-separation hypothesis
    (pairwise distances >= 0.5).  The constant in the O(d(z)) estimate is
    reported, not asserted: it is measured, and the fitted slope of
    log|T~| against R^2 is the quantity bounded (by -1/(n-1) up to slack)
    in the acceptance tests.
    """
    for cfg in configs:
        if cfg.n != n:
            raise ValueError("every configuration must have n points")
        if cfg.min_separation() < _MIN_SEPARATION_HYPOTHESIS:
            raise ValueError(
                "decay hypothesis requires pairwise separations >= "
                f"{_MIN_SEPARATION_HYPOTHESIS}"
            )
    tvals, dvals, radii = [], [], []
    for cfg in configs:
        tvals.append(connected_correlation(n, k, m, cfg, evaluator).value)
        dvals.append(decay_bound(cfg))
        dist = np.linalg.norm(
            cfg.points[:, None, :] - cfg.points[None, :, :], axis=2
        )
        radii.append(float(dist.max()))
    tvals = np.asarray(tvals)
    dvals = np.asarray(dvals)
    radii = np.asarray(radii)
    ratios = np.abs(tvals) / dvals
    slope = float(np.polyfit(radii**2, np.log(np.abs(tvals)), 1)[0])
    return DecayReport(
        n=n,
        radii=radii,
        connected=tvals,
        bounds=dvals,
        ratios=ratios,
        max_ratio=float(ratios.max()),
        slope=slope,
    )
