import math

import numpy as np
import pytest

from zerocorr.connected import (
    BalancedGraph,
    Partition,
    balanced_graphs,
    bell_number,
    connected_correlation,
    decay_bound,
    decay_check,
    moebius_reconstruct,
    partitions,
)
from zerocorr.correlations import (
    CorrelationRequest,
    Method,
    limit_correlation,
    pair_correlation_closed,
)
from zerocorr.covariance import PointConfiguration


def equilateral(s, m=1):
    pts = np.zeros((3, m), dtype=complex)
    pts[1, 0] = s
    pts[2, 0] = s * np.exp(1j * np.pi / 3)
    return PointConfiguration(pts)


def pair(r, m=1):
    pts = np.zeros((2, m), dtype=complex)
    pts[1, 0] = r
    return PointConfiguration(pts)


# ------------------------------------------------------------------ partitions


def test_partition_counts_are_bell_numbers():
    want = [1, 2, 5, 15, 52, 203, 877]
    for n, count in zip(range(1, 8), want):
        parts = partitions(n)
        assert len(parts) == count == bell_number(n)
        assert len(set(parts)) == count  # canonical form deduplicates
    with pytest.raises(ValueError):
        partitions(8)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition(((0, 1), (1, 2)))  # overlapping
    with pytest.raises(ValueError):
        Partition(((0,), (2,)))  # gap


# ---------------------------------------------------------------- connected


def test_connected_n1_is_one():
    cfg = PointConfiguration(np.zeros((1, 1), dtype=complex))
    assert connected_correlation(1, 1, 1, cfg).value == pytest.approx(1.0)


def test_connected_n2_is_pair_minus_one():
    for r in (0.7, 1.5, 3.0):
        t2 = connected_correlation(2, 1, 1, pair(r)).value
        assert t2 == pytest.approx(pair_correlation_closed(r * r / 2, 1) - 1, abs=1e-12)


def test_connected_n3_partition_formula():
    cfg = equilateral(1.3)
    k3 = limit_correlation(CorrelationRequest(3, 1, 1, cfg)).normalized
    k2 = {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        sub = cfg.subset((i, j))
        k2[(i, j)] = limit_correlation(CorrelationRequest(2, 1, 1, sub)).normalized
    want = k3 - k2[(0, 1)] - k2[(0, 2)] - k2[(1, 2)] + 2
    assert connected_correlation(3, 1, 1, cfg).value == pytest.approx(want, abs=1e-12)


def _t_evaluator(cfg, k=1, m=1):
    cache = {}

    def tev(block):
        if block not in cache:
            cache[block] = (
                1.0
                if len(block) == 1
                else connected_correlation(len(block), k, m, cfg.subset(block)).value
            )
        return cache[block]

    return tev


def test_moebius_round_trip_up_to_n4():
    rng = np.random.default_rng(44)
    for n in (2, 3, 4):
        for _ in range(3):
            pts = 1.4 * (rng.standard_normal((n, 1)) + 1j * rng.standard_normal((n, 1)))
            try:
                cfg = PointConfiguration(pts)
            except ValueError:
                continue
            if cfg.min_separation() < 0.3:
                continue
            direct = limit_correlation(CorrelationRequest(n, 1, 1, cfg)).normalized
            recon = moebius_reconstruct(n, _t_evaluator(cfg), cfg)
            assert abs(recon - direct) <= 1e-10


def test_moebius_trivial_connected_values():
    cfg = pair(1.0)
    assert moebius_reconstruct(2, lambda b: 1.0 if len(b) == 1 else 0.0, cfg) == 1.0
    cfg3 = equilateral(1.0)
    assert moebius_reconstruct(3, lambda b: 1.0 if len(b) == 1 else 0.0, cfg3) == 1.0


# --------------------------------------------------------------- decay bound


def test_decay_bound_two_points_closed_form():
    for r in (0.8, 1.5, 3.0):
        assert decay_bound(pair(r)) == pytest.approx(r**4 * math.exp(-r * r), rel=1e-13)


def test_decay_bound_below_two_over_e_squared():
    rng = np.random.default_rng(9)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        pts = 2.0 * (rng.standard_normal((n, 1)) + 1j * rng.standard_normal((n, 1)))
        try:
            cfg = PointConfiguration(pts)
        except ValueError:
            continue
        assert decay_bound(cfg) <= (2 / math.e) ** 2


def test_decay_bound_matches_explicit_graph_enumeration():
    # independent oracle: enumerate balanced connected multigraphs explicitly
    for cfg in (
        PointConfiguration([[0.0], [1.0], [2.0]]),
        equilateral(1.2),
        PointConfiguration([[0.0], [0.9 + 0.4j], [2.1 - 0.3j]]),
    ):
        dp = decay_bound(cfg)
        brute = max(g.weight(cfg) for g in balanced_graphs(3, 4))
        assert dp == pytest.approx(brute, rel=1e-13)


def test_decay_bound_enumeration_stability():
    cfg = PointConfiguration([[0.0], [1.0], [2.0]])
    assert decay_bound(cfg, edge_cap=6) == pytest.approx(
        decay_bound(cfg, edge_cap=8), rel=1e-14
    )
    cfg4 = PointConfiguration([[0.0], [1.2], [2.3], [1.0 + 1.4j]])
    assert decay_bound(cfg4) == pytest.approx(decay_bound(cfg4, edge_cap=8), rel=1e-14)


def test_decay_bound_permutation_and_isometry_invariance():
    rng = np.random.default_rng(10)
    pts = np.array([[0.0], [1.1 + 0.2j], [2.0 - 0.7j]], dtype=complex)
    cfg = PointConfiguration(pts)
    base = decay_bound(cfg)
    assert decay_bound(PointConfiguration(pts[[2, 0, 1]])) == pytest.approx(base, rel=1e-14)
    phase = np.exp(1j * 0.83)
    shift = 0.4 - 0.9j
    assert decay_bound(PointConfiguration(pts * phase + shift)) == pytest.approx(
        base, rel=1e-12
    )


def test_balanced_graph_structural_validation():
    BalancedGraph(n=2, edges=((0, 1), (1, 0)))  # the minimal two-point graph
    with pytest.raises(ValueError):
        BalancedGraph(n=2, edges=((0, 1), (0, 1)))  # unbalanced
    with pytest.raises(ValueError):
        BalancedGraph(n=3, edges=((0, 1), (1, 0)))  # vertex 2 isolated
    with pytest.raises(ValueError):
        BalancedGraph(n=2, edges=((0, 0), (1, 1)))  # self loops


def test_enumerated_graphs_all_valid_and_counted():
    graphs = balanced_graphs(2, 4)
    # two-point balanced connected multigraphs with <= 4 edges:
    # (01,10), (01,01,10,10)
    assert len(graphs) == 2
    for g in graphs:
        assert g.n == 2


# --------------------------------------------------------------- decay check


def test_decay_check_pair_family():
    configs = [pair(float(r)) for r in (1, 2, 3, 4, 5)]
    rep = decay_check(2, 1, 1, configs)
    assert rep.max_ratio <= 10.0
    assert np.all(rep.bounds > 0)
    # monotone tail of |T2| on the dyadic points
    t = {r: abs(connected_correlation(2, 1, 1, pair(float(r))).value) for r in (1, 2, 4)}
    assert t[4] < t[2] < t[1]


def test_decay_check_equilateral_slope():
    rep = decay_check(3, 1, 1, [equilateral(s) for s in (1.0, 2.0, 3.0)])
    assert rep.slope <= -0.5 + 0.1


def test_decay_check_rejects_close_configs():
    with pytest.raises(ValueError):
        decay_check(2, 1, 1, [pair(0.3)])
