import math

import numpy as np
import pytest

from zerocorr.correlations import (
    CorrelationRequest,
    Method,
    density_one_point,
    finite_correlation_cp1,
    limit_correlation,
    normalization_constant,
    pair_correlation_closed,
    scaled_density_cp1,
    small_r_asymptote,
)
from zerocorr.covariance import PointConfiguration

# 40-digit evaluations of the closed form (mpmath), frozen; keys (m, t)
_PAIRCOR_REFERENCE = {
    (1, 1e-05): 9.9999999997777777778e-6,
    (1, 0.0001): 0.000099999999777777778222,
    (1, 0.0005): 0.00049999997222222361111,
    (1, 0.001): 0.00099999977777782222221,
    (1, 0.002): 0.0019999982222236444435,
    (1, 0.01): 0.0099997777822221460329,
    (1, 0.1): 0.099778221461491553335,
    (1, 1.0): 0.81563047329272986256,
    (1, 5.0): 1.0028154594099232242,
    (1, 25.0): 1.0000000000000000004,
    (1, 29.0): 1.0,
    (2, 1e-05): 25000.250005,
    (2, 0.0001): 2500.2500499999999167,
    (2, 0.0005): 500.25024999998958333,
    (2, 0.001): 250.25049999991666668,
    (2, 0.002): 125.25099999933333381,
    (2, 0.01): 25.254999916668148124,
    (2, 0.1): 2.7999168145770718187,
    (2, 1.0): 0.92940984583127050086,
    (2, 5.0): 1.0005222465817381168,
    (2, 25.0): 1.0000000000000000001,
    (2, 29.0): 1.0,
    (3, 1e-05): 33333.66667037037037,
    (3, 0.0001): 3333.6667037037036519,
    (3, 0.0005): 667.0001851851787037,
    (3, 0.001): 333.66703703698518519,
    (3, 0.002): 167.0007407403259262,
    (3, 0.01): 33.670370318519365066,
    (3, 0.1): 3.7036519363787858451,
    (3, 1.0): 0.99252039765075171644,
    (3, 5.0): 1.0001614796917778984,
    (3, 25.0): 1.0,
    (3, 29.0): 1.0,
}


def pair_config(r, m):
    pts = np.zeros((2, m), dtype=complex)
    pts[1, 0] = r
    return PointConfiguration(pts)


# ----------------------------------------------------------------- one point


def test_density_one_point_values():
    assert density_one_point(1, 1) == pytest.approx(1 / np.pi, rel=1e-15)
    assert density_one_point(1, 2) == pytest.approx(2 / np.pi, rel=1e-15)
    assert density_one_point(2, 2) == pytest.approx(2 / np.pi**2, rel=1e-15)
    with pytest.raises(ValueError):
        density_one_point(3, 2)


def test_one_point_normalized_exactly_one():
    for m in (1, 2, 3):
        for k in range(1, m + 1):
            cfg = PointConfiguration(np.zeros((1, m), dtype=complex))
            val = limit_correlation(CorrelationRequest(1, k, m, cfg))
            assert abs(val.normalized - 1.0) < 1e-12
            assert val.raw == pytest.approx(density_one_point(k, m), rel=1e-12)


# ------------------------------------------------------------- closed form


def test_pair_correlation_closed_against_frozen_reference():
    # covers the series branch (t < 1e-3), the closed form, and the asymptote
    for (m, t), want in _PAIRCOR_REFERENCE.items():
        assert pair_correlation_closed(t, m) == pytest.approx(want, rel=5e-13)


def test_pair_correlation_asymptote_branch():
    for m in (1, 2, 3):
        assert pair_correlation_closed(31.0, m) == 1.0
        assert pair_correlation_closed(1e4, m) == 1.0
    with pytest.raises(ValueError):
        pair_correlation_closed(0.0, 1)


def test_pair_correlation_small_t_linear_law_m1():
    t = 1e-3
    assert 0.99 < pair_correlation_closed(t, 1) / t < 1.01


def test_pair_correlation_branch_continuity():
    # K~ has O(1/t) relative sensitivity near the branch point, so adjacent
    # evaluations straddling it differ by ~2e-9 from the derivative alone;
    # the frozen-reference test pins each branch to 5e-13 independently
    for m in (1, 2, 3):
        below = pair_correlation_closed(1e-3 * (1 - 1e-9), m)
        above = pair_correlation_closed(1e-3 * (1 + 1e-9), m)
        assert below == pytest.approx(above, rel=1e-8)


# ----------------------------------------------------------- wick vs closed


def test_wick_route_matches_closed_form():
    for m in (1, 2, 3):
        for r in (0.3, 0.5, 1.0, 2.0, 4.0):
            req = CorrelationRequest(2, 1, m, pair_config(r, m), Method.EXACT_WICK)
            wick = limit_correlation(req).normalized
            closed = pair_correlation_closed(r * r / 2, m)
            assert abs(wick - closed) <= 1e-9 * abs(closed)


def test_closed_form_method_routes_through_formula():
    req = CorrelationRequest(2, 1, 2, pair_config(1.2, 2), Method.CLOSED_FORM)
    val = limit_correlation(req)
    assert val.normalized == pytest.approx(pair_correlation_closed(0.72, 2), rel=1e-14)
    assert val.raw == pytest.approx(
        val.normalized / normalization_constant(2, 1, 2), rel=1e-14
    )
    with pytest.raises(ValueError):
        CorrelationRequest(2, 2, 2, pair_config(1.0, 2), Method.CLOSED_FORM)


def test_tail_short_range():
    for m in (1, 2):
        for r in np.arange(2.0, 6.01, 0.5):
            ktil = pair_correlation_closed(r * r / 2, m)
            assert abs(ktil - 1.0) <= 10 * r**4 * math.exp(-r * r)


# ----------------------------------------------------------- small r limits


def test_small_r_asymptote_values():
    assert small_r_asymptote(0.2, 1) == pytest.approx(0.02, rel=1e-14)
    assert small_r_asymptote(1e-9, 2) == pytest.approx(0.75, rel=1e-12)


def test_wick_small_r_point_pair_law():
    # m=1: K~ ~ r^2/2 within 10%
    for r in (0.05, 0.1, 0.2):
        req = CorrelationRequest(2, 1, 1, pair_config(r, 1), Method.EXACT_WICK)
        val = limit_correlation(req).normalized
        assert abs(val - small_r_asymptote(r, 1)) <= 0.1 * small_r_asymptote(r, 1)
    # m=2, k=m: constant 3/4 within 10% at r=0.05
    req = CorrelationRequest(2, 2, 2, pair_config(0.05, 2), Method.EXACT_WICK)
    val = limit_correlation(req).normalized
    assert abs(val - 0.75) <= 0.075


# ------------------------------------------------------------- invariances


def test_permutation_symmetry():
    rng = np.random.default_rng(30)
    pts = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    base = limit_correlation(
        CorrelationRequest(3, 1, 2, PointConfiguration(pts))
    ).normalized
    for perm in ((1, 0, 2), (2, 1, 0), (1, 2, 0)):
        val = limit_correlation(
            CorrelationRequest(3, 1, 2, PointConfiguration(pts[list(perm)]))
        ).normalized
        assert val == pytest.approx(base, rel=1e-10)


def test_isometry_invariance_pair():
    rng = np.random.default_rng(31)
    r = 1.7
    vals = []
    for _ in range(10):
        q, _ = np.linalg.qr(
            rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        )
        shift = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        pts = np.zeros((2, 2), dtype=complex)
        pts[1, 0] = r
        pts = pts @ q.T + shift
        vals.append(
            limit_correlation(
                CorrelationRequest(2, 1, 2, PointConfiguration(pts))
            ).normalized
        )
    assert max(vals) - min(vals) <= 1e-9


def test_positivity():
    rng = np.random.default_rng(32)
    for _ in range(10):
        pts = 1.2 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        cfg = PointConfiguration(pts)
        for k in (1, 2):
            assert limit_correlation(CorrelationRequest(2, k, 2, cfg)).raw >= 0


def test_exact_wick_vs_monte_carlo():
    for m, r, seed in [(1, 1.0, 5), (2, 0.8, 6)]:
        cfg = pair_config(r, m)
        wick = limit_correlation(CorrelationRequest(2, 1, m, cfg, Method.EXACT_WICK))
        mc = limit_correlation(
            CorrelationRequest(
                2, 1, m, cfg, Method.MONTE_CARLO, mc_samples=40_000, mc_seed=seed
            )
        )
        assert abs(mc.normalized - wick.normalized) < 4 * mc.std_error
        assert mc.std_error is not None and mc.method == "monte_carlo"


# ------------------------------------------------------------ finite degree


def test_finite_one_point_density():
    cfg = PointConfiguration(np.zeros((1, 1), dtype=complex))
    for N in (8, 128):
        val = finite_correlation_cp1(N, 1, cfg)
        assert val.normalized == pytest.approx(1.0, abs=1e-12)
        # raw chart density at the origin is 1/pi in scaled units (N/pi per
        # unit Fubini-Study volume, N zeros over volume pi)
        assert val.raw == pytest.approx(1 / np.pi, rel=1e-12)
    assert scaled_density_cp1(100, 0.0) == pytest.approx(1 / np.pi, rel=1e-15)


def test_finite_pair_converges_with_slope():
    cfg = PointConfiguration([[0.0], [1.0]])
    lim = limit_correlation(CorrelationRequest(2, 1, 1, cfg)).raw
    ns = np.array([64, 256, 1024])
    errs = np.array(
        [abs(finite_correlation_cp1(int(N), 2, cfg).raw - lim) for N in ns]
    )
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert slope <= -0.45


def test_finite_pair_far_separation():
    cfg = PointConfiguration([[0.0], [6.0]])
    val = finite_correlation_cp1(1024, 2, cfg)
    assert abs(val.normalized - 1.0) <= 1e-3


def test_finite_requires_k1_m1():
    cfg = PointConfiguration(np.zeros((1, 2), dtype=complex))
    with pytest.raises(ValueError):
        finite_correlation_cp1(16, 1, cfg)
