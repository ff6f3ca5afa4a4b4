"""Monte Carlo validation: random SU(2) polynomials, roots, pair statistics.

A degree-N sample has coefficients c_j sqrt(binom(N, j)) with c_j i.i.d.
standard circular complex Gaussians; its zeros are isometrically distributed
on CP^1 (zero sets do not depend on the overall normalization, so the
binomial weights replace the full orthonormal constant, which would overflow
long before the roots care).  Roots come from the balanced companion matrix
with one Newton polishing step, done on the reversed polynomial for roots
outside the unit disk so the backward error stays well scaled on the whole
sphere.

The pair statistic bins scaled separations u = sqrt(N) * d_FS of all root
pairs.  With K_1 = N/pi zeros per unit Fubini-Study volume, the expected
number of ordered pairs landing in a distance band equals

    samples * N^2 * Area(band) / pi * K~(u),

with Area the exact Fubini-Study annulus area (the sphere of Vol(CP^1) = pi
has geodesic circles of circumference pi*sin(2d), so the flat-annulus
approximation would bias the tail bins by O(u^2/N), which is several standard
errors at the default settings).  Inverting gives the estimator; the Poisson
baseline (same estimator on i.i.d. uniform points) is exactly flat at
1 - 1/N in every bin, which calibrates the normalization.

Everything is reproducible: sample `index` draws from the substream keyed by
(seed, index), so histograms are bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .correlations import CorrelationCurve
from .errors import NumericalContractError
from .gaussian import substream

__all__ = [
    "SU2Sample",
    "ZeroSet",
    "PairHistogram",
    "sample_su2",
    "roots",
    "fs_distance",
    "empirical_pair_correlation",
    "poisson_baseline",
    "worker_count",
]

ROOT_RESIDUAL_GATE = 1e-8
WORKERS_ENV_VAR = "ZEROCORR_WORKERS"


def worker_count(requested: Optional[int] = None) -> int:
    """Resolve the worker count: explicit argument, else ZEROCORR_WORKERS,
    else 1.  Results never depend on this value, only wall time does."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV_VAR)
    return max(1, int(env)) if env else 1


@dataclass(frozen=True)
class SU2Sample:
    """Coefficients (ascending degree) of one random SU(2) polynomial."""

    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.N + 1,):
            raise ValueError("need N+1 coefficients")
        object.__setattr__(self, "coeffs", c)


def _sqrt_binomial_weights(N: int) -> np.ndarray:
    # cumulative log formulation keeps sqrt(binom(N, j)) finite for N ~ 1000
    j = np.arange(1, N + 1)
    logw = 0.5 * np.concatenate(([0.0], np.cumsum(np.log((N - j + 1) / j))))
    return np.exp(logw)


def sample_su2(N: int, seed: int, index: int) -> SU2Sample:
    """Draw sample `index` of the degree-N ensemble, deterministically in
    (seed, index)."""
    if N < 1:
        raise ValueError("degree must be >= 1")
    rng = substream(seed, index)
    wri = rng.standard_normal((2, N + 1))
    c = (wri[0] + 1j * wri[1]) / math.sqrt(2.0)
    return SU2Sample(N=N, coeffs=c * _sqrt_binomial_weights(N))


@dataclass(frozen=True)
class ZeroSet:
    """Affine roots plus the multiplicity at infinity (exactly-zero leading
    coefficients); affine + infinity always equals the nominal degree."""

    affine_roots: np.ndarray
    roots_at_infinity: int
    degree: int
    max_residual: float

    def __post_init__(self):
        r = np.asarray(self.affine_roots, dtype=complex)
        object.__setattr__(self, "affine_roots", r)
        if r.size + self.roots_at_infinity != self.degree:
            raise ValueError("root count does not add up to the degree")


def _polish_and_residual(c_asc: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One vectorized Newton step on roots z of the ascending-coefficient
    polynomial, plus the scaled backward error |p(z)| / sum |a_j||z|^j."""
    desc = c_asc[::-1]
    d = c_asc.size - 1
    ddesc = (c_asc[1:] * np.arange(1, d + 1))[::-1]
    p = np.polyval(desc, z)
    dp = np.polyval(ddesc, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(dp != 0, p / dp, 0.0)
    step = np.where(np.isfinite(step), step, 0.0)
    zp = z - step
    num = np.abs(np.polyval(desc, zp))
    den = np.polyval(np.abs(desc), np.abs(zp))
    res = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num == 0, 0.0, np.inf))
    return zp, res


def roots(sample: SU2Sample) -> ZeroSet:
    """All roots of the sample: companion-matrix eigenvalues (balanced by the
    LAPACK eigensolver) plus one Newton step.

    Roots outside the unit disk are polished on the reversed polynomial
    q(w) = w^deg p(1/w), which avoids overflow and keeps the backward error
    of far-out roots meaningful; by the same reversal the residual gate
    |p(z)| / sum_j |a_j| |z|^j <= 1e-8 is enforced for every affine root.
    Only exactly-zero leading coefficients count as roots at infinity.
    """
    c = sample.coeffs
    if np.all(c == 0):
        raise ValueError("degenerate sample: zero polynomial")
    deg = sample.N
    ninf = 0
    while c[-1] == 0:  # genuine deflation only; c is never all zero here
        c = c[:-1]
        ninf += 1
    d = c.size - 1
    if d == 0:
        return ZeroSet(np.zeros(0, complex), ninf, deg, 0.0)
    r = np.roots(c[::-1])
    rev = c[::-1].copy()
    inside = np.abs(r) <= 1.0
    out = np.empty(d, dtype=complex)
    res = np.empty(d, dtype=float)
    if inside.any():
        zp, ri = _polish_and_residual(c, r[inside])
        out[inside], res[inside] = zp, ri
    if (~inside).any():
        wp, ro = _polish_and_residual(rev, 1.0 / r[~inside])
        out[~inside] = np.where(wp != 0, 1.0 / np.where(wp != 0, wp, 1.0), r[~inside])
        res[~inside] = ro
    worst = float(res.max())
    if worst > ROOT_RESIDUAL_GATE:
        raise NumericalContractError(
            f"polished root residual {worst:.3e} exceeds gate {ROOT_RESIDUAL_GATE:.0e}"
        )
    return ZeroSet(out, ninf, deg, worst)


def fs_distance(z: complex, w: complex) -> float:
    """Fubini-Study distance arctan |(z - w)/(1 + z conj(w))| on the affine
    chart, normalized to be Euclidean at the chart origin (range [0, pi/2])."""
    num = abs(z - w)
    den = abs(1.0 + z * np.conj(w))
    if den == 0.0:
        return math.pi / 2
    return math.atan(num / den)


@dataclass(frozen=True)
class PairHistogram:
    """Ordered-pair counts of scaled separations (each unordered pair enters
    twice, matching the ordered-pair normalization of the estimator)."""

    u_max: float
    bins: int
    counts: np.ndarray
    samples: int
    N: int

    @property
    def bin_width(self) -> float:
        return self.u_max / self.bins

    @property
    def bin_midpoints(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) * self.bin_width


def _pairwise_scaled_distances(zs: ZeroSet, N: int, u_max: float) -> np.ndarray:
    """Scaled separations u = sqrt(N) d_FS of all unordered root pairs with
    u < u_max, including pairs involving roots at infinity."""
    z = zs.affine_roots
    n = z.size
    us = []
    if n >= 2:
        num = np.abs(z[:, None] - z[None, :])
        den = np.abs(1.0 + z[:, None] * z[None, :].conj())
        iu = np.triu_indices(n, k=1)
        d = np.arctan2(num[iu], den[iu])  # atan2 handles den == 0 (antipodal)
        us.append(math.sqrt(N) * d)
    if zs.roots_at_infinity:
        d_inf = math.pi / 2 - np.arctan(np.abs(z))
        us.append(math.sqrt(N) * np.repeat(d_inf, zs.roots_at_infinity))
        n_inf_pairs = zs.roots_at_infinity * (zs.roots_at_infinity - 1) // 2
        if n_inf_pairs:
            us.append(np.zeros(n_inf_pairs))
    if not us:
        return np.zeros(0)
    u = np.concatenate(us)
    return u[u < u_max]


def _hist_chunk_roots(args) -> np.ndarray:
    N, seed, lo, hi, u_max, bins = args
    counts = np.zeros(bins, dtype=np.int64)
    edges = np.linspace(0.0, u_max, bins + 1)
    for index in range(lo, hi):
        zs = roots(sample_su2(N, seed, index))
        u = _pairwise_scaled_distances(zs, N, u_max)
        counts += np.histogram(u, bins=edges)[0]
    return counts


def _hist_chunk_uniform(args) -> np.ndarray:
    N, seed, lo, hi, u_max, bins = args
    counts = np.zeros(bins, dtype=np.int64)
    edges = np.linspace(0.0, u_max, bins + 1)
    for index in range(lo, hi):
        rng = substream(seed, index)
        t = rng.random(N)
        phi = rng.random(N) * 2 * math.pi
        z = np.sqrt(t / (1.0 - t)) * np.exp(1j * phi)  # Fubini-Study uniform
        num = np.abs(z[:, None] - z[None, :])
        den = np.abs(1.0 + z[:, None] * z[None, :].conj())
        iu = np.triu_indices(N, k=1)
        u = math.sqrt(N) * np.arctan2(num[iu], den[iu])
        counts += np.histogram(u[u < u_max], bins=edges)[0]
    return counts


def _accumulate(worker, N, samples, u_max, bins, seed, workers) -> np.ndarray:
    nw = worker_count(workers)
    chunks = []
    step = max(1, math.ceil(samples / max(nw * 4, 1)))
    for lo in range(0, samples, step):
        chunks.append((N, seed, lo, min(lo + step, samples), u_max, bins))
    if nw == 1:
        parts = [worker(ch) for ch in chunks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(worker, chunks))
    return np.sum(parts, axis=0)  # merging is associative/commutative


def _band_areas(u_max: float, bins: int, N: int) -> np.ndarray:
    """Exact Fubini-Study annulus areas of the distance bands; the sphere has
    total area pi and cap area pi sin^2(d)."""
    edges = np.linspace(0.0, u_max, bins + 1) / math.sqrt(N)
    caps = math.pi * np.sin(edges) ** 2
    return np.diff(caps)


def _curve_from_counts(
    counts: np.ndarray, N: int, samples: int, u_max: float, bins: int, method: str, params: dict
) -> CorrelationCurve:
    mids = (np.arange(bins) + 0.5) * (u_max / bins)
    denom = samples * N**2 * _band_areas(u_max, bins, N) / math.pi
    value = counts / denom
    # each unordered pair contributes 2 to the ordered count, so the Poisson
    # unit is counts/2
    std_error = np.sqrt(2.0 * counts) / denom
    return CorrelationCurve(
        u=mids, value=value, std_error=std_error, method=method, params=params
    )


def empirical_pair_correlation(
    N: int,
    samples: int,
    u_max: float = 4.0,
    bins: int = 40,
    seed: int = 0,
    workers: Optional[int] = None,
) -> tuple[PairHistogram, CorrelationCurve]:
    """Estimate the scaled pair correlation of SU(2) zeros.

    Every root pair of every sample contributes u = sqrt(N) d_FS; whole-sphere
    accumulation is legitimate because the ensemble is isometry invariant, and
    multiplies the statistics by N relative to a single scaled neighborhood.
    Returns the ordered-pair histogram and the normalized curve with per-bin
    Poisson standard errors.
    """
    if N < 1 or samples < 1 or bins < 1 or u_max <= 0:
        raise ValueError("bad histogram parameters")
    unordered = _accumulate(_hist_chunk_roots, N, samples, u_max, bins, seed, workers)
    counts = 2 * unordered
    hist = PairHistogram(u_max=u_max, bins=bins, counts=counts, samples=samples, N=N)
    params = {"N": N, "samples": samples, "u_max": u_max, "bins": bins, "seed": seed}
    return hist, _curve_from_counts(counts, N, samples, u_max, bins, "mc", params)


def poisson_baseline(
    N: int,
    samples: int,
    u_max: float = 4.0,
    bins: int = 40,
    seed: int = 0,
    workers: Optional[int] = None,
) -> CorrelationCurve:
    """Same estimator on N i.i.d. Fubini-Study-uniform points per sample;
    expectation is exactly 1 - 1/N in every bin, calibrating the estimator."""
    if N < 1 or samples < 1 or bins < 1 or u_max <= 0:
        raise ValueError("bad histogram parameters")
    unordered = _accumulate(_hist_chunk_uniform, N, samples, u_max, bins, seed, workers)
    params = {"N": N, "samples": samples, "u_max": u_max, "bins": bins, "seed": seed}
    return _curve_from_counts(
        2 * unordered, N, samples, u_max, bins, "mc-baseline", params
    )
