"""Zero correlation functions: universal limits and finite degree on CP^1.

The codimension-k, n-point limit correlation at a scaled configuration z is

    K_{nkm}(z) = (pi^n det A)^{-k} E[ prod_p det_{j,j'} (sum_q xi^p_{jq}
                                      conj(xi^p_{j'q})) ],

the expectation taken under the zero-value conditional jet Gaussian with
covariance I_k (x) Lambda (`covariance.assemble_conditional`).  Normalizing by
the one-point density K_1 = m!/(pi^k (m-k)!) per point gives the dimensionless
correlation that tends to 1 at large separation.

For n = 2, k = 1 the normalized limit has the closed form

    [ (m^2+m)/2 sinh^2 t + t^2 ] cosh t - (m+1) t sinh t
    ----------------------------------------------------- + (m-1)/(2m),
                     m^2 sinh^3 t

with t = |z^1 - z^2|^2 / 2; `pair_correlation_closed` evaluates it with a
series branch at small t (the closed form loses ~6 digits to cancellation
near t = 1e-3) and saturates to 1 above t = 30, where the deviation is below
double resolution.

Finite-degree correlations on CP^1 run the same pipeline on the degree-N
blocks and are already scaled to be directly comparable with the limit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covariance import (
    CovarianceBlocks,
    FiniteNContext,
    PointConfiguration,
    assemble_conditional,
    finite_blocks_cp1,
    limit_blocks,
)
from .gaussian import det_product_moment, mc_det_product_moment

__all__ = [
    "Method",
    "CorrelationRequest",
    "CorrelationValue",
    "CorrelationCurve",
    "density_one_point",
    "normalization_constant",
    "pair_correlation_closed",
    "small_r_asymptote",
    "limit_correlation",
    "finite_correlation_cp1",
]

_SERIES_BRANCH_T = 1e-3
_ASYMPTOTE_BRANCH_T = 30.0


class Method(str, enum.Enum):
    EXACT_WICK = "exact_wick"
    MONTE_CARLO = "monte_carlo"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class CorrelationRequest:
    n: int
    k: int
    m: int
    config: PointConfiguration
    method: Method = Method.EXACT_WICK
    mc_samples: int = 200_000
    mc_seed: int = 0

    def __post_init__(self):
        if not (1 <= self.k <= self.m):
            raise ValueError("need 1 <= k <= m")
        if self.config.n != self.n or self.config.m != self.m:
            raise ValueError("configuration shape disagrees with (n, m)")
        if self.method == Method.CLOSED_FORM and not (
            self.n == 1 or (self.n, self.k) == (2, 1)
        ):
            raise ValueError("closed_form is only available for n=1 or (n,k)=(2,1)")


@dataclass(frozen=True)
class CorrelationValue:
    """Raw correlation K and its normalized counterpart; `std_error` (on the
    normalized scale) is set only for Monte Carlo evaluations."""

    raw: float
    normalized: float
    std_error: Optional[float] = None
    method: str = Method.EXACT_WICK.value


@dataclass(frozen=True)
class CorrelationCurve:
    """Sampled correlation curve u -> K~(u) with provenance metadata."""

    u: np.ndarray
    value: np.ndarray
    std_error: Optional[np.ndarray]
    method: str
    params: dict

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))
        if self.std_error is not None:
            object.__setattr__(
                self, "std_error", np.asarray(self.std_error, dtype=float)
            )


def density_one_point(k: int, m: int) -> float:
    """Expected zero-set volume density m!/(pi^k (m-k)!)."""
    if not (1 <= k <= m):
        raise ValueError("need 1 <= k <= m")
    return math.factorial(m) / (np.pi**k * math.factorial(m - k))


def normalization_constant(n: int, k: int, m: int) -> float:
    """(pi^k (m-k)!/m!)^n, the factor turning K into the dimensionless K~."""
    return density_one_point(k, m) ** (-n)


def pair_correlation_closed(t: float, m: int) -> float:
    """Normalized two-point limit correlation for hypersurface zeros (k=1)
    at half squared separation t = |z^1 - z^2|^2 / 2."""
    if t <= 0:
        raise ValueError("separation parameter t must be positive")
    if m < 1:
        raise ValueError("dimension m must be >= 1")
    if t > _ASYMPTOTE_BRANCH_T:
        return 1.0
    if t < _SERIES_BRANCH_T:
        # series of t*K~ in t, exact rational coefficients:
        #   (m-1)/(2m) (1 + t) + (m+1)(m+2)/(6 m^2) t^2 - (m+3)(m+4)/(90 m^2) t^4
        #   + (m+5)(m+6)/(945 m^2) t^6 - (m+7)(m+8)/(9450 m^2) t^8
        m2 = m * m
        tk = (
            (m - 1) / (2 * m) * (1 + t)
            + (m + 1) * (m + 2) / (6 * m2) * t**2
            - (m + 3) * (m + 4) / (90 * m2) * t**4
            + (m + 5) * (m + 6) / (945 * m2) * t**6
            - (m + 7) * (m + 8) / (9450 * m2) * t**8
        )
        return tk / t
    sh, ch = math.sinh(t), math.cosh(t)
    num = (0.5 * (m * m + m) * sh * sh + t * t) * ch - (m + 1) * t * sh
    return num / (m * m * sh**3) + (m - 1) / (2 * m)


def small_r_asymptote(r: float, m: int) -> float:
    """Leading small-separation behavior of the point-pair correlation
    (k = m): (m+1)/4 * r^(4-2m)."""
    return (m + 1) / 4.0 * r ** (4 - 2 * m)


def _wick_value(blocks: CovarianceBlocks, n: int, k: int, m: int) -> float:
    prefactor, gg = assemble_conditional(blocks, k)
    moment = det_product_moment(gg.covariance, n, k, m)
    return prefactor * moment


def _mc_value(
    blocks: CovarianceBlocks, n: int, k: int, m: int, samples: int, seed: int
) -> tuple[float, float]:
    prefactor, gg = assemble_conditional(blocks, k)
    est, se = mc_det_product_moment(gg.covariance, n, k, m, samples, seed)
    return prefactor * est, prefactor * se


def limit_correlation(req: CorrelationRequest) -> CorrelationValue:
    """Universal limit correlation at the requested configuration.

    exact_wick chains limit_blocks -> lambda_schur -> assemble_conditional ->
    det_product_moment (requires n*k <= 4); monte_carlo swaps the last step
    for its sampling estimate; closed_form routes through
    `pair_correlation_closed` where available.
    """
    n, k, m = req.n, req.k, req.m
    norm = normalization_constant(n, k, m)
    if req.method == Method.CLOSED_FORM:
        if n == 1:
            raw = density_one_point(k, m)
            return CorrelationValue(raw, 1.0, None, req.method.value)
        sep = np.linalg.norm(req.config.points[0] - req.config.points[1])
        ktil = pair_correlation_closed(0.5 * float(sep) ** 2, m)
        return CorrelationValue(ktil / norm, ktil, None, req.method.value)
    blocks = limit_blocks(req.config)
    if req.method == Method.EXACT_WICK:
        raw = _wick_value(blocks, n, k, m)
        return CorrelationValue(raw, raw * norm, None, req.method.value)
    raw, se = _mc_value(blocks, n, k, m, req.mc_samples, req.mc_seed)
    return CorrelationValue(raw, raw * norm, se * norm, req.method.value)


def scaled_density_cp1(N: int, z_scaled: complex) -> float:
    """Degree-N one-point zero density on CP^1 at scaled chart coordinate z,
    per unit scaled chart area: (1/pi) (1 + |z|^2/N)^{-2}.

    Equals 1/pi at the chart origin (equivalently N/pi per unit
    Fubini-Study volume, N zeros over Vol(CP^1) = pi)."""
    return 1.0 / np.pi * (1.0 + abs(z_scaled) ** 2 / N) ** (-2)


def finite_correlation_cp1(
    N: int,
    n: int,
    config: PointConfiguration,
    k: int = 1,
    method: Method = Method.EXACT_WICK,
    mc_samples: int = 200_000,
    mc_seed: int = 0,
) -> CorrelationValue:
    """Degree-N n-point correlation on CP^1 at a scaled configuration.

    Runs the limit pipeline on the degree-N blocks.  `raw` is the
    N^{-nk}-scaled correlation density in the scaled chart coordinates,
    directly comparable to `limit_correlation(...).raw`; `normalized` divides
    by the product of the exact degree-N one-point densities at the
    configuration points (the limit of that product is the constant
    normalization, but at finite N the local density varies by
    (1 + |z|^2/N)^{-2} across the chart).
    """
    if k != 1 or config.m != 1:
        raise ValueError("finite-degree correlations are implemented for k=m=1")
    if config.n != n:
        raise ValueError("configuration size disagrees with n")
    blocks = finite_blocks_cp1(config, FiniteNContext(N, 1))
    dens = float(
        np.prod([scaled_density_cp1(N, z) for z in config.points[:, 0]])
    )
    if method == Method.EXACT_WICK:
        raw = _wick_value(blocks, n, k, 1)
        return CorrelationValue(raw, raw / dens, None, method.value)
    if method == Method.MONTE_CARLO:
        raw, se = _mc_value(blocks, n, k, 1, mc_samples, mc_seed)
        return CorrelationValue(raw, raw / dens, se / dens, method.value)
    raise ValueError("closed_form is not available at finite degree")
