"""Covariance blocks of section values and first jets at a point configuration.

For n pairwise-distinct points z^1, ..., z^n in C^m (dimensionless scaled
coordinates), the limit covariance of values and holomorphic derivatives is
built from the level-1 Heisenberg kernel:

    A^p_{p'}      = exp(i Im(z^p . conj(z^{p'}))) exp(-|z^p - z^{p'}|^2 / 2)
    B^p_{p' q'}   = (z^p_{q'} - z^{p'}_{q'}) A^p_{p'}
    C^{p q}_{p' q'} = [delta_{q q'} + (conj(z^{p'}_q) - conj(z^p_q))
                                       (z^p_{q'} - z^{p'}_{q'})] A^p_{p'}

in the convention where all blocks carry unit diagonal (everything downstream
is homogeneous of order zero in a joint rescaling of the blocks, so one global
convention is used to keep normalizations from mixing).

The finite-degree analogue on CP^1 comes from the degree-N sphere kernel
pulled back through the affine chart at the base point,

    K_N(z, w) = c_N (1 + z conj(w))^N (1+|z|^2)^{-N/2} (1+|w|^2)^{-N/2},

with closed-form horizontal derivatives (validated against a finite-difference
oracle in the test tree):

    d2bar K = N K [ z/(1 + z conj(w)) - w/(1+|w|^2) ]
    d1 d2bar K = N K [ N beta gamma + (1 + z conj(w))^{-2} ],
        beta  = z/(1 + z conj(w)) - w/(1+|w|^2)
        gamma = conj(w)/(1 + z conj(w)) - conj(z)/(1+|z|^2).

Derivatives are scaled by 1/sqrt(N) per jet slot and the whole matrix by
pi/d_N, which makes the finite blocks converge entrywise to the limit blocks
at rate O(1/N) when evaluated at z/sqrt(N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NearCoincidentConfiguration, NumericalContractError
from .gaussian import GeneralizedGaussian, HermitianMatrix, psd_factorize

__all__ = [
    "PointConfiguration",
    "CovarianceBlocks",
    "FiniteNContext",
    "limit_blocks",
    "lambda_schur",
    "finite_blocks_cp1",
    "assemble_conditional",
]

_CONDITION_CAP = 1e12
_ASSEMBLED_PSD_TOL = 1e-9
_UNIT_DIAG_TOL = 1e-12


@dataclass(frozen=True)
class PointConfiguration:
    """n pairwise-distinct points of C^m, stored as an (n, m) array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=complex))
        if pts.ndim != 2:
            raise ValueError(f"expected an (n, m) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts.view(float))):
            raise ValueError("non-finite point coordinates")
        object.__setattr__(self, "points", pts)
        if self.min_separation() == 0.0:
            raise ValueError("points must be pairwise distinct")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def min_separation(self) -> float:
        if self.n < 2:
            return math.inf
        d = self.points[:, None, :] - self.points[None, :, :]
        dist = np.linalg.norm(d, axis=2)
        return float(dist[~np.eye(self.n, dtype=bool)].min())

    def subset(self, indices) -> "PointConfiguration":
        return PointConfiguration(self.points[list(indices)])


@dataclass(frozen=True)
class CovarianceBlocks:
    """Blocks (A, B, C) of the value/jet covariance; A is n x n, B is
    n x (m n), C is (m n) x (m n), with jet columns ordered (p', q') ->
    p' * m + q'.

    Construction enforces Hermiticity of A and C, unit diagonal of A, and
    positive semidefiniteness of the assembled matrix [[A, B], [B*, C]]
    within 1e-9.  (The finite-degree C has diagonal (1 + |z|^2/N)^{-2},
    exactly 1 only in the limit, so unit diagonal of C is a property of the
    limit blocks checked in tests, not a constructor invariant.)
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        A = np.asarray(self.A, dtype=complex)
        B = np.asarray(self.B, dtype=complex)
        C = np.asarray(self.C, dtype=complex)
        n, m = self.n, self.m
        if A.shape != (n, n) or B.shape != (n, m * n) or C.shape != (m * n, m * n):
            raise ValueError("block shapes inconsistent with (n, m)")
        if np.abs(A - A.conj().T).max() > 1e-12:
            raise ValueError("A is not Hermitian")
        if np.abs(C - C.conj().T).max() > 1e-12:
            raise ValueError("C is not Hermitian")
        if np.abs(np.diag(A) - 1.0).max() > _UNIT_DIAG_TOL:
            raise ValueError("A must have unit diagonal in this convention")
        w = np.linalg.eigvalsh(self.assembled())
        if w.min() < -_ASSEMBLED_PSD_TOL:
            raise NumericalContractError(
                f"assembled covariance not PSD: min eigenvalue {w.min():.3e}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    def assembled(self) -> np.ndarray:
        top = np.hstack([self.A, self.B])
        bot = np.hstack([self.B.conj().T, self.C])
        return np.vstack([top, bot])


@dataclass(frozen=True)
class FiniteNContext:
    """Degree N on CP^m together with the section-space dimension d_N."""

    N: int
    m: int
    d_N: int = field(init=False)

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise ValueError("N and m must be positive")
        object.__setattr__(self, "d_N", math.comb(self.N + self.m, self.m))


def limit_blocks(z: PointConfiguration) -> CovarianceBlocks:
    """Limit covariance blocks at a scaled configuration (unit-diagonal
    convention); exact algebra, no approximation."""
    pts = z.points
    n, m = z.n, z.m
    inner = pts @ pts.conj().T                       # z^p . conj(z^{p'})
    diff = pts[:, None, :] - pts[None, :, :]          # z^p - z^{p'}
    sq = np.einsum("pqk,pqk->pq", diff, diff.conj()).real
    A = np.exp(1j * inner.imag - 0.5 * sq)
    B = (diff * A[:, :, None]).reshape(n, n * m)
    # C[(p,q),(p',q')] = [delta_{qq'} + conj(diff[p',p,q]) ... ] A
    delta = np.eye(m)
    C = (
        delta[None, None, :, :]
        + (-diff.conj())[:, :, :, None] * diff[:, :, None, :]
    ) * A[:, :, None, None]
    C = C.transpose(0, 2, 1, 3).reshape(n * m, n * m)
    return CovarianceBlocks(A=A, B=B, C=C, n=n, m=m)


def lambda_schur(blocks: CovarianceBlocks) -> HermitianMatrix:
    """Schur complement Lambda = C - B* A^{-1} B, symmetrized.

    Raises `NearCoincidentConfiguration` when A is numerically singular
    (condition number above 1e12): the correlations genuinely degenerate at
    coincident points and regularizing would corrupt downstream checks.
    """
    cond = np.linalg.cond(blocks.A)
    if not np.isfinite(cond) or cond > _CONDITION_CAP:
        raise NearCoincidentConfiguration(
            f"value covariance condition number {cond:.3e} exceeds 1e12"
        )
    X = np.linalg.solve(blocks.A, blocks.B)
    return HermitianMatrix(blocks.C - blocks.B.conj().T @ X)


def _lifted_kernel_cp1(N: int, z: complex, w: complex) -> complex:
    cN = (N + 1) / np.pi
    return (
        cN
        * (1.0 + z * np.conj(w)) ** N
        * (1.0 + abs(z) ** 2) ** (-N / 2)
        * (1.0 + abs(w) ** 2) ** (-N / 2)
    )


def _d2bar_kernel_cp1(N: int, z: complex, w: complex) -> complex:
    a = 1.0 + z * np.conj(w)
    return N * _lifted_kernel_cp1(N, z, w) * (z / a - w / (1.0 + abs(w) ** 2))


def _d1d2bar_kernel_cp1(N: int, z: complex, w: complex) -> complex:
    a = 1.0 + z * np.conj(w)
    beta = z / a - w / (1.0 + abs(w) ** 2)
    gamma = np.conj(w) / a - np.conj(z) / (1.0 + abs(z) ** 2)
    return N * _lifted_kernel_cp1(N, z, w) * (N * beta * gamma + a ** (-2))


def finite_blocks_cp1(z: PointConfiguration, ctx: FiniteNContext) -> CovarianceBlocks:
    """Degree-N covariance blocks on CP^1 at the scaled configuration z.

    The configuration is given in scaled coordinates: the kernel and its
    horizontal derivatives are evaluated at the affine points z^p / sqrt(N).
    Blocks are scaled by pi/d_N so the convention matches `limit_blocks`,
    to which they converge entrywise at rate O(1/N).
    """
    if z.m != 1:
        raise ValueError("finite-degree blocks are implemented for m=1 only")
    if ctx.m != 1:
        raise ValueError("context dimension must be 1")
    N, dN = ctx.N, ctx.d_N
    pts = z.points[:, 0] / math.sqrt(N)
    n = z.n
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, n), dtype=complex)
    C = np.zeros((n, n), dtype=complex)
    scale = np.pi / dN
    for p in range(n):
        for q in range(n):
            zp, wq = pts[p], pts[q]
            A[p, q] = scale * _lifted_kernel_cp1(N, zp, wq)
            B[p, q] = scale * _d2bar_kernel_cp1(N, zp, wq) / math.sqrt(N)
            C[p, q] = scale * _d1d2bar_kernel_cp1(N, zp, wq) / N
    # clean the roundoff on the exact unit diagonal of A
    np.fill_diagonal(A, np.where(np.abs(np.diag(A) - 1) < 1e-13, 1.0, np.diag(A)))
    return CovarianceBlocks(A=A, B=B, C=C, n=n, m=1)


def assemble_conditional(
    blocks: CovarianceBlocks, k: int
) -> tuple[float, GeneralizedGaussian]:
    """Zero-value conditional jet measure: prefactor (pi^n det A)^{-k} and the
    generalized Gaussian with covariance I_k (x) Lambda.

    The conditional is Gaussian in the jets but not normalized as a
    probability density; the prefactor carries the normalization deficit.
    """
    if k < 1 or k > blocks.m:
        raise ValueError("need 1 <= k <= m")
    det_a = float(np.linalg.det(blocks.A).real)
    if det_a <= 0.0:
        raise NumericalContractError(
            f"det A = {det_a:.3e} not positive at a distinct configuration"
        )
    prefactor = (np.pi ** blocks.n * det_a) ** (-k)
    lam = lambda_schur(blocks)
    gg = psd_factorize(np.kron(np.eye(k), lam.mat))
    return prefactor, gg
