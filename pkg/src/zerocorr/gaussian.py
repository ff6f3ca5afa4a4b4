"""Circular complex Gaussians with PSD covariance, sampling, Wick moments.

The measures here are mean-zero complex Gaussians determined by a positive
semidefinite Hermitian covariance Sigma_ij = E[xi_i conj(xi_j)]; the
pseudo-covariance E[xi_i xi_j] vanishes (circular symmetry).  Rank-deficient
covariances are supported: the measure lives on the span of the positive
eigenvectors.

Moments of monomials prod xi_{holo} prod conj(xi_{anti}) vanish unless the
pattern is balanced, in which case they equal the permanent of the matrix of
pair covariances (complex Wick/Isserlis formula).  `det_product_moment`
evaluates the determinant-product expectations that appear in the zero
correlation integrals by expanding each determinant over permutations and
feeding the resulting monomials to the permanent.

Sampling is reproducible by construction: draw i comes from its own
counter-based substream keyed by (seed, i), so results never depend on batch
boundaries or thread count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveSemidefinite, NumericalContractError, PatternTooLarge

__all__ = [
    "HermitianMatrix",
    "GeneralizedGaussian",
    "MomentPattern",
    "substream",
    "psd_factorize",
    "sample",
    "permanent",
    "wick_moment",
    "det_product_moment",
    "mc_det_product_moment",
]

_EXACT_PATH_CAP = 4     # determinant expansion allowed while n*k <= 4
_PERMANENT_CAP = 12     # Ryser is exact but 2^s; callers beyond this go MC
_IMAG_RESIDUE_TOL = 1e-10


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for draw `index` of the stream keyed by `seed`.

    Philox is counter-based, so distinct (seed, index) keys give statistically
    independent streams and the draw for a given index is the same no matter
    how work is batched across workers.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)])
    return np.random.Generator(np.random.Philox(key=key))


class HermitianMatrix:
    """Square complex matrix kept exactly Hermitian by symmetrization."""

    def __init__(self, entries):
        mat = np.asarray(entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        self.mat = 0.5 * (mat + mat.conj().T)
        self.dim = mat.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "HermitianMatrix":
        return cls(np.eye(dim, dtype=complex))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)

    def __getitem__(self, idx):
        return self.mat[idx]

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim})"


def _as_hermitian(sigma) -> HermitianMatrix:
    return sigma if isinstance(sigma, HermitianMatrix) else HermitianMatrix(sigma)


@dataclass(frozen=True)
class GeneralizedGaussian:
    """Circular Gaussian with PSD covariance = factor @ factor^*.

    `rank` counts the retained (positive) eigenvalues; `eigen_floor` is the
    absolute clipping floor that was applied during factorization.
    """

    covariance: HermitianMatrix
    rank: int
    factor: np.ndarray
    eigen_floor: float

    @property
    def dim(self) -> int:
        return self.covariance.dim


def psd_factorize(sigma, tol: float = 1e-10) -> GeneralizedGaussian:
    """Eigen-factorize a PSD Hermitian matrix, clipping tiny negative modes.

    Eigenvalues below tol * lambda_max in magnitude are clipped to zero (the
    measure then lives on the positive eigenspace); an eigenvalue below
    -tol * lambda_max raises `NotPositiveSemidefinite` carrying the offender.
    """
    sigma = _as_hermitian(sigma)
    vals, vecs = np.linalg.eigh(sigma.mat)
    lmax = max(vals.max(initial=0.0), 0.0)
    floor = tol * lmax
    if vals.min(initial=0.0) < -floor:
        raise NotPositiveSemidefinite(float(vals.min()), float(floor))
    keep = vals > floor
    factor = vecs[:, keep] * np.sqrt(vals[keep])
    return GeneralizedGaussian(
        covariance=sigma, rank=int(keep.sum()), factor=factor, eigen_floor=float(floor)
    )


def sample(g: GeneralizedGaussian, seed: int, count: int) -> np.ndarray:
    """Draw `count` vectors xi = F w, w standard circular complex.

    Returns an array of shape (count, dim).  Real and imaginary parts of each
    w entry are i.i.d. N(0, 1/2), so E[w conj(w)] = 1 and E[w w] = 0.
    Draw i depends only on (seed, i).
    """
    out = np.zeros((count, g.dim), dtype=complex)
    if g.rank == 0:
        return out
    for i in range(count):
        rng = substream(seed, i)
        wri = rng.standard_normal((2, g.rank))
        out[i] = g.factor @ ((wri[0] + 1j * wri[1]) / np.sqrt(2.0))
    return out


@dataclass(frozen=True)
class MomentPattern:
    """Indices of the holomorphic factors xi_i and conjugate factors conj(xi_j)."""

    holo: tuple
    anti: tuple

    def __post_init__(self):
        object.__setattr__(self, "holo", tuple(int(i) for i in self.holo))
        object.__setattr__(self, "anti", tuple(int(i) for i in self.anti))

    @property
    def balanced(self) -> bool:
        return len(self.holo) == len(self.anti)


def permanent(M: np.ndarray) -> complex:
    """Permanent by Ryser's inclusion-exclusion with Gray-code column updates."""
    M = np.asarray(M, dtype=complex)
    s = M.shape[0]
    if s == 0:
        return 1.0 + 0j
    if M.shape != (s, s):
        raise ValueError("permanent needs a square matrix")
    # perm(M) = sum over nonempty column subsets S of (-1)^(s-|S|) prod_i sum_{j in S} M[i,j]
    total = 0j
    rowsum = np.zeros(s, dtype=complex)
    prev = 0
    for g in range(1, 1 << s):
        gray = g ^ (g >> 1)
        changed = gray ^ prev
        j = changed.bit_length() - 1
        if gray & changed:
            rowsum += M[:, j]
        else:
            rowsum -= M[:, j]
        prev = gray
        term_sign = -1.0 if (s - int(bin(gray).count("1"))) % 2 else 1.0
        total += term_sign * np.prod(rowsum)
    return total


def wick_moment(sigma, pattern: MomentPattern) -> complex:
    """E[prod_a xi_{holo_a} prod_b conj(xi_{anti_b})] under covariance sigma.

    Zero for unbalanced patterns; otherwise the permanent of
    M[a, b] = sigma[holo_a, anti_b] (sum over bijections holo -> anti of
    products of pair covariances).  Raises `PatternTooLarge` past size 12,
    where callers are expected to fall back to the Monte Carlo route.
    """
    sigma = _as_hermitian(sigma)
    if not pattern.balanced:
        return 0j
    s = len(pattern.holo)
    if s == 0:
        return 1.0 + 0j
    if s > _PERMANENT_CAP:
        raise PatternTooLarge(f"pattern size {s} exceeds exact cap {_PERMANENT_CAP}")
    idx = pattern.holo + pattern.anti
    if min(idx) < 0 or max(idx) >= sigma.dim:
        raise ValueError("pattern index out of range")
    M = sigma.mat[np.ix_(pattern.holo, pattern.anti)]
    return permanent(M)


def _flat(j: int, p: int, q: int, n: int, m: int) -> int:
    """Flat index of xi^p_{jq} in the (j, p, q) ordering used throughout."""
    return (j * n + p) * m + q


def det_product_moment(lam, n: int, k: int, m: int) -> float:
    """E[prod_{p<=n} det_{j,j'<=k} (sum_q xi^p_{jq} conj(xi^p_{j'q}))].

    `lam` is the k*n*m covariance of the variables xi^p_{jq} in the flat
    (j, p, q) ordering; for the correlation pipeline it is I_k (x) Lambda,
    under which the k jet rows are i.i.d.  Each determinant is expanded as a
    signed sum over S_k, the q-sums are expanded multilinearly, and every
    resulting monomial goes through `wick_moment`.  The result is real up to
    roundoff; an imaginary residue above 1e-10 relative signals a covariance
    construction bug and raises rather than truncating.
    """
    lam = _as_hermitian(lam)
    if k > m:
        raise ValueError("codimension k cannot exceed dimension m")
    if n * k > _EXACT_PATH_CAP:
        raise PatternTooLarge(
            f"n*k = {n * k} beyond exact path; use mc_det_product_moment"
        )
    if lam.dim != k * n * m:
        raise ValueError(f"covariance dim {lam.dim} != k*n*m = {k * n * m}")

    total = 0j
    perms = list(itertools.permutations(range(k)))
    signs = {pi: _perm_sign(pi) for pi in perms}
    # one permutation per point, one q per (p, j) factor
    for sigma_tuple in itertools.product(perms, repeat=n):
        sgn = 1.0
        for pi in sigma_tuple:
            sgn *= signs[pi]
        for qs in itertools.product(range(m), repeat=n * k):
            holo = []
            anti = []
            f = 0
            for p in range(n):
                pi = sigma_tuple[p]
                for j in range(k):
                    q = qs[f]
                    f += 1
                    holo.append(_flat(j, p, q, n, m))
                    anti.append(_flat(pi[j], p, q, n, m))
            total += sgn * wick_moment(lam, MomentPattern(tuple(holo), tuple(anti)))
    if abs(total.imag) > _IMAG_RESIDUE_TOL * max(abs(total), 1e-300):
        raise NumericalContractError(
            f"determinant-product moment has imaginary residue {total.imag:.3e}"
        )
    return float(total.real)


def _perm_sign(pi) -> float:
    sign = 1.0
    seen = [False] * len(pi)
    for i in range(len(pi)):
        if seen[i]:
            continue
        clen = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = pi[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def mc_det_product_moment(
    lam, n: int, k: int, m: int, samples: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of `det_product_moment`, (estimate, std_error).

    Draws xi from the generalized Gaussian for `lam` via `sample`, evaluates
    the determinant product on each draw and averages.  Fixed seed gives a
    bit-identical estimate regardless of batching.
    """
    if samples < 1000:
        raise ValueError("need at least 1e3 samples for a usable standard error")
    lam = _as_hermitian(lam)
    if lam.dim != k * n * m:
        raise ValueError(f"covariance dim {lam.dim} != k*n*m = {k * n * m}")
    g = psd_factorize(lam)
    draws = sample(g, seed, samples).reshape(samples, k, n, m)
    # Gram matrices G[s, p, j, j'] = sum_q xi^p_{jq} conj(xi^p_{j'q})
    gram = np.einsum("sjpq,slpq->spjl", draws, draws.conj())
    vals = np.prod(np.linalg.det(gram).real, axis=1)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    return est, se
