"""Model reproducing kernels: reduced Heisenberg group and the round sphere.

Two exactly-known projection kernels drive everything downstream:

* the level-N Heisenberg kernel on C^m x S^1,

      (N^m / pi^m) exp(i N (t - s)) exp(N (zeta.conj(eta)
                                          - |zeta|^2/2 - |eta|^2/2)),

  which is the universal local model at scale 1/sqrt(N);

* the degree-N kernel on the unit sphere S^{2m+1} in C^{m+1},

      (N+m)!/(pi^m N!) <x, y>^N,

  with <x,y> the Hermitian inner product.

`scaled_kernel_residual` measures how fast the dilated sphere kernel, pulled
back through the standard chart at the base point (1, 0, ..., 0), approaches
the level-1 Heisenberg kernel.

Angles are kept unreduced (no mod 2*pi): the kernels see them only through
exp(i N theta), and reducing them invites branch-cut mistakes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HeisenbergPoint",
    "SpherePoint",
    "KernelValue",
    "heisenberg_szego",
    "heisenberg_dilate",
    "fs_szego",
    "heisenberg_lift",
    "scaled_kernel_residual",
]

UNIT_NORM_TOL = 1e-12  # one order above double-precision normalization error


def _as_complex_vector(u) -> np.ndarray:
    v = np.atleast_1d(np.asarray(u, dtype=complex))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v.view(float))):
        raise ValueError("non-finite coordinates")
    return v


@dataclass(frozen=True)
class HeisenbergPoint:
    """Point (u, theta) of C^m x S^1 in dimensionless scaled coordinates."""

    u: np.ndarray
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", _as_complex_vector(self.u))
        if self.u.size < 1:
            raise ValueError("dimension m must be >= 1")
        if not np.isfinite(self.theta):
            raise ValueError("non-finite angle")

    @property
    def m(self) -> int:
        return self.u.size


@dataclass(frozen=True)
class SpherePoint:
    """Point of the unit sphere S^{2m+1} subset C^{m+1}."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _as_complex_vector(self.w))
        if self.w.size < 2:
            raise ValueError("need at least 2 homogeneous coordinates")
        nrm = np.linalg.norm(self.w)
        if abs(nrm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"not on the unit sphere: |w| - 1 = {nrm - 1.0:.3e}")

    @property
    def m(self) -> int:
        return self.w.size - 1


@dataclass(frozen=True)
class KernelValue:
    value: complex
    level: int
    dimension: int


def heisenberg_szego(N: int, x: HeisenbergPoint, y: HeisenbergPoint) -> KernelValue:
    """Level-N Heisenberg kernel at x = (zeta, t), y = (eta, s).

    Exact algebraic evaluation; the real part of the exponent is
    -N |zeta - eta|^2 / 2 <= 0, so there is no overflow at any N.
    """
    if N < 1:
        raise ValueError("level N must be a positive integer")
    if x.m != y.m:
        raise ValueError(f"dimension mismatch: {x.m} vs {y.m}")
    m = x.m
    expo = 1j * N * (x.theta - y.theta) + N * (
        x.u @ y.u.conj()
        - 0.5 * np.vdot(x.u, x.u).real
        - 0.5 * np.vdot(y.u, y.u).real
    )
    return KernelValue(value=(N**m / np.pi**m) * np.exp(expo), level=N, dimension=m)


def heisenberg_dilate(r: float, x: HeisenbergPoint) -> HeisenbergPoint:
    """Dilation (u, theta) -> (r u, r^2 theta), the scaling automorphism."""
    if not (r > 0):
        raise ValueError("dilation parameter must be positive")
    return HeisenbergPoint(u=r * x.u, theta=r * r * x.theta)


def fs_szego(N: int, m: int, x: SpherePoint, y: SpherePoint) -> KernelValue:
    """Degree-N sphere kernel (N+m)!/(pi^m N!) <x, y>^N.

    The factorial ratio is accumulated as a product of m factors (N+1)...(N+m)
    so that N up to 1e6 stays well inside double range.
    """
    if N < 1 or m < 1:
        raise ValueError("N and m must be positive integers")
    if x.m != m or y.m != m:
        raise ValueError(f"points live on S^{{2k+1}} with k={x.m},{y.m}, expected m={m}")
    ratio = 1.0
    for i in range(1, m + 1):
        ratio *= N + i
    inner = x.w @ y.w.conj()
    return KernelValue(value=ratio / np.pi**m * inner**N, level=N, dimension=m)


def heisenberg_lift(z, theta: float, m: int | None = None) -> SpherePoint:
    """Chart into S^{2m+1}: (z, theta) -> e^{i theta} (1, z) / sqrt(1 + |z|^2).

    Maps the origin to the base point (1, 0, ..., 0); the output is unit-norm
    by construction.  Other base points reduce to this one by a unitary
    rotation of C^{m+1}, so a single chart suffices.
    """
    z = _as_complex_vector(z)
    if m is not None and z.size != m:
        raise ValueError(f"expected {m} affine coordinates, got {z.size}")
    if not np.isfinite(theta):
        raise ValueError("non-finite angle")
    w = np.concatenate(([1.0 + 0j], z))
    return SpherePoint(w=np.exp(1j * theta) * w / np.sqrt(1.0 + np.vdot(z, z).real))


def scaled_kernel_residual(
    N: int, m: int, u, v, theta: float = 0.0, phi: float = 0.0
) -> float:
    """| N^{-m} Pi_N(u/sqrt(N), theta/N; v/sqrt(N), phi/N) - Pi^H_1(u,theta; v,phi) |.

    The sphere kernel is evaluated through `heisenberg_lift`; the residual is
    the absolute deviation of the dilated kernel from its Heisenberg limit.
    On the diagonal u = v = 0 (m = 1) the residual is exactly 1/(pi N).
    """
    u = _as_complex_vector(u)
    v = _as_complex_vector(v)
    if u.size != m or v.size != m:
        raise ValueError("offset dimension must equal m")
    sqn = np.sqrt(N)
    x = heisenberg_lift(u / sqn, theta / N, m)
    y = heisenberg_lift(v / sqn, phi / N, m)
    finite = fs_szego(N, m, x, y).value / N**m
    model = heisenberg_szego(
        1, HeisenbergPoint(u, theta), HeisenbergPoint(v, phi)
    ).value
    return abs(finite - model)
