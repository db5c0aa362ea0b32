"""Semimetrics of negative type and the kernels they induce.

Two families of objects live here. Semimetrics describe a "distance"
``rho`` that need not satisfy the triangle inequality but has negative
type; kernels describe positive definite functions ``k``. Each family
can generate the other:

* a semimetric ``rho`` and a center ``z0`` give the distance-induced kernel
  ``k(z, z') = s * [rho(z, z0) + rho(z', z0) - rho(z, z')]`` with ``s = 1/2``
  by default;
* a nondegenerate kernel ``k`` gives ``rho(z, z') = k(z, z) + k(z', z') - 2 k(z, z')``.

All evaluations are vectorized over samples (2-D arrays, rows are
observations). Point-wise helpers wrap the matrix routines.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist

__all__ = [
    "EuclideanPower",
    "FromKernel",
    "DistanceInduced",
    "Gaussian",
    "Product",
    "Semimetric",
    "Kernel",
    "MAX_GRAM_SIZE",
    "semimetric_eval",
    "semimetric_matrix",
    "negative_type_form",
    "kernel_eval",
    "kernel_diag",
    "median_heuristic_sigma",
    "gram",
    "center_gram",
    "distance_product_factors",
]

#: Largest number of rows a dense Gram matrix may have.
MAX_GRAM_SIZE = 4096


@dataclass(frozen=True)
class EuclideanPower:
    """``rho(z, z') = ||z - z'||**q`` with ``0 < q <= 2``."""

    q: float = 1.0

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 < q <= 2.0) or not np.isfinite(q):
            raise ValueError(f"exponent q must lie in (0, 2], got {self.q!r}")
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class FromKernel:
    """Semimetric generated by a kernel: ``k(z,z) + k(z',z') - 2 k(z,z')``."""

    kernel: "Kernel"


Semimetric = Union[EuclideanPower, FromKernel]


@dataclass(frozen=True)
class DistanceInduced:
    """Kernel induced by a semimetric ``rho`` and a center point.

    Parameters
    ----------
    rho : Semimetric
        The generating semimetric.
    center : sequence of float, optional
        The point ``z0`` with ``k(z0, z0) = 0``. ``None`` means the origin
        of whatever dimension the data has.
    scale : float
        Multiplier in front of the bracket. The conventional value is 1/2;
        the tensor-product kernel whose MMD equals distance covariance uses
        the unscaled bracket (``scale=1``).
    """

    rho: Semimetric = field(default_factory=EuclideanPower)
    center: Optional[tuple] = None
    scale: float = 0.5

    def __post_init__(self):
        if self.center is not None:
            c = np.asarray(self.center, dtype=float).ravel()
            if not np.all(np.isfinite(c)):
                raise ValueError("center must be finite")
            object.__setattr__(self, "center", tuple(c.tolist()))
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")


@dataclass(frozen=True)
class Gaussian:
    """Gaussian kernel ``exp(-sigma * ||z - z'||**2)``."""

    sigma: float

    def __post_init__(self):
        sigma = float(self.sigma)
        if not (sigma > 0 and np.isfinite(sigma)):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class Product:
    """Product kernel on concatenated points ``(x, y)``.

    Columns ``[:split]`` are fed to ``kx`` and columns ``[split:]`` to ``ky``.
    """

    kx: "Kernel"
    ky: "Kernel"
    split: int

    def __post_init__(self):
        if int(self.split) < 1:
            raise ValueError("split must be a positive column index")
        object.__setattr__(self, "split", int(self.split))


Kernel = Union[DistanceInduced, Gaussian, Product]


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise ValueError(f"expected a 2-D sample, got {a.ndim} dimensions")
    return a


def _as_point(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1:
        raise ValueError("a point must be a 1-D vector")
    return z.reshape(1, -1)


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]} columns")


def _check_size(*arrays: np.ndarray) -> None:
    for arr in arrays:
        if arr.shape[0] > MAX_GRAM_SIZE:
            raise ValueError(
                f"sample of {arr.shape[0]} rows exceeds the dense Gram limit of {MAX_GRAM_SIZE}"
            )


def semimetric_matrix(rho: Semimetric, a, b=None) -> np.ndarray:
    """Pairwise semimetric values ``R[i, j] = rho(a_i, b_j)``."""
    a = _as_2d(a)
    b = a if b is None else _as_2d(b)
    _check_dims(a, b)
    if isinstance(rho, EuclideanPower):
        sq = cdist(a, b, "sqeuclidean")
        if rho.q == 2.0:
            return sq
        if rho.q == 1.0:
            return np.sqrt(sq)
        return sq ** (rho.q / 2.0)
    if isinstance(rho, FromKernel):
        k = rho.kernel
        out = kernel_diag(k, a)[:, None] + kernel_diag(k, b)[None, :] - 2.0 * _gram(k, a, b)
        # cancellation can leave tiny negative values
        return np.maximum(out, 0.0)
    raise TypeError(f"unknown semimetric {rho!r}")


def semimetric_eval(rho: Semimetric, z, z2) -> float:
    """Evaluate ``rho(z, z2)`` for two points of equal dimension."""
    return float(semimetric_matrix(rho, _as_point(z), _as_point(z2))[0, 0])


def negative_type_form(rho: Semimetric, points, weights) -> float:
    """Quadratic form ``sum_ij w_i w_j rho(z_i, z_j)`` for zero-sum weights.

    Nonpositive (up to rounding) whenever ``rho`` has negative type.
    """
    points = _as_2d(points)
    w = np.asarray(weights, dtype=float).ravel()
    if points.shape[0] < 2:
        raise ValueError("need at least two points")
    if w.shape[0] != points.shape[0]:
        raise ValueError("one weight per point is required")
    if abs(w.sum()) > 1e-12:
        raise ValueError(f"weights must sum to zero (sum = {w.sum():.3e})")
    return float(w @ semimetric_matrix(rho, points) @ w)


def _center_point(k: DistanceInduced, d: int) -> np.ndarray:
    if k.center is None:
        return np.zeros((1, d))
    c = np.asarray(k.center, dtype=float).reshape(1, -1)
    if c.shape[1] != d:
        raise ValueError(f"dimension mismatch: center has {c.shape[1]} coordinates, data has {d}")
    return c


def kernel_diag(k: Kernel, a) -> np.ndarray:
    """Diagonal ``k(a_i, a_i)`` without forming the full Gram matrix."""
    a = _as_2d(a)
    if isinstance(k, DistanceInduced):
        z0 = _center_point(k, a.shape[1])
        return 2.0 * k.scale * semimetric_matrix(k.rho, a, z0)[:, 0]
    if isinstance(k, Gaussian):
        return np.ones(a.shape[0])
    if isinstance(k, Product):
        _check_split(k, a)
        return kernel_diag(k.kx, a[:, : k.split]) * kernel_diag(k.ky, a[:, k.split :])
    raise TypeError(f"unknown kernel {k!r}")


def _check_split(k: Product, a: np.ndarray) -> None:
    if not 0 < k.split < a.shape[1]:
        raise ValueError(f"split column {k.split} invalid for {a.shape[1]}-column data")


def _gram(k: Kernel, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if isinstance(k, DistanceInduced):
        z0 = _center_point(k, a.shape[1])
        ra = semimetric_matrix(k.rho, a, z0)
        rb = ra if b is a else semimetric_matrix(k.rho, b, z0)
        return k.scale * (ra + rb.T - semimetric_matrix(k.rho, a, b))
    if isinstance(k, Gaussian):
        return np.exp(-k.sigma * cdist(a, b, "sqeuclidean"))
    if isinstance(k, Product):
        _check_split(k, a)
        _check_split(k, b)
        s = k.split
        return _gram(k.kx, a[:, :s], b[:, :s]) * _gram(k.ky, a[:, s:], b[:, s:])
    raise TypeError(f"unknown kernel {k!r}")


def gram(k: Kernel, a, b=None) -> np.ndarray:
    """Gram matrix ``G[i, j] = k(a_i, b_j)``; ``b`` defaults to ``a``.

    The returned array is read-only.
    """
    a = _as_2d(a)
    b = a if b is None else _as_2d(b)
    _check_dims(a, b)
    _check_size(a, b)
    G = _gram(k, a, b)
    G.flags.writeable = False
    return G


def kernel_eval(k: Kernel, z, z2) -> float:
    """Evaluate ``k(z, z2)`` for two points."""
    a, b = _as_point(z), _as_point(z2)
    _check_dims(a, b)
    return float(_gram(k, a, b)[0, 0])


def median_heuristic_sigma(pooled) -> float:
    """Gaussian width from the median pairwise distance.

    With ``nu`` the median of the nonzero pairwise Euclidean distances,
    returns ``sigma = 1 / nu**2`` for the kernel ``exp(-sigma ||z - z'||**2)``.
    """
    pooled = _as_2d(pooled)
    if pooled.shape[0] < 2:
        raise ValueError("median heuristic needs at least two points")
    dist = pdist(pooled)
    dist = dist[dist > 0]
    if dist.size == 0:
        raise ValueError("median heuristic undefined: all points are identical")
    nu = float(np.median(dist))
    return 1.0 / nu**2


def center_gram(G) -> np.ndarray:
    """Double-center a square matrix: ``H G H`` with ``H = I - 11'/m``."""
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("center_gram needs a square matrix")
    row = G.mean(axis=1, keepdims=True)
    col = G.mean(axis=0, keepdims=True)
    out = G - row - col + G.mean()
    # a second pass removes the O(eps * |G|) residue left by the first
    out -= out.mean(axis=1, keepdims=True)
    out -= out.mean(axis=0, keepdims=True)
    out.flags.writeable = False
    return out


def distance_product_factors(rho_x: Semimetric, rho_y: Semimetric, x0=None, y0=None):
    """Unscaled distance-kernel factors whose product kernel gives distance covariance.

    Returns ``(kx, ky)`` with ``kx(x, x') = rho_x(x, x0) + rho_x(x', x0) - rho_x(x, x')``
    and likewise for ``ky``. HSIC computed with these factors equals the
    distance covariance V-statistic built from ``rho_x`` and ``rho_y``.
    """
    return (
        DistanceInduced(rho_x, center=x0, scale=1.0),
        DistanceInduced(rho_y, center=y0, scale=1.0),
    )
