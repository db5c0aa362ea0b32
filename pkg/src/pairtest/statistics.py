"""Empirical V-statistics for homogeneity and independence.

All estimators keep the diagonal terms (biased V-statistics). Energy
distance and distance covariance are computed from semimetric matrices;
MMD and HSIC from Gram matrices. The two routes are deliberately kept
separate so that each can be used to check the other.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Kernel, Semimetric, center_gram, gram, semimetric_matrix

__all__ = [
    "as_sample",
    "PairedSample",
    "energy_distance_v",
    "mmd_v",
    "dcov_v",
    "hsic_v",
    "dcorr",
]


def as_sample(data) -> np.ndarray:
    """Validate and return ``data`` as an ``(m, d)`` float array.

    1-D input is read as ``m`` scalar observations. NaN and infinite
    entries are rejected.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"a sample must be 1-D or 2-D, got {arr.ndim} dimensions")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"a sample needs at least one row and one column, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains NaN or infinite entries")
    return arr


@dataclass(frozen=True)
class PairedSample:
    """Row-aligned observations ``(x_i, y_i)`` of a joint distribution."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = as_sample(self.x), as_sample(self.y)
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_joint(cls, data, split: int) -> "PairedSample":
        """Split a joint ``(m, p + q)`` array at column ``split``."""
        data = as_sample(data)
        if not 0 < split < data.shape[1]:
            raise ValueError(f"split column {split} must lie strictly inside 1..{data.shape[1] - 1}")
        return cls(data[:, :split], data[:, split:])

    @property
    def m(self) -> int:
        return self.x.shape[0]

    def joint(self) -> np.ndarray:
        return np.hstack([self.x, self.y])


def _pair(z, w):
    z, w = as_sample(z), as_sample(w)
    if z.shape[1] != w.shape[1]:
        raise ValueError(f"dimension mismatch: {z.shape[1]} vs {w.shape[1]} columns")
    return z, w


def energy_distance_v(z, w, rho: Semimetric) -> float:
    """``2 mean rho(z_i, w_j) - mean rho(z_i, z_j) - mean rho(w_i, w_j)``."""
    z, w = _pair(z, w)
    return float(
        2.0 * semimetric_matrix(rho, z, w).mean()
        - semimetric_matrix(rho, z).mean()
        - semimetric_matrix(rho, w).mean()
    )


def mmd_v(z, w, k: Kernel) -> float:
    """Biased squared MMD between the empirical measures of ``z`` and ``w``."""
    z, w = _pair(z, w)
    return float(gram(k, z).mean() + gram(k, w).mean() - 2.0 * gram(k, z, w).mean())


def dcov_v(p: PairedSample, rho_x: Semimetric, rho_y: Semimetric) -> float:
    """Squared distance covariance V-statistic from raw distance matrices."""
    a = semimetric_matrix(rho_x, p.x)
    b = semimetric_matrix(rho_y, p.y)
    return float(
        (a * b).mean()
        + a.mean() * b.mean()
        - 2.0 * (a.mean(axis=1) * b.mean(axis=1)).mean()
    )


def hsic_v(p: PairedSample, kx: Kernel, ky: Kernel) -> float:
    """``Tr(Kx H Ky H) / m**2``."""
    kxc = center_gram(gram(kx, p.x))
    kyc = center_gram(gram(ky, p.y))
    return float((kxc * kyc).sum() / p.m**2)


def dcorr(p: PairedSample, rho_x: Semimetric, rho_y: Semimetric) -> float:
    """Squared distance correlation, 0 when either distance variance vanishes."""
    vxy = dcov_v(p, rho_x, rho_y)
    vxx = dcov_v(PairedSample(p.x, p.x), rho_x, rho_x)
    vyy = dcov_v(PairedSample(p.y, p.y), rho_y, rho_y)
    denom = vxx * vyy
    if not denom > 0:
        return 0.0
    return float(vxy / np.sqrt(denom))
