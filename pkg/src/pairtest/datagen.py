"""Seeded generators for the synthetic benchmarks.

Two-sample benchmarks return ``(z, w)`` arrays of equal size ``m``;
independence benchmarks return a :class:`~pairtest.statistics.PairedSample`.
Every generator is a pure function of its parameters and seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .statistics import PairedSample

__all__ = [
    "GaussMeanShift",
    "GaussVarShift",
    "SinusoidPerturb",
    "IcaRotation",
    "SinDependence",
    "BENCHMARKS",
    "ICA_SOURCES",
    "gen_two_sample",
    "gen_ica_rotation",
    "gen_sin_dependence",
    "sample_sinusoid_perturbed",
    "sample_sin_dependence",
    "sinusoid_perturbed_pdf",
    "random_orthogonal",
    "generate",
]

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GaussMeanShift:
    """``N(0, I_d)`` against ``N(delta * e_1, I_d)``."""

    d: int = 1
    delta: float = 0.0
    m: int = 200

    def __post_init__(self):
        _check_common(self.d, self.m)


@dataclass(frozen=True)
class GaussVarShift:
    """``N(0, I_d)`` against ``N(0, diag(var_ratio, 1, ..., 1))``."""

    d: int = 1
    var_ratio: float = 1.0
    m: int = 200

    def __post_init__(self):
        _check_common(self.d, self.m)
        if not self.var_ratio > 0:
            raise ValueError("var_ratio must be positive")


@dataclass(frozen=True)
class SinusoidPerturb:
    """``N(0, 1)`` against the density ``phi(x) * (1 + sin(freq * x))``."""

    freq: float = 1.0
    m: int = 200

    def __post_init__(self):
        _check_common(1, self.m)
        if not np.isfinite(self.freq) or self.freq < 0:
            raise ValueError("freq must be a nonnegative number")


@dataclass(frozen=True)
class IcaRotation:
    """Rotated independent sources padded with noise; see :func:`gen_ica_rotation`."""

    d: int = 1
    theta: float = 0.0
    m: int = 200
    source: str = "mog"

    def __post_init__(self):
        _check_common(self.d, self.m)
        if not 0.0 <= self.theta <= np.pi / 4 + 1e-12:
            raise ValueError(f"theta must lie in [0, pi/4], got {self.theta}")
        if self.source not in ICA_SOURCES:
            raise ValueError(f"unknown source density {self.source!r}; choose from {sorted(ICA_SOURCES)}")


@dataclass(frozen=True)
class SinDependence:
    """Density proportional to ``1 + sin(ell x) sin(ell y)`` on ``[-pi, pi]^2``."""

    ell: int = 1
    m: int = 200

    def __post_init__(self):
        _check_common(1, self.m)
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError("ell must be a positive integer")


def _check_common(d, m):
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    if int(m) != m or m < 1:
        raise ValueError(f"sample size must be a positive integer, got {m}")


BENCHMARKS = {
    "gauss_mean_shift": GaussMeanShift,
    "gauss_var_shift": GaussVarShift,
    "sinusoid": SinusoidPerturb,
    "ica_rotation": IcaRotation,
    "sin_dependence": SinDependence,
}

TWO_SAMPLE = (GaussMeanShift, GaussVarShift, SinusoidPerturb)


def sinusoid_perturbed_pdf(x, freq: float) -> np.ndarray:
    """Density ``phi(x) (1 + sin(freq x))``; already normalized since sine is odd."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi) * (1.0 + np.sin(freq * x))


def sample_sinusoid_perturbed(freq: float, m: int, rng: np.random.Generator):
    """Rejection sampler with proposal ``N(0, 1)`` and envelope ``2 phi``.

    Returns the accepted points and the number of proposals used.
    """
    out = np.empty(0)
    proposed = 0
    while out.size < m:
        batch = max(2 * (m - out.size), 64)
        x = rng.standard_normal(batch)
        u = rng.random(batch)
        proposed += batch
        out = np.concatenate([out, x[2.0 * u <= 1.0 + np.sin(freq * x)]])
    return out[:m], proposed


def gen_two_sample(spec, seed: SeedLike = 0):
    """Draw ``(z, w)`` for a two-sample benchmark, each of shape ``(m, d)``."""
    rng = _rng(seed)
    if isinstance(spec, GaussMeanShift):
        z = rng.standard_normal((spec.m, spec.d))
        w = rng.standard_normal((spec.m, spec.d))
        w[:, 0] += spec.delta
        return z, w
    if isinstance(spec, GaussVarShift):
        z = rng.standard_normal((spec.m, spec.d))
        w = rng.standard_normal((spec.m, spec.d))
        w[:, 0] *= np.sqrt(spec.var_ratio)
        return z, w
    if isinstance(spec, SinusoidPerturb):
        z = rng.standard_normal((spec.m, 1))
        w, _ = sample_sinusoid_perturbed(spec.freq, spec.m, rng)
        return z, w.reshape(-1, 1)
    raise TypeError(f"{type(spec).__name__} is not a two-sample benchmark")


def random_orthogonal(d: int, seed: SeedLike = 0) -> np.ndarray:
    """Haar-distributed orthogonal ``d x d`` matrix (QR with sign correction)."""
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    rng = _rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _mog(rng, size):
    # symmetric two-component mixture, unit variance
    mu, sd = 0.95, np.sqrt(1 - 0.95**2)
    return rng.choice([-mu, mu], size=size) + sd * rng.standard_normal(size)


def _uniform(rng, size):
    return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)


def _laplace(rng, size):
    return rng.laplace(0.0, 1.0 / np.sqrt(2.0), size)


#: Zero-mean, unit-variance source densities for the rotation benchmark.
ICA_SOURCES = {"mog": _mog, "uniform": _uniform, "laplace": _laplace}


def gen_ica_rotation(d: int, theta: float, m: int, seed: SeedLike = 0, source: str = "mog") -> PairedSample:
    """Dependent but uncorrelated ``(X, Y)`` built by rotating independent sources.

    Two independent sources are rotated by ``theta`` in the plane, each
    coordinate is padded with ``d - 1`` standard normal dimensions, and each
    side is multiplied by its own random orthogonal matrix.
    """
    spec = IcaRotation(d, theta, m, source)
    rng = _rng(seed)
    draw = ICA_SOURCES[spec.source]
    s = np.column_stack([draw(rng, m), draw(rng, m)])
    c, si = np.cos(theta), np.sin(theta)
    rot = s @ np.array([[c, si], [-si, c]])
    x = np.column_stack([rot[:, 0], rng.standard_normal((m, d - 1))])
    y = np.column_stack([rot[:, 1], rng.standard_normal((m, d - 1))])
    x = x @ random_orthogonal(d, rng).T
    y = y @ random_orthogonal(d, rng).T
    return PairedSample(x, y)


def sample_sin_dependence(ell: int, m: int, rng: np.random.Generator):
    """Rejection sampler with uniform proposal on the square and envelope 2.

    Returns an ``(m, 2)`` array and the number of proposals used.
    """
    out = np.empty((0, 2))
    proposed = 0
    while out.shape[0] < m:
        batch = max(2 * (m - out.shape[0]), 64)
        xy = rng.uniform(-np.pi, np.pi, (batch, 2))
        u = rng.random(batch)
        proposed += batch
        accept = 2.0 * u <= 1.0 + np.sin(ell * xy[:, 0]) * np.sin(ell * xy[:, 1])
        out = np.vstack([out, xy[accept]])
    return out[:m], proposed


def gen_sin_dependence(ell: int, m: int, seed: SeedLike = 0) -> PairedSample:
    """Pairs from the density ``(1 + sin(ell x) sin(ell y)) / (4 pi^2)``."""
    SinDependence(ell, m)
    xy, _ = sample_sin_dependence(int(ell), m, _rng(seed))
    return PairedSample(xy[:, :1], xy[:, 1:])


def generate(spec, seed: SeedLike = 0):
    """Dispatch on the benchmark type."""
    if isinstance(spec, TWO_SAMPLE):
        return gen_two_sample(spec, seed)
    if isinstance(spec, IcaRotation):
        return gen_ica_rotation(spec.d, spec.theta, spec.m, seed, spec.source)
    if isinstance(spec, SinDependence):
        return gen_sin_dependence(spec.ell, spec.m, seed)
    raise TypeError(f"unknown benchmark {spec!r}")
