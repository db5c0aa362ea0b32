"""Null distributions for the degenerate V-statistics and the resulting tests.

Three constructions are available:

``spectral``
    Eigenvalues of centered Gram matrices estimate the weights of the
    limiting weighted chi-square sum; the null is sampled by Monte Carlo.
``resample``
    Permutation of the pooled sample (two-sample) or of the ``y`` rows
    against fixed ``x`` rows (independence).
``quadratic_bound``
    Distribution-free bound ``P(Q >= Phi^-1(1 - alpha/2)**2) <= alpha`` for a
    Gaussian quadratic form with unit mean, applied after normalizing the
    statistic by an estimate of its null mean.

Randomness is drawn from substreams derived from ``(seed, chunk index)``,
so every draw list is a deterministic function of the seed regardless of
how the work is scheduled.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.linalg
from scipy.stats import norm

from .kernels import Kernel, center_gram, gram
from .statistics import PairedSample, as_sample

__all__ = [
    "NumericalError",
    "TestConfig",
    "NullDistribution",
    "TestOutcome",
    "METHODS",
    "spectral_null_two_sample",
    "spectral_null_hsic",
    "resample_null_two_sample",
    "resample_null_hsic",
    "quadratic_bound_threshold",
    "p_value",
    "run_two_sample_test",
    "run_independence_test",
]

METHODS = ("spectral", "resample", "quadratic_bound")

#: Largest alpha for which the quadratic-form bound holds.
QUADRATIC_BOUND_MAX_ALPHA = 0.215

# draws per RNG substream
_CHUNK = 1024

Seed = Union[int, np.random.SeedSequence, None]


class NumericalError(RuntimeError):
    """Raised when an eigendecomposition or other numerical step fails."""


@dataclass(frozen=True)
class TestConfig:
    """Knobs shared by all null constructions.

    ``max_terms`` caps the number of weights in the spectral sum; ``None``
    means twice the per-sample size.
    """

    __test__ = False  # not a pytest class

    null_draws: int = 10_000
    permutations: int = 999
    seed: int = 0
    eig_rel_tol: float = 1e-10
    max_terms: Optional[int] = None

    def __post_init__(self):
        if self.null_draws < 1 or self.permutations < 1:
            raise ValueError("null_draws and permutations must be positive")


@dataclass(frozen=True)
class NullDistribution:
    """A constructed null.

    For ``kind == "spectral"``, ``eigenvalues`` holds the retained estimated
    operator eigenvalues (for independence tests, those of the ``x`` side;
    ``eigenvalues_y`` holds the ``y`` side) and ``draws`` the Monte Carlo
    sample of the weighted chi-square sum. For ``kind == "resampled"`` only
    ``draws`` is set. For ``kind == "quadratic_bound"`` only ``threshold``
    and ``normalizer``.
    """

    kind: str
    draws: Optional[np.ndarray] = None
    eigenvalues: Optional[np.ndarray] = None
    eigenvalues_y: Optional[np.ndarray] = None
    scale_rule: str = ""
    tail_mass: float = 0.0
    threshold: Optional[float] = None
    normalizer: Optional[float] = None

    @property
    def size(self) -> int:
        return 0 if self.draws is None else int(self.draws.size)


@dataclass
class TestOutcome:
    """Result of a single test.

    ``statistic`` is on the scale of the null (``m/2 * MMD^2`` or
    ``m * HSIC`` for the spectral and bound nulls, the raw V-statistic for
    the permutation null); ``raw_statistic`` is always the raw V-statistic.
    """

    __test__ = False

    statistic: float
    p_value: Optional[float]
    threshold: float
    reject: bool
    method: str
    alpha: float
    raw_statistic: float
    null_size: int
    seed: int
    null: NullDistribution = field(repr=False, compare=False, default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("null")
        return d


def _seed_sequence(seed: Seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(0 if seed is None else int(seed))


def _substream(ss: np.random.SeedSequence, *key: int) -> np.random.Generator:
    # derived without calling spawn(), which would mutate ss
    child = np.random.SeedSequence(entropy=ss.entropy, spawn_key=tuple(ss.spawn_key) + key)
    return np.random.default_rng(child)


def _chunks(total: int):
    for idx, start in enumerate(range(0, total, _CHUNK)):
        yield idx, min(_CHUNK, total - start)


def _centered_spectrum(G: np.ndarray, denom: float, rel_tol: float, cap: int) -> np.ndarray:
    Gc = center_gram(G)
    Gc = 0.5 * (Gc + Gc.T)
    try:
        ev = scipy.linalg.eigh(Gc, eigvals_only=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    ev = ev[::-1] / denom
    if ev.size == 0 or not ev[0] > 0:
        return np.zeros(0)
    ev = ev[ev >= rel_tol * ev[0]]
    return ev[:cap].copy()


def _weighted_chi2_draws(weights: np.ndarray, n_draws: int, seed: Seed, stream: int) -> np.ndarray:
    ss = _seed_sequence(seed)
    out = np.empty(n_draws)
    if weights.size == 0:
        out[:] = 0.0
        return out
    pos = 0
    for idx, size in _chunks(n_draws):
        rng = _substream(ss, stream, idx)
        N = rng.standard_normal((size, weights.size))
        out[pos : pos + size] = (N * N) @ weights
        pos += size
    return out


def spectral_null_two_sample(
    pooled_gram, m: int, n: int, config: TestConfig = TestConfig()
) -> NullDistribution:
    """Weighted chi-square null for ``(m/2) * MMD^2`` with equal sample sizes.

    ``pooled_gram`` is the Gram matrix of the concatenated sample
    ``[z; w]``. Operator eigenvalues are estimated as the eigenvalues of the
    centered pooled Gram matrix divided by ``m + n``.
    """
    G = np.asarray(pooled_gram, dtype=float)
    if G.shape != (m + n, m + n):
        raise ValueError(f"pooled Gram must be {(m + n, m + n)}, got {G.shape}")
    if m != n:
        raise ValueError(
            f"spectral null requires equal sample sizes (got m={m}, n={n}); use the resample method"
        )
    cap = config.max_terms or 2 * m
    lam = _centered_spectrum(G, m + n, config.eig_rel_tol, cap)
    draws = _weighted_chi2_draws(lam, config.null_draws, config.seed, 0)
    return NullDistribution("spectral", draws=draws, eigenvalues=lam, scale_rule="nu/(m+n)")


def spectral_null_hsic(kx_gram, ky_gram, m: int, config: TestConfig = TestConfig()) -> NullDistribution:
    """Weighted chi-square null for ``m * HSIC``.

    Per-side eigenvalues are ``eig(H K H) / m``. The double sum over pairs
    keeps the largest ``max_terms`` products; the remaining products enter
    through their mean (``tail_mass``), which is added to every draw.
    """
    Kx = np.asarray(kx_gram, dtype=float)
    Ky = np.asarray(ky_gram, dtype=float)
    if Kx.shape != (m, m) or Ky.shape != (m, m):
        raise ValueError(f"both Gram matrices must be {(m, m)}")
    cap = config.max_terms or 2 * m
    lam = _centered_spectrum(Kx, m, config.eig_rel_tol, m)
    eta = _centered_spectrum(Ky, m, config.eig_rel_tol, m)
    prod = np.outer(lam, eta).ravel()
    if prod.size > cap:
        part = np.argpartition(prod, prod.size - cap)
        keep = np.sort(prod[part[prod.size - cap :]])[::-1]
        tail = float(prod[part[: prod.size - cap]].sum())
    else:
        keep = np.sort(prod)[::-1]
        tail = 0.0
    draws = _weighted_chi2_draws(keep, config.null_draws, config.seed, 1) + tail
    return NullDistribution(
        "spectral",
        draws=draws,
        eigenvalues=lam,
        eigenvalues_y=eta,
        scale_rule="nu/m",
        tail_mass=tail,
    )


def _permutation_labels(N: int, m: int, rng: np.random.Generator, size: int) -> np.ndarray:
    # column b is the 0/1 indicator of the rows assigned to the pseudo-z sample
    A = np.zeros((N, size))
    for b in range(size):
        A[rng.permutation(N)[:m], b] = 1.0
    return A


def _pooled_mmd(K: np.ndarray, m: int) -> float:
    return float(K[:m, :m].mean() + K[m:, m:].mean() - 2.0 * K[:m, m:].mean())


def resample_null_two_sample(z, w, k: Kernel, B: int = 999, seed: Seed = 0) -> NullDistribution:
    """Permutation null of the raw ``MMD^2`` V-statistic.

    Each draw re-partitions the pooled rows, without replacement, into
    pseudo-samples of the original sizes.
    """
    z, w = as_sample(z), as_sample(w)
    if B < 1:
        raise ValueError("B must be at least 1")
    K = gram(k, np.vstack([z, w]))
    return _resample_pooled(K, z.shape[0], w.shape[0], B, seed)


def _resample_pooled(K: np.ndarray, m: int, n: int, B: int, seed: Seed) -> NullDistribution:
    ss = _seed_sequence(seed)
    draws = np.empty(B)
    pos = 0
    row = K.sum(axis=1)
    total = row.sum()
    for idx, size in _chunks(B):
        A = _permutation_labels(m + n, m, _substream(ss, 2, idx), size)
        zz = np.einsum("ib,ib->b", A, K @ A)
        zw = row @ A - zz
        ww = total - zz - 2.0 * zw
        draws[pos : pos + size] = zz / m**2 + ww / n**2 - 2.0 * zw / (m * n)
        pos += size
    return NullDistribution("resampled", draws=draws)


def resample_null_hsic(p: PairedSample, kx: Kernel, ky: Kernel, B: int = 999, seed: Seed = 0) -> NullDistribution:
    """Permutation null of the raw HSIC V-statistic (``y`` rows shuffled)."""
    if B < 1:
        raise ValueError("B must be at least 1")
    Kxc = center_gram(gram(kx, p.x))
    Kyc = center_gram(gram(ky, p.y))
    return _resample_hsic(Kxc, Kyc, B, seed)


def _resample_hsic(Kxc: np.ndarray, Kyc: np.ndarray, B: int, seed: Seed) -> NullDistribution:
    m = Kxc.shape[0]
    ss = _seed_sequence(seed)
    draws = np.empty(B)
    pos = 0
    for idx, size in _chunks(B):
        rng = _substream(ss, 3, idx)
        for _ in range(size):
            perm = rng.permutation(m)
            draws[pos] = (Kxc * Kyc[np.ix_(perm, perm)]).sum() / m**2
            pos += 1
    return NullDistribution("resampled", draws=draws)


def quadratic_bound_threshold(alpha: float, normalizer: float) -> float:
    """Rejection threshold ``normalizer * Phi^-1(1 - alpha/2)**2``.

    The bound is only valid for ``0 < alpha <= 0.215``.
    """
    if not (0.0 < alpha <= QUADRATIC_BOUND_MAX_ALPHA):
        raise ValueError(
            f"quadratic-form bound is valid only for 0 < alpha <= {QUADRATIC_BOUND_MAX_ALPHA}, got {alpha}"
        )
    if not normalizer > 0:
        raise ValueError(f"normalizer must be positive, got {normalizer}")
    return float(normalizer * norm.ppf(1.0 - alpha / 2.0) ** 2)


def p_value(null: NullDistribution, statistic: float) -> float:
    """Add-one Monte Carlo p-value ``(1 + #{draws >= t}) / (B + 1)``."""
    if null.draws is None:
        raise ValueError(f"no p-value is defined for a {null.kind} null")
    B = null.draws.size
    return float((1 + np.count_nonzero(null.draws >= statistic)) / (B + 1))


def _check_alpha(alpha: float, method: str) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if method == "quadratic_bound" and alpha > QUADRATIC_BOUND_MAX_ALPHA:
        raise ValueError(
            f"quadratic-form bound is valid only for 0 < alpha <= {QUADRATIC_BOUND_MAX_ALPHA}, got {alpha}"
        )


def _from_draws(stat, raw, null, alpha, method, config) -> TestOutcome:
    threshold = float(np.quantile(null.draws, 1.0 - alpha))
    return TestOutcome(
        statistic=float(stat),
        p_value=p_value(null, stat),
        threshold=threshold,
        reject=bool(stat > threshold),
        method=method,
        alpha=alpha,
        raw_statistic=float(raw),
        null_size=null.size,
        seed=config.seed,
        null=null,
    )


def _from_bound(stat, raw, normalizer, alpha, config) -> TestOutcome:
    if normalizer > 0:
        threshold = quadratic_bound_threshold(alpha, normalizer)
    else:
        # degenerate data: zero null mean, nothing can be rejected
        threshold = 0.0
    null = NullDistribution("quadratic_bound", threshold=threshold, normalizer=float(normalizer))
    return TestOutcome(
        statistic=float(stat),
        p_value=None,
        threshold=threshold,
        reject=bool(stat > threshold),
        method="quadratic_bound",
        alpha=alpha,
        raw_statistic=float(raw),
        null_size=0,
        seed=config.seed,
        null=null,
    )


def run_two_sample_test(
    z, w, kernel: Kernel, method: str = "spectral", alpha: float = 0.05, config: TestConfig = TestConfig()
) -> TestOutcome:
    """Test ``P = Q`` from samples ``z ~ P`` and ``w ~ Q`` using ``MMD^2``."""
    _check_alpha(alpha, method)
    z, w = as_sample(z), as_sample(w)
    if z.shape[1] != w.shape[1]:
        raise ValueError(f"dimension mismatch: {z.shape[1]} vs {w.shape[1]} columns")
    m, n = z.shape[0], w.shape[0]
    if method != "resample" and m != n:
        raise ValueError(
            f"the {method} null requires equal sample sizes (got m={m}, n={n}); use the resample method"
        )
    K = gram(kernel, np.vstack([z, w]))
    raw = _pooled_mmd(K, m)
    if method == "resample":
        null = _resample_pooled(K, m, n, config.permutations, config.seed)
        return _from_draws(raw, raw, null, alpha, method, config)
    stat = 0.5 * m * raw
    if method == "spectral":
        null = spectral_null_two_sample(K, m, n, config)
        return _from_draws(stat, raw, null, alpha, method, config)
    # E[sum lambda_i N_i^2] = sum lambda_i = Tr(HKH) / (m + n)
    normalizer = float(np.trace(center_gram(K))) / (m + n)
    return _from_bound(stat, raw, normalizer, alpha, config)


def run_independence_test(
    p: PairedSample,
    kx: Kernel,
    ky: Kernel,
    method: str = "spectral",
    alpha: float = 0.05,
    config: TestConfig = TestConfig(),
) -> TestOutcome:
    """Test independence of ``x`` and ``y`` using HSIC."""
    _check_alpha(alpha, method)
    m = p.m
    Kx = gram(kx, p.x)
    Ky = gram(ky, p.y)
    Kxc, Kyc = center_gram(Kx), center_gram(Ky)
    raw = float((Kxc * Kyc).sum() / m**2)
    if method == "resample":
        null = _resample_hsic(Kxc, Kyc, config.permutations, config.seed)
        return _from_draws(raw, raw, null, alpha, method, config)
    stat = m * raw
    if method == "spectral":
        null = spectral_null_hsic(Kx, Ky, m, config)
        return _from_draws(stat, raw, null, alpha, method, config)
    normalizer = float(np.trace(Kxc)) * float(np.trace(Kyc)) / m**2
    return _from_bound(stat, raw, normalizer, alpha, config)

