"""Power experiments over benchmark grids.

An experiment fixes a benchmark, a parameter to sweep, a list of kernel
descriptors and a test method. For each grid value and each trial a fresh
dataset is generated, every kernel is tested on that same dataset, and the
rejection rate per ``(value, kernel)`` cell is written to CSV.

Seeds are derived from ``(master seed, grid index, trial index)``, so any
row of the output can be reproduced in isolation and runs with a different
number of worker threads give identical files.
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import datagen
from .kernels import DistanceInduced, EuclideanPower, Gaussian, median_heuristic_sigma
from .nulls import METHODS, QUADRATIC_BOUND_MAX_ALPHA, TestConfig, run_independence_test, run_two_sample_test
from .statistics import PairedSample

__all__ = [
    "ExperimentConfig",
    "PowerRow",
    "POWER_COLUMNS",
    "parse_kernel",
    "resolve_kernel",
    "run_power_experiment",
    "load_power_csv",
    "worker_count",
]

POWER_COLUMNS = [
    "benchmark",
    "param",
    "value",
    "kernel",
    "method",
    "alpha",
    "m",
    "trials",
    "rejections",
    "rejection_rate",
    "mean_runtime_ms",
]

_RESUME_PREFIX = "# incomplete; resume from cell "


@dataclass
class ExperimentConfig:
    """Parameters of a power experiment (JSON-serializable)."""

    benchmark: str
    param: str
    grid: list
    kernels: list = field(default_factory=lambda: ["dist:q=1"])
    fixed: dict = field(default_factory=dict)
    method: str = "spectral"
    alpha: float = 0.05
    trials: int = 200
    m: int = 200
    seed: int = 0
    null_draws: int = 10_000
    permutations: int = 999
    output: Optional[str] = None
    timing: bool = False

    def __post_init__(self):
        if self.benchmark not in datagen.BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}; choose from {sorted(datagen.BENCHMARKS)}")
        if not self.grid:
            raise ValueError("grid must be non-empty")
        if not self.kernels:
            raise ValueError("at least one kernel is required")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.method == "quadratic_bound" and self.alpha > QUADRATIC_BOUND_MAX_ALPHA:
            raise ValueError(f"quadratic-form bound is valid only for 0 < alpha <= {QUADRATIC_BOUND_MAX_ALPHA}")
        for desc in self.kernels:
            parse_kernel(desc)
        # fail early on bad benchmark parameters
        self.spec_for(self.grid[0])

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def spec_for(self, value):
        params = dict(self.fixed)
        params[self.param] = value
        params.setdefault("m", self.m)
        return datagen.BENCHMARKS[self.benchmark](**params)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


@dataclass
class PowerRow:
    benchmark: str
    param: str
    value: float
    kernel: str
    method: str
    alpha: float
    m: int
    trials: int
    rejections: int
    rejection_rate: float
    mean_runtime_ms: Optional[float] = None

    def as_csv(self) -> list:
        out = []
        for name in POWER_COLUMNS:
            v = getattr(self, name)
            out.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
        return out


def parse_kernel(desc: str) -> dict:
    """Parse a kernel descriptor.

    ``"dist:q=0.5"`` is the distance kernel of ``||z - z'||**q`` centered at
    the origin; ``"gauss:median"`` a Gaussian kernel with median-heuristic
    width; ``"gauss:sigma=2"`` a Gaussian kernel with fixed ``sigma``.
    """
    kind, _, arg = desc.partition(":")
    if kind == "dist":
        q = 1.0
        if arg:
            key, _, val = arg.partition("=")
            if key != "q":
                raise ValueError(f"bad kernel descriptor {desc!r}")
            q = float(val)
        EuclideanPower(q)
        return {"kind": "dist", "q": q}
    if kind == "gauss":
        if arg in ("", "median"):
            return {"kind": "gauss", "sigma": None}
        key, _, val = arg.partition("=")
        if key != "sigma":
            raise ValueError(f"bad kernel descriptor {desc!r}")
        Gaussian(float(val))
        return {"kind": "gauss", "sigma": float(val)}
    raise ValueError(f"unknown kernel kind in {desc!r}; use 'dist' or 'gauss'")


def resolve_kernel(desc: dict, data: np.ndarray, center=None):
    """Turn a parsed descriptor into a kernel, fitting data-dependent widths on ``data``."""
    if desc["kind"] == "dist":
        return DistanceInduced(EuclideanPower(desc["q"]), center=center)
    sigma = desc["sigma"]
    if sigma is None:
        sigma = median_heuristic_sigma(data)
    return Gaussian(sigma)


def worker_count() -> int:
    """Thread count from ``PAIRTEST_THREADS`` (default 1)."""
    raw = os.environ.get("PAIRTEST_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _trial(config: ExperimentConfig, spec, kernels, grid_index: int, trial: int):
    ss = np.random.SeedSequence([config.seed, grid_index, trial])
    data_ss, test_ss = ss.spawn(2)
    test_seed = int(test_ss.generate_state(1)[0])
    tcfg = TestConfig(null_draws=config.null_draws, permutations=config.permutations, seed=test_seed)
    data = datagen.generate(spec, np.random.default_rng(data_ss))
    results = []
    for desc in kernels:
        t0 = time.perf_counter()
        if isinstance(data, PairedSample):
            kx = resolve_kernel(desc, data.x)
            ky = resolve_kernel(desc, data.y)
            outcome = run_independence_test(data, kx, ky, config.method, config.alpha, tcfg)
        else:
            z, w = data
            k = resolve_kernel(desc, np.vstack([z, w]))
            outcome = run_two_sample_test(z, w, k, config.method, config.alpha, tcfg)
        results.append((outcome.reject, (time.perf_counter() - t0) * 1000.0))
    return results


def _completed_cells(path: Path) -> list:
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != POWER_COLUMNS:
        raise ValueError(f"{path} is not a power CSV written by this tool")
    for row in reader:
        rows.append(row)
    return rows


def run_power_experiment(config: ExperimentConfig, output=None, workers: Optional[int] = None, resume: bool = False):
    """Run every grid cell and return the list of :class:`PowerRow`.

    Rows are appended to ``output`` (or ``config.output``) as each grid
    value finishes. If a cell fails, a resume marker is written before the
    exception propagates; ``resume=True`` skips the grid values already
    present in the file.
    """
    output = output or config.output
    workers = workers or worker_count()
    kernels = [parse_kernel(k) for k in config.kernels]
    n_k = len(kernels)

    done_rows = []
    if resume and output and Path(output).exists():
        done_rows = _completed_cells(Path(output))
    start = len(done_rows) // n_k

    fh = None
    writer = None
    if output:
        fh = open(output, "w", newline="", encoding="utf-8")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(POWER_COLUMNS)
        for row in done_rows[: start * n_k]:
            writer.writerow(row)
        fh.flush()

    rows = [_row_from_csv(r) for r in done_rows[: start * n_k]]
    try:
        for gi in range(start, len(config.grid)):
            value = config.grid[gi]
            spec = config.spec_for(value)
            args = [(config, spec, kernels, gi, t) for t in range(config.trials)]
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    per_trial = list(pool.map(lambda a: _trial(*a), args))
            else:
                per_trial = [_trial(*a) for a in args]
            for ki, desc in enumerate(config.kernels):
                rej = sum(1 for res in per_trial if res[ki][0])
                runtime = float(np.mean([res[ki][1] for res in per_trial])) if config.timing else None
                row = PowerRow(
                    benchmark=config.benchmark,
                    param=config.param,
                    value=float(value),
                    kernel=desc,
                    method=config.method,
                    alpha=float(config.alpha),
                    m=int(spec.m),
                    trials=config.trials,
                    rejections=rej,
                    rejection_rate=rej / config.trials,
                    mean_runtime_ms=runtime,
                )
                rows.append(row)
                if writer:
                    writer.writerow(row.as_csv())
            if fh:
                fh.flush()
    except BaseException:
        if fh:
            fh.write(f"{_RESUME_PREFIX}{len(rows) // n_k}\n")
            fh.flush()
        raise
    finally:
        if fh:
            fh.close()
    return rows


def _row_from_csv(row: list) -> PowerRow:
    d = dict(zip(POWER_COLUMNS, row))
    return PowerRow(
        benchmark=d["benchmark"],
        param=d["param"],
        value=float(d["value"]),
        kernel=d["kernel"],
        method=d["method"],
        alpha=float(d["alpha"]),
        m=int(d["m"]),
        trials=int(d["trials"]),
        rejections=int(d["rejections"]),
        rejection_rate=float(d["rejection_rate"]),
        mean_runtime_ms=float(d["mean_runtime_ms"]) if d["mean_runtime_ms"] else None,
    )


def load_power_csv(path) -> list:
    """Read a power CSV back into :class:`PowerRow` objects (comment lines skipped)."""
    return [_row_from_csv(r) for r in _completed_cells(Path(path))]
