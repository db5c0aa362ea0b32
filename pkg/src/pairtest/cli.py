"""Command-line interface: ``pairtest {two-sample,independence,power,gen}``.

Exit codes: 0 success (whatever the test decision), 2 usage error,
3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import datagen
from .harness import ExperimentConfig, resolve_kernel, run_power_experiment
from .io import DataError, load_csv, save_csv
from .nulls import QUADRATIC_BOUND_MAX_ALPHA, NumericalError, TestConfig, run_independence_test, run_two_sample_test
from .statistics import PairedSample

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_NULLS = {"spectral": "spectral", "resample": "resample", "quadratic-bound": "quadratic_bound"}


def _sigma(text):
    if text == "median":
        return None
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'median', got {text!r}")
    if not val > 0:
        raise argparse.ArgumentTypeError("sigma must be positive")
    return val


def _exponent(text):
    try:
        q = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid exponent {text!r}")
    if not 0 < q <= 2:
        raise argparse.ArgumentTypeError(f"exponent must lie in (0, 2], got {q}")
    return q


def _add_test_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=["dist", "gauss"], default="dist")
    p.add_argument("--null", choices=sorted(_NULLS), default="spectral")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=10_000, help="Monte Carlo draws for the spectral null")
    p.add_argument("--permutations", type=int, default=999)
    p.add_argument("--max-terms", type=int, default=None, help="cap on weights in the spectral sum")
    p.add_argument("--center-index", type=int, default=None, help="center distance kernels at this data row")
    p.add_argument("--out", help="also write the JSON report to this file")
    p.add_argument("--timing", action="store_true", help="include elapsed_ms in the written report")
    p.add_argument("--config", help="JSON file of flag defaults; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairtest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ts = sub.add_parser("two-sample", help="test whether two samples share a distribution")
    ts.add_argument("--a", required=True, help="CSV of the first sample")
    ts.add_argument("--b", required=True, help="CSV of the second sample")
    ts.add_argument("--q", type=_exponent, default=1.0, help="distance exponent")
    ts.add_argument("--sigma", type=_sigma, default=None, help="Gaussian sigma or 'median'")
    _add_test_flags(ts)

    ind = sub.add_parser("independence", help="test independence of the x and y column blocks")
    ind.add_argument("--data", required=True, help="CSV with x columns followed by y columns")
    ind.add_argument("--split-col", type=int, required=True, help="number of x columns")
    ind.add_argument("--qx", type=_exponent, default=1.0)
    ind.add_argument("--qy", type=_exponent, default=1.0)
    ind.add_argument("--sigma-x", type=_sigma, default=None)
    ind.add_argument("--sigma-y", type=_sigma, default=None)
    _add_test_flags(ind)

    pw = sub.add_parser("power", help="run a power experiment from a JSON config")
    pw.add_argument("--config", required=True)
    pw.add_argument("--out", help="output CSV (overrides config.output)")
    pw.add_argument("--trials", type=int)
    pw.add_argument("--seed", type=int)
    pw.add_argument("--method", choices=sorted(_NULLS))
    pw.add_argument("--alpha", type=float)
    pw.add_argument("--resume", action="store_true", help="skip grid values already in the output")

    gen = sub.add_parser("gen", help="write benchmark data to CSV")
    gen.add_argument("--benchmark", choices=sorted(datagen.BENCHMARKS), required=True)
    gen.add_argument("--m", type=int, default=200)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--d", type=int)
    gen.add_argument("--delta", type=float)
    gen.add_argument("--var-ratio", type=float)
    gen.add_argument("--freq", type=float)
    gen.add_argument("--theta", type=float)
    gen.add_argument("--ell", type=int)
    gen.add_argument("--source", choices=sorted(datagen.ICA_SOURCES))
    gen.add_argument("--out", required=True, help="output prefix")
    return parser


def _apply_config(parser, argv):
    """Load ``--config`` into subcommand defaults so explicit flags still win."""
    if not argv or argv[0] not in ("two-sample", "independence"):
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not known.config:
        return
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config must be a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[argv[0]]
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - {a.dest for a in subparser._actions}
    if unknown:
        parser.error(f"unknown config keys: {sorted(unknown)}")
    for action in subparser._actions:
        if action.dest not in cfg:
            continue
        value = cfg[action.dest]
        # config values bypass type= conversion
        if action.type is not None and value is not None:
            try:
                value = action.type(str(value))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                parser.error(f"config key {action.dest}: {exc}")
        if action.choices is not None and value not in action.choices:
            parser.error(f"config key {action.dest}: {value!r} not in {list(action.choices)}")
        cfg[action.dest] = value
        action.required = False
    subparser.set_defaults(**cfg)


def _validate_test_args(parser, args):
    method = _NULLS[args.null]
    if not 0 < args.alpha < 1:
        parser.error(f"--alpha must lie in (0, 1), got {args.alpha}")
    if method == "quadratic_bound" and args.alpha > QUADRATIC_BOUND_MAX_ALPHA:
        parser.error(
            f"--null quadratic-bound is valid only for 0 < alpha <= {QUADRATIC_BOUND_MAX_ALPHA} (got {args.alpha})"
        )
    if args.draws < 1 or args.permutations < 1:
        parser.error("--draws and --permutations must be positive")
    return method


def _kernel_desc(kind, q, sigma):
    if kind == "dist":
        return {"kind": "dist", "q": q}
    return {"kind": "gauss", "sigma": sigma}


def _center(data, index, parser):
    if index is None:
        return None
    if not -data.shape[0] <= index < data.shape[0]:
        parser.error(f"--center-index {index} out of range for {data.shape[0]} rows")
    return tuple(data[index])


def _kernel_label(kind, q, sigma):
    if kind == "dist":
        return f"dist:q={q!r}"
    return "gauss:median" if sigma is None else f"gauss:sigma={sigma!r}"


def _emit(report: dict, args) -> None:
    print(json.dumps(report, indent=2))
    if args.out:
        written = dict(report)
        if not args.timing:
            written.pop("elapsed_ms")
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(written, indent=2))
            fh.write("\n")


def _report(outcome, kernel, elapsed, extra):
    d = outcome.to_dict()
    report = {
        "statistic": d["statistic"],
        "p_value": d["p_value"],
        "threshold": d["threshold"],
        "reject": d["reject"],
        "method": d["method"],
        "kernel": kernel,
        "seed": d["seed"],
        "elapsed_ms": round(elapsed * 1000.0, 3),
        "alpha": d["alpha"],
        "raw_statistic": d["raw_statistic"],
        "null_size": d["null_size"],
    }
    report.update(extra)
    return report


def _test_config(args):
    return TestConfig(
        null_draws=args.draws, permutations=args.permutations, seed=args.seed, max_terms=args.max_terms
    )


def cmd_two_sample(parser, args) -> int:
    method = _validate_test_args(parser, args)
    z, w = load_csv(args.a), load_csv(args.b)
    if z.shape[1] != w.shape[1]:
        raise DataError(f"column count differs: {args.a} has {z.shape[1]}, {args.b} has {w.shape[1]}")
    if method != "resample" and z.shape[0] != w.shape[0]:
        parser.error(f"--null {args.null} needs equal sample sizes ({z.shape[0]} vs {w.shape[0]}); use --null resample")
    pooled = np.vstack([z, w])
    kernel = resolve_kernel(
        _kernel_desc(args.kernel, args.q, args.sigma), pooled, _center(pooled, args.center_index, parser)
    )
    t0 = time.perf_counter()
    outcome = run_two_sample_test(z, w, kernel, method, args.alpha, _test_config(args))
    elapsed = time.perf_counter() - t0
    _emit(_report(outcome, _kernel_label(args.kernel, args.q, args.sigma), elapsed, {"m": z.shape[0], "n": w.shape[0]}), args)
    return EXIT_OK


def cmd_independence(parser, args) -> int:
    method = _validate_test_args(parser, args)
    data = load_csv(args.data)
    if not 0 < args.split_col < data.shape[1]:
        parser.error(f"--split-col must lie in 1..{data.shape[1] - 1} for {data.shape[1]}-column data")
    p = PairedSample.from_joint(data, args.split_col)
    kx = resolve_kernel(_kernel_desc(args.kernel, args.qx, args.sigma_x), p.x, _center(p.x, args.center_index, parser))
    ky = resolve_kernel(_kernel_desc(args.kernel, args.qy, args.sigma_y), p.y, _center(p.y, args.center_index, parser))
    t0 = time.perf_counter()
    outcome = run_independence_test(p, kx, ky, method, args.alpha, _test_config(args))
    elapsed = time.perf_counter() - t0
    label = f"{_kernel_label(args.kernel, args.qx, args.sigma_x)}|{_kernel_label(args.kernel, args.qy, args.sigma_y)}"
    _emit(_report(outcome, label, elapsed, {"m": p.m, "split_col": args.split_col}), args)
    return EXIT_OK


def cmd_power(parser, args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    for key in ("trials", "seed", "alpha"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    if args.method is not None:
        raw["method"] = _NULLS[args.method]
    elif raw.get("method") in _NULLS:
        raw["method"] = _NULLS[raw["method"]]
    if args.out:
        raw["output"] = args.out
    try:
        config = ExperimentConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        parser.error(f"invalid experiment config: {exc}")
    if not config.output:
        parser.error("no output path: pass --out or set 'output' in the config")
    rows = run_power_experiment(config, resume=args.resume)
    for row in rows:
        print(f"{row.param}={row.value!r:>10}  {row.kernel:<16} power={row.rejection_rate:.3f}")
    return EXIT_OK


def cmd_gen(parser, args) -> int:
    names = {
        "d": args.d,
        "delta": args.delta,
        "var_ratio": args.var_ratio,
        "freq": args.freq,
        "theta": args.theta,
        "ell": args.ell,
        "source": args.source,
    }
    cls = datagen.BENCHMARKS[args.benchmark]
    accepted = cls.__dataclass_fields__
    params = {k: v for k, v in names.items() if v is not None}
    extra = set(params) - set(accepted)
    if extra:
        parser.error(f"{args.benchmark} does not take {sorted('--' + e.replace('_', '-') for e in extra)}")
    try:
        spec = cls(m=args.m, **params)
    except ValueError as exc:
        parser.error(str(exc))
    data = datagen.generate(spec, args.seed)
    prefix = Path(args.out)
    if isinstance(data, PairedSample):
        path = prefix.with_name(prefix.name + ".csv")
        save_csv(path, data.joint())
        print(json.dumps({"data": str(path), "split_col": data.x.shape[1]}))
    else:
        pa = prefix.with_name(prefix.name + "_a.csv")
        pb = prefix.with_name(prefix.name + "_b.csv")
        save_csv(pa, data[0])
        save_csv(pb, data[1])
        print(json.dumps({"a": str(pa), "b": str(pb)}))
    return EXIT_OK


_COMMANDS = {
    "two-sample": cmd_two_sample,
    "independence": cmd_independence,
    "power": cmd_power,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](parser, args)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except DataError as exc:
        print(f"pairtest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"pairtest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"pairtest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
