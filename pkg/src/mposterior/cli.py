"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, measures
from .kernels import GaussianKernel, MahalanobisKernel, kernel_to_config
from .medians import ConcentrationParams, threshold_weights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _parse_kernel(text: str):
    if text == "auto":
        return "auto"
    if text.startswith("gaussian:"):
        return GaussianKernel(float(text.split(":", 1)[1]))
    if text.startswith("mahalanobis:"):
        path = Path(text.split(":", 1)[1])
        if path.suffix == ".json":
            matrix = np.asarray(json.loads(path.read_text()), dtype=np.float64)
        else:
            matrix = np.atleast_2d(np.loadtxt(path, delimiter=","))
        return MahalanobisKernel(matrix)
    raise ValueError(f"cannot parse kernel spec {text!r} "
                     "(expected auto | gaussian:H | mahalanobis:FILE)")


def _load_subset_measures(draws_dir: str):
    root = Path(draws_dir)
    if not root.is_dir():
        raise ValueError(f"{draws_dir}: not a directory")
    files = sorted(p for p in root.iterdir() if p.suffix in (".csv", ".json"))
    if not files:
        raise ValueError(f"{draws_dir}: no .csv or .json draw files found")
    return [measures.read_draws(p) for p in files], files


def _parse_levels(text: str):
    return tuple(float(tok) for tok in text.split(",") if tok)


def _parse_m_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("m-range must be start:stop:step (stop inclusive)")
    start, stop, step = (int(p) for p in parts)
    if step < 1 or stop < start:
        raise ValueError("m-range must satisfy start <= stop and step >= 1")
    return list(range(start, stop + 1, step))


def _cmd_aggregate(args) -> int:
    subset_measures, files = _load_subset_measures(args.draws)
    config = harness.MPosteriorConfig(
        kernel=_parse_kernel(args.kernel),
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        threshold=not args.no_threshold,
    )
    aggregate, diagnostics = harness.m_posterior(subset_measures, config)
    spec = harness.resolve_kernel(config.kernel, subset_measures)
    m = len(subset_measures)
    final = threshold_weights(diagnostics.weights, m) if config.threshold else diagnostics.weights
    payload = diagnostics.to_json_dict()
    payload.update({
        "m": m,
        "subset_files": [f.name for f in files],
        "thresholded": config.threshold,
        "final_weights": final.tolist(),
        "kernel": kernel_to_config(spec),
    })
    Path(args.out).write_text(json.dumps(payload, indent=2))
    if args.mixture_out:
        measures.write_draws(aggregate, args.mixture_out)
    return EXIT_OK


def _cmd_simulate_gaussian(args) -> int:
    config = harness.OutlierExperimentConfig(
        replications=args.reps,
        n=args.n,
        m_subsets=args.m,
        levels=_parse_levels(args.levels),
        seed=args.seed,
        draws_full=args.draws_full,
        draws_per_subset=args.draws_per_subset,
    )
    report = harness.run_outlier_experiment(config)
    report.write_csv(args.out)
    return EXIT_OK


def _cmd_simulate_gp(args) -> int:
    config = harness.GPExperimentConfig(
        case=args.case,
        replications=args.reps,
        seed=args.seed,
        n_clean=args.n_clean,
        n_outliers=args.n_outliers,
        m_subsets=args.m,
        grid_size=args.grid_size,
    )
    report = harness.run_gp_experiment(config)
    report.write_csv(args.out)
    return EXIT_OK


def _cmd_select_m(args) -> int:
    subset_measures, _ = _load_subset_measures(args.draws)
    result = harness.select_m_sweep(subset_measures, _parse_m_range(args.m_range))
    Path(args.out).write_text(json.dumps(result, indent=2))
    return EXIT_OK


def _cmd_concentration(args) -> int:
    params = ConcentrationParams(alpha=args.alpha, q=args.q, gamma=args.gamma, m=args.m)
    report = harness.run_concentration_check(params, trials=args.trials, seed=args.seed)
    text = json.dumps(report.to_json_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mposterior",
        description="Robust aggregation of subset posterior draws via medians of measures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="aggregate a directory of subset draw files")
    p.add_argument("--draws", required=True, help="directory of per-subset .csv/.json draw files")
    p.add_argument("--kernel", default="auto", help="auto | gaussian:H | mahalanobis:FILE")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--no-threshold", action="store_true",
                   help="skip zeroing weights below 1/(2m)")
    p.add_argument("--out", required=True, help="output JSON (weights + diagnostics)")
    p.add_argument("--mixture-out", default=None,
                   help="optionally write the aggregated measure as a draw file")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("simulate-gaussian", help="univariate Gaussian outlier coverage study")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--levels", default="0.2,0.15,0.1,0.05", help="comma-separated alpha values")
    p.add_argument("--draws-full", type=int, default=1000)
    p.add_argument("--draws-per-subset", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=_cmd_simulate_gaussian)

    p = sub.add_parser("simulate-gp", help="contaminated GP regression study")
    p.add_argument("--case", type=int, choices=(1, 2), default=1)
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--n-clean", type=int, default=None)
    p.add_argument("--n-outliers", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=_cmd_simulate_gp)

    p = sub.add_parser("select-m", help="pick a subset count via the metric median")
    p.add_argument("--draws", required=True, help="directory of per-subset draw files")
    p.add_argument("--m-range", required=True, help="start:stop:step, stop inclusive")
    p.add_argument("--out", required=True, help="output JSON")
    p.set_defaults(func=_cmd_select_m)

    p = sub.add_parser("concentration", help="Monte-Carlo check of the median bounds")
    p.add_argument("--m", type=int, default=7)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--q", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output JSON (stdout when omitted)")
    p.set_defaults(func=_cmd_concentration)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    # LinAlgError subclasses ValueError, so the numerical arm must come first.
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
