"""Command-line entry point.

Subcommands::

    activefdr classify --config exp.json --out trials.csv --trace traces.jsonl
    activefdr fdr --eta 0.9,0.9,0.2,0.1 --alpha 0.3 --trials 5
    activefdr sweep --config grid.json --out sweep.csv
    activefdr coverage --mode persistent --n 512 --reps 1000
    activefdr predict --eta 1,1,0.5,0 --alpha 0.2
    activefdr check --criteria 1 2 7
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .core import NoiseMode
from .harness.experiment import (
    Algorithm,
    ExperimentConfig,
    build_family,
    build_instance,
    expand_grid,
    rows_to_csv,
    run_experiment,
    summarize,
    trials_to_csv,
)
from .metrics import complexity_predictors


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--mode", choices=[m.value for m in NoiseMode])
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--cap", type=int)


def _add_instance(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", help="comma-separated item means, used when no --config is given")
    p.add_argument("--family", default="thresholds", choices=["thresholds", "intervals"])


def _parse_eta(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _config_from_args(args, algorithm=None) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    elif getattr(args, "eta", None):
        data = {"generator": {"kind": "explicit", "eta": _parse_eta(args.eta)}, "family": {"kind": args.family}}
    else:
        raise SystemExit("need --config or --eta")
    if algorithm is not None:
        data["algorithm"] = algorithm
    for key in ("seed", "trials", "mode", "delta", "alpha", "cap"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    try:
        return ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise SystemExit(f"bad config: {exc}")


def _run_engine(args, fdr: bool) -> int:
    algo = Algorithm.PASSIVE_FDR if fdr else Algorithm.PASSIVE_CLASSIFY
    if not args.passive:
        algo = Algorithm.FDR if fdr else Algorithm.CLASSIFY
    config = _config_from_args(args, algo.value)
    results = run_experiment(config, workers=args.workers)
    _emit(trials_to_csv(results), args.out)
    if args.trace:
        with open(args.trace, "w") as fh:
            for i, res in enumerate(results):
                for rec in res.trace:
                    fh.write(json.dumps({"trial": i, **rec}) + "\n")
    summary = summarize(config, results)
    print(
        f"mean labels {summary['mean_labels']:.1f}, success rate {summary['success_rate']}",
        file=sys.stderr,
    )
    return 0


def cmd_classify(args) -> int:
    return _run_engine(args, fdr=False)


def cmd_fdr(args) -> int:
    return _run_engine(args, fdr=True)


def cmd_sweep(args) -> int:
    with open(args.config) as fh:
        plan = json.load(fh)
    base = plan["base"]
    for key in ("seed", "trials", "mode", "delta", "alpha", "cap"):
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    rows = []
    for cfg in expand_grid(plan):
        rows.append(summarize(cfg, run_experiment(cfg, workers=args.workers)))
        print(f"done {cfg.algorithm.value} n={cfg.n}", file=sys.stderr)
    _emit(rows_to_csv(rows), args.out)
    return 0


def cmd_coverage(args) -> int:
    from .harness.coverage import coverage_pair, coverage_single, coverage_threshold, random_explicit_family

    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    mode = NoiseMode(args.mode or "stochastic")
    delta = args.delta if args.delta is not None else 0.1
    n = args.n or (512 if mode is NoiseMode.PERSISTENT else 12)
    family = random_explicit_family(rng, n, args.policies)
    mu = rng.uniform(-1, 1, n)
    anchor = int(rng.integers(len(family)))
    rows = []
    for t in args.t:
        if mode is NoiseMode.PERSISTENT and t > n:
            raise SystemExit(f"persistent coverage needs t <= n ({t} > {n})")
        rows.append({"bound": "single", "mode": mode.value, "n": n, "t": t,
                     "violation_rate": coverage_single(family, mu, t, delta, mode, args.reps, rng)})
        rows.append({"bound": "pair", "mode": mode.value, "n": n, "t": t,
                     "violation_rate": coverage_pair(family, mu, anchor, t, delta, mode, args.reps, rng)})
        if mode is NoiseMode.STOCHASTIC:
            rows.append({"bound": "threshold", "mode": mode.value, "n": n, "t": t,
                         "violation_rate": coverage_threshold(mu, max(1, n // 2), t, delta, args.reps, rng)})
    _emit(rows_to_csv(rows, ["bound", "mode", "n", "t", "violation_rate"]), args.out)
    return 0


def cmd_predict(args) -> int:
    config = _config_from_args(args, Algorithm.FDR.value if args.alpha is not None else None)
    family = build_family(config)
    instance = build_instance(config, config.seed)
    pred = complexity_predictors(family, instance, config.alpha, config.delta)
    _emit(pred.to_json() + "\n", args.out)
    return 0


def cmd_check(args) -> int:
    from .harness.acceptance import run_all

    results = run_all(only=set(args.criteria) if args.criteria else None)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activefdr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_text in (
        ("classify", cmd_classify, "run the elimination classifier"),
        ("fdr", cmd_fdr, "run FDR-controlled set selection"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        _add_instance(p)
        p.add_argument("--passive", action="store_true", help="observe every draw (non-adaptive comparator)")
        p.add_argument("--trace", help="write per-epoch traces as JSONL")
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=fn)

    p = sub.add_parser("sweep", help="grid of experiments summarized as CSV")
    _add_common(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("coverage", help="Monte Carlo violation rates of the confidence radii")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--policies", type=int, default=20)
    p.add_argument("--t", type=int, nargs="+", default=[64, 256])
    p.add_argument("--reps", type=int, default=1000)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("predict", help="dump sample-complexity predictors as JSON")
    _add_common(p)
    _add_instance(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("check", help="run the acceptance criteria; nonzero exit on failure")
    p.add_argument("--criteria", type=int, nargs="*")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep" and not args.config:
        raise SystemExit("sweep needs --config")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
