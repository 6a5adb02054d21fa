"""Command-line entry point: ``ufm run|oracle|verify|asymptotic|metrics``.

Exit codes: 0 success, 1 invalid input, 2 verification failure, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import ConfigError, load_asymptotic_config, load_experiment_config
from .core import NumericalError
from .io import FileFormatError, read_features, read_weights, write_json, write_trace_csv
from .metrics import features_report
from .models import Variant
from .optim import DivergenceError

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_DIVERGED = 0, 1, 2, 3
DEFAULT_OUT = "ufm_out"

log = logging.getLogger("ufmcollapse")


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from exc
    if not seeds or any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seed list needs nonnegative integers")
    return seeds


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ufm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: config output_path or ./ufm_out)")
    common.add_argument("--quiet", action="store_true", help="only print errors")

    for name, helptext in [("run", "train with gradient descent and write a trace"),
                           ("verify", "train, then check the result against the oracle"),
                           ("oracle", "write the closed-form minimizer report")]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=_u64, help="override the config seed")
        if name != "oracle":
            p.add_argument("--seed-list", type=_seed_list, help="comma-separated seeds, best run kept")

    p = sub.add_parser("asymptotic", parents=[common], help="ridge weights under feature noise")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=_u64)

    p = sub.add_parser("metrics", parents=[common], help="collapse metrics of a feature file")
    p.add_argument("features")
    p.add_argument("--weights", help="K x d classifier file for NC3")
    p.add_argument("--center", action="store_true", help="center class means before the ETF metric")
    return parser


def _setup_logging(quiet: bool) -> None:
    level = logging.ERROR if quiet else getattr(logging, os.environ.get("UFM_LOG", "INFO").upper(),
                                                 logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(level)


def _out_dir(args, cfg_path: str | None) -> Path:
    out = Path(args.out or cfg_path or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def cmd_run(args, verify: bool = False) -> int:
    cfg = load_experiment_config(args.config, seed=args.seed)
    if verify and cfg.variant is Variant.PLAIN_REG_BIAS:
        raise experiments.NoOracleError("plain_reg_bias has no oracle to verify against")
    out = _out_dir(args, cfg.output_path)
    try:
        result = experiments.run_experiment(cfg, args.seed_list)
    except DivergenceError as exc:
        log.error("%s", exc)
        return EXIT_DIVERGED
    write_trace_csv(out / "trace.csv", result.trace)
    summary = experiments.run_summary(cfg, result)
    _say(args, f"final objective {result.final_objective:.12g} (seed {result.seed})")
    if not verify:
        write_json(out / "summary.json", summary)
        return EXIT_OK
    verdict = experiments.verify_result(cfg, result)
    summary["verification"] = {"passed": verdict.passed, "checks": [c.to_dict() for c in verdict.checks]}
    write_json(out / "summary.json", summary)
    for line in verdict.lines():
        _say(args, line)
    return EXIT_OK if verdict.passed else EXIT_VERIFY


def cmd_oracle(args) -> int:
    cfg = load_experiment_config(args.config, seed=args.seed)
    report = experiments.oracle_report(cfg)
    out = _out_dir(args, cfg.output_path)
    write_json(out / "oracle.json", report)
    _say(args, f"oracle objective {report['objective']:.12g}"
               + (" (zero regime)" if report["zero_regime"] else ""))
    return EXIT_OK


def cmd_asymptotic(args) -> int:
    cfg = load_asymptotic_config(args.config, seed=args.seed)
    res = experiments.run_asymptotic(cfg)
    out = _out_dir(args, cfg.output_path)
    with open(out / "asymptotic.csv", "w") as fh:
        fh.write("n,trial,rel_err\n")
        for n, trial, err in res.rows:
            fh.write(f"{n},{trial},{err:.17g}\n")
    write_json(out / "asymptotic.json", {
        "kappa": res.kappa,
        "mean_rel_err": {str(n): v for n, v in res.means.items()},
        "passed": res.passed,
        "config": cfg.echo(),
    })
    for n, v in res.means.items():
        _say(args, f"n={n}: mean relative error {v:.4e}")
    return EXIT_OK if res.passed else EXIT_VERIFY


def cmd_metrics(args) -> int:
    H, dims = read_features(args.features)
    W = None
    if args.weights:
        W = read_weights(args.weights)
        if W.shape != (dims.K, H.shape[0]):
            raise FileFormatError(f"weights have shape {W.shape}, expected {(dims.K, H.shape[0])}")
    report = features_report({"h": H}, W, dims, args.center).to_dict()
    payload = {"dims": {"K": dims.K, "d": H.shape[0], "n": dims.n}, "center": args.center, **report}
    if args.out:
        out = _out_dir(args, None)
        write_json(out / "metrics.json", payload)
    if not args.quiet:
        print(json.dumps(payload, indent=2, default=_plain))
    return EXIT_OK


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj).__name__)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.quiet)
    handlers = {
        "run": cmd_run,
        "verify": lambda a: cmd_run(a, verify=True),
        "oracle": cmd_oracle,
        "asymptotic": cmd_asymptotic,
        "metrics": cmd_metrics,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FileFormatError, experiments.NoOracleError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (ValueError, NumericalError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
