"""Command line front end.

Commands::

    vline phantom  --id 1 --n 160 --out runs/ph1
    vline forward  --phantom 2 --n 128 --transform lvt tvt star --out runs/fwd
    vline pipeline --id 2 --phantom 2 --n 160 --noise 0.05 --seed 7 --out runs/p2
    vline pipeline --id 5 --image rose.png --n 300 --out runs/rose
    vline pipeline --config runs/p2/config.json --out runs/p2-again
    vline report   runs/*/report.json

Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures.  Errors print one line to stderr, ``vline-error[<kind>]: <message>``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one machine-parsable line instead of usage text
        _fail("config", message, EXIT_CONFIG)


def _fail(kind: str, message: str, code: int):
    first = " ".join(str(message).split())
    print(f"vline-error[{kind}]: {first}", file=sys.stderr)
    sys.exit(code)


def _threads():
    raw = os.environ.get("VLINE_THREADS")
    if not raw:
        return
    import numba

    try:
        k = int(raw)
    except ValueError:
        _fail("config", f"VLINE_THREADS must be a positive integer, got {raw!r}", EXIT_CONFIG)
    if k < 1:
        _fail("config", f"VLINE_THREADS must be a positive integer, got {raw!r}", EXIT_CONFIG)
    numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


S = argparse.SUPPRESS


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="start from a saved config.json; other flags override it")
    p.add_argument("--n", type=int, default=S, help="pixels per side")
    p.add_argument("--half-extent", dest="half_extent", type=float, default=S)
    p.add_argument("--out", default=S, help="output directory")
    p.add_argument("--u-angle", dest="u_angle", type=float, default=S, help="degrees, default 45")
    p.add_argument("--v-angle", dest="v_angle", type=float, default=S, help="degrees, default 135")
    p.add_argument("--star-angles", dest="star_angles", type=float, nargs="+", default=S)
    p.add_argument("--star-weights", dest="star_weights", type=float, nargs="+", default=S)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="vline", description="V-line and star transforms of 2D vector fields.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("phantom", help="sample a phantom and write it with figures")
    p.add_argument("--id", dest="phantom", type=int, default=S, help="phantom 1, 2 or 3")
    p.add_argument("--image", default=S, help="RGB image instead of a phantom")
    _common(p)

    p = sub.add_parser("forward", help="compute transform data of a field")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--phantom", type=int, default=S)
    src.add_argument("--input", default=S, help="field file (.vlf)")
    p.add_argument("--transform", dest="transforms", nargs="+", default=S, help="lvt tvt lvt1 tvt1 star")
    _common(p)

    p = sub.add_parser("pipeline", help="simulate data and reconstruct")
    p.add_argument("--id", dest="pipeline", type=int, default=S, help="pipeline 1-5")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--phantom", type=int, default=S)
    src.add_argument("--input", default=S, help="field file (.vlf)")
    src.add_argument("--image", default=S, help="RGB image (pipeline 5)")
    p.add_argument("--variant", choices=["potential", "solenoidal"], default=S)
    p.add_argument("--noise", dest="noise_level", type=float, default=S, help="relative level, e.g. 0.05")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--noise-model", dest="noise_model", choices=["gaussian", "uniform"], default=S)
    p.add_argument("--pad", dest="pad_factor", type=float, default=S)
    p.add_argument("--support-radius", dest="support_radius", type=float, default=S)
    p.add_argument("--stencil", choices=["lattice", "grid"], default=S)
    p.add_argument("--window", choices=["ramp", "hann"], default=S)
    p.add_argument("--inset", dest="inset_radius", type=float, default=S)
    _common(p)

    p = sub.add_parser("report", help="tabulate report.json files")
    p.add_argument("paths", nargs="*")
    p.add_argument("--out", default=None, help="also write the table to this file")
    return ap


def _config(args):
    from .runner import ConfigError, RunConfig

    opts = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config:
        try:
            base = RunConfig.from_json(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load config {args.config}: {exc}") from None
        base.command = args.command
    else:
        base = RunConfig(command=args.command)
    for k, v in opts.items():
        setattr(base, k, v)
    if "image" in opts and args.command == "pipeline":
        base.phantom = None
    return base.validate()


def _report(args) -> int:
    from .evaluation import ReconReport
    from .runner import ConfigError, aggregate_reports

    reports = []
    for p in args.paths:
        try:
            reports.append(ReconReport.load(p))
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"unreadable report {p}: {exc}") from None
    table = aggregate_reports(reports)
    print(table)
    if args.out:
        Path(args.out).write_text(table + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _threads()
    from .poisson import ConvergenceError
    from .runner import ConfigError, run_forward, run_phantom, run_pipeline

    try:
        if args.command == "report":
            return _report(args)
        cfg = _config(args)
        if args.command == "phantom":
            res = run_phantom(cfg)
            for name, path in sorted(res["files"].items()):
                print(f"{name}\t{path}")
        elif args.command == "forward":
            res = run_forward(cfg)
            for name, path in sorted(res["files"].items()):
                print(f"{name}\t{path}")
        else:
            report, _ = run_pipeline(cfg)
            errs = " ".join(f"{e:.4g}" for e in report.rel_l2)
            print(f"pipeline {report.pipeline}: rel_l2 {errs}  ({report.seconds:.1f} s)")
            print(f"report\t{report.files['report']}")
    except ConfigError as exc:
        _fail("config", exc, EXIT_CONFIG)
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _fail("numeric", exc, EXIT_NUMERIC)
    except ValueError as exc:
        # remaining ValueErrors come from argument-dependent validation
        _fail("config", exc, EXIT_CONFIG)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
