"""Command line entry point: ``magorbit run`` and ``magorbit compare``.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure,
3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import load_config
from .errors import ConfigurationError, InputError, NumericalError
from .io import read_json
from .runner import compare, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magorbit", description=__doc__.splitlines()[0])
    parser.add_argument("--quiet", action="store_true", help="only print warnings and errors")
    parser.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker threads for independent sub-runs")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True, help="JSON experiment config")
    p_run.add_argument("--out", default=None, help="parent directory for the run directory")
    p_cmp = sub.add_parser("compare", help="diff the metrics of two run manifests")
    p_cmp.add_argument("manifest_a")
    p_cmp.add_argument("manifest_b")
    p_cmp.add_argument("--rtol", type=float, default=0.0,
                       help="ignore relative metric differences up to this value")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run(cfg, args.out, threads=args.threads)
    if not args.quiet:
        print(json.dumps({"run_dir": str(result.run_dir),
                          "manifest": str(result.manifest_path),
                          "metrics": result.manifest["metrics"]}, indent=2))
    return EXIT_OK


def _cmd_compare(args) -> int:
    report = compare(read_json(args.manifest_a), read_json(args.manifest_b), args.rtol)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # argparse exits with 2 on usage errors
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    handler = _cmd_run if args.command == "run" else _cmd_compare
    try:
        return handler(args)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
