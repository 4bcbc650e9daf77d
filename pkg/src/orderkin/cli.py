"""Command-line interface.

    orderkin simulate CONFIG            run the scenario named in CONFIG
    orderkin stability --alpha A --beta B
    orderkin invariants CONFIG          conservation fuzz (scenario invariant_fuzz)
    orderkin htest CONFIG               DSMC relaxation with H monitoring
    orderkin weakform CONFIG            Monte Carlo weak-form tests

Global flags ``--seed``, ``--threads`` and ``--out`` override the config.
Exit status: 0 success, 1 failed property check, 2 configuration error,
3 I/O error.  The last stderr line is ``RESULT: PASS`` or
``RESULT: FAIL reason=...``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config, parse_config
from .errors import ConfigurationError, OrderKinError
from .runner import EXIT_CONFIG, EXIT_IO, EXIT_OK, fmt, run_scenario

FORCED = {"invariants": "invariant_fuzz", "htest": "relaxation", "weakform": "weakform"}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="worker threads for collision sampling (results do not depend on it)")
    parser.add_argument("--out", default=default, help="override the output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orderkin", description=__doc__.splitlines()[0] if __doc__ else None)
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "run the scenario named in the config"),
        ("invariants", "fuzz the conservation laws of a collision rule"),
        ("htest", "DSMC relaxation with H-functional monitoring"),
        ("weakform", "Monte Carlo weak-form tests of the collision operator"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="flat key = value scenario file")
        _global_flags(p, suppress=True)
    p = sub.add_parser("stability", help="classify the mean-field fixed point")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    _global_flags(p, suppress=True)
    return parser


def _finish(status: int, reason: str) -> int:
    print("RESULT: PASS" if status == EXIT_OK else f"RESULT: FAIL {reason}".rstrip(), file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "stability":
            text = f"scenario = stability\nseed = {args.seed or 0}\n"
            text += f"potential.alpha = {args.alpha!r}\npotential.beta = {args.beta!r}\n"
            cfg = parse_config(text)
            cfg.output_path = args.out or ""
        else:
            cfg = load_config(args.config)
            if args.command in FORCED:
                cfg.scenario = FORCED[args.command]
                cfg = parse_config(_reserialize(cfg))
            if args.seed is not None:
                cfg.seed = args.seed
            if args.out is not None:
                cfg.output_path = args.out
        result = run_scenario(cfg, threads=args.threads)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return _finish(EXIT_CONFIG, "reason=configuration")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return _finish(EXIT_IO, "reason=io")
    except OrderKinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _finish(EXIT_CONFIG, f"reason={type(exc).__name__}")

    if cfg.scenario in ("stability", "weakform"):
        print(",".join(result.columns))
        for row in result.rows:
            print(",".join(fmt(v) for v in row))
    for msg in result.messages:
        print(msg)
    if result.path:
        print(f"wrote {result.path}")
    return _finish(result.status, result.reason)


def _reserialize(cfg) -> str:
    from .config import serialize_config

    return serialize_config(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
