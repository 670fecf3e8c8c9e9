"""``pqscms`` command line.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench import bench_kem, bench_sign, render_timings
from .errors import ConfigError, ScmsError
from .report import length_rows, render
from .simulate import ScenarioConfig, run_simulation

EXIT_OK = 0
EXIT_VERIFY_FAILURE = 1
EXIT_CONFIG_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2 anyway; keep it explicit
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pqscms", description="Hybrid post-quantum SCMS toolkit")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("table-lengths", help="certificate and SPDU length table")
    p.add_argument("--format", choices=("csv", "md"), default="csv")

    for name, help_text in (("bench-sign", "signature timings"), ("bench-kem", "KEM timings")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--iters", type=_positive, default=100)
        p.add_argument("--format", choices=("csv", "md"), default="csv")

    p = sub.add_parser("simulate", help="provision two vehicles and exchange BSMs")
    p.add_argument("--config", help="flat key=value scenario file")
    p.add_argument("--seed", type=int)

    for p in sub.choices.values():
        p.add_argument("--out", default=argparse.SUPPRESS, help="write the report here")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    status = EXIT_OK
    try:
        if args.command == "table-lengths":
            text = render(length_rows(), args.format)
        elif args.command == "bench-sign":
            rows = bench_sign(args.iters)
            text = render_timings(rows, args.format)
            status = EXIT_VERIFY_FAILURE if any(r.failed for r in rows) else EXIT_OK
        elif args.command == "bench-kem":
            rows = bench_kem(args.iters)
            text = render_timings(rows, args.format)
            status = EXIT_VERIFY_FAILURE if any(r.failed for r in rows) else EXIT_OK
        else:
            config = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
            if args.seed is not None:
                config.seed = args.seed
            summary = run_simulation(config)
            text = summary.render()
            status = EXIT_VERIFY_FAILURE if summary.verify_failures else EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ScmsError as exc:
        print(f"protocol failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILURE
    try:
        _emit(text, args.out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
