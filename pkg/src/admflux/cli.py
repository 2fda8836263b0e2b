"""Command line entry point: ``admflux compute | verify | sweep``.

Exit codes: 0 success, 1 error, 2 expectation violated (a divergent limit
under ``--expect-finite``, or a failed verification row).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .scenario import ScenarioError, load_scenario, run_scenario
from .verification import CHECK_NAMES, verify_known_limits

__all__ = ["main", "build_parser", "parse_radii"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXPECTATION = 2

log = logging.getLogger("admflux")


def parse_radii(text: str) -> tuple[float, ...]:
    """``start:stop:count`` to ``count`` log-spaced radii from start to stop inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot read radii range {text!r}") from exc
    if not (0 < start < stop) or count < 2:
        raise argparse.ArgumentTypeError("need 0 < start < stop and count >= 2")
    return tuple(float(r) for r in np.logspace(np.log10(start), np.log10(stop), count))


class _Parser(argparse.ArgumentParser):
    # usage errors are ordinary errors; 2 is reserved for violated expectations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="admflux", description="Flux integrals at infinity for graph initial data.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="evaluate a scenario file")
    c.add_argument("scenario", type=Path)
    c.add_argument("--out", type=Path, help="write the report here instead of stdout")
    c.add_argument("--format", choices=("csv", "json"), help="override the scenario output format")
    c.add_argument("--exact", action="store_true", help="include closed-form limits where available")
    c.add_argument("--expect-finite", action="store_true", help="exit with code 2 if any limit is divergent")

    v = sub.add_parser("verify", help="run the regression table of known limits")
    v.add_argument("--filter", help=f"substring of a check name ({', '.join(CHECK_NAMES)})")
    v.add_argument("--degree", type=int, default=24, help="starting quadrature degree")
    v.add_argument("--max-degree", type=int, help="cap on the adaptive quadrature degree")
    v.add_argument("--mass", type=float, default=5.0, help="mass of the second Schwarzschild variant")

    s = sub.add_parser("sweep", help="evaluate a scenario over a log-spaced radius range")
    s.add_argument("scenario", type=Path)
    s.add_argument("--radii", type=parse_radii, required=True, metavar="START:STOP:COUNT")
    s.add_argument("--out", type=Path)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    return ap


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _compute(args) -> int:
    s = load_scenario(args.scenario)
    log.info("scenario %s: %d radii", args.scenario, len(s.radii))
    report = run_scenario(s, exact=True if args.exact else None)
    _emit(report.render(args.format), args.out)
    if args.expect_finite and report.any_divergent:
        bad = [f"{r.quantity}{'' if r.axis is None else r.axis}" for r in report.results if r.verdict.is_divergent]
        print(f"admflux: divergent limit for {', '.join(bad)}", file=sys.stderr)
        return EXIT_EXPECTATION
    return EXIT_OK


def _sweep(args) -> int:
    s = load_scenario(args.scenario).with_radii(args.radii)
    report = run_scenario(s)
    _emit(report.render(args.format), args.out)
    return EXIT_OK


def _verify(args) -> int:
    summary = verify_known_limits(args.filter, args.degree, args.max_degree, args.mass)
    print(summary.table())
    if not summary.rows:
        print(f"admflux: no check matches {args.filter!r}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if summary.passed else EXIT_EXPECTATION


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    handlers = {"compute": _compute, "verify": _verify, "sweep": _sweep}
    try:
        return handlers[args.command](args)
    except (ScenarioError, OSError) as exc:
        print(f"admflux: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # any module error surfaces with the scenario context
        where = getattr(args, "scenario", None)
        ctx = f" ({where})" if where else ""
        print(f"admflux: {type(exc).__name__}{ctx}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
