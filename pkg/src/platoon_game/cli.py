"""Command-line entry point: ``platoon-game run ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, PlatoonError
from .runner import EXIT_IO, run
from .scenario import STRATEGIES, load_config, paper_sec5


class _Parser(argparse.ArgumentParser):
    # usage errors must not collide with exit code 2 (collision detected)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="platoon-game",
        description="Nash and collision-avoidance strategies for vehicle platoons",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="evaluate a scenario and write CSV and JSON outputs")
    p.add_argument("--scenario", required=True, help="scenario JSON file or 'paper-sec5'")
    p.add_argument("--strategy", choices=STRATEGIES, help="overrides the scenario's strategy")
    p.add_argument("--csv", required=True, help="time-series output path")
    p.add_argument("--report", required=True, help="JSON report output path")
    p.add_argument("--dt-output", type=float)
    p.add_argument("--dt-oracle", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument(
        "--trajectory",
        choices=("consistent", "printed"),
        help="closed-form trajectory convention for nash / ca-terminal",
    )
    p.add_argument("--emit-plot-script", metavar="PATH")
    p.add_argument("--verify", action="store_true", help="fail with exit 3 unless oracle and best-response checks pass")

    q = sub.add_parser("preset", help="print a built-in scenario as JSON")
    q.add_argument("name", choices=("paper-sec5",))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "preset":
        print(json.dumps(paper_sec5().to_dict(), indent=2))
        return 0

    try:
        config = load_config(args.scenario).with_overrides(
            strategy=args.strategy,
            dt_output=args.dt_output,
            dt_oracle=args.dt_oracle,
            epsilon=args.epsilon,
            trajectory=args.trajectory,
        )
    except ConfigError as exc:
        print(f"platoon-game: {exc}", file=sys.stderr)
        return EXIT_IO
    except PlatoonError as exc:
        print(f"platoon-game: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_IO

    result = run(
        config,
        args.csv,
        args.report,
        verify=args.verify,
        plot_script=args.emit_plot_script,
    )
    if result.message:
        print(f"platoon-game: {result.message}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
