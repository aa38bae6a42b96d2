"""Command line entry points.

    ecasim run --config sweep.cfg [--override key=value ...]
    ecasim validate --config sweep.cfg
    ecasim figures --results out/results.csv --fig 1 --out plots/

Exit codes: 0 on success, 1 for configuration problems, 2 when a run died on
an internal consistency fault (partial results are preserved).
"""

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, ConsistencyError
from .figures import emit_figure_data, figure_filename
from .sweep import (RESULTS_NAME, ECHO_NAME, load_results,
                    parse_config_with_overrides, run_sweep)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAULT = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecasim",
        description="CSMA/CA vs CSMA/ECA contention simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a sweep described by a config file")
    p_run.add_argument("--config", required=True, help="key = value sweep file")
    p_run.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a config value; repeatable")

    p_val = sub.add_parser("validate", help="check a config and echo it resolved")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")

    p_fig = sub.add_parser("figures", help="emit plot data from a results CSV")
    p_fig.add_argument("--results", required=True, help="path to results.csv")
    p_fig.add_argument("--fig", required=True, type=int, help="figure number 1-7")
    p_fig.add_argument("--out", required=True, help="directory for the .dat file")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = parse_config_with_overrides(args.config, args.override)
            try:
                run_sweep(spec)
            except ConsistencyError as exc:
                print(f"internal consistency fault: {exc}", file=sys.stderr)
                print(f"partial results kept in "
                      f"{Path(spec.output_dir) / RESULTS_NAME}", file=sys.stderr)
                return EXIT_FAULT
            out = Path(spec.output_dir)
            print(f"results: {out / RESULTS_NAME}")
            print(f"resolved config: {out / ECHO_NAME}")
            return EXIT_OK

        if args.command == "validate":
            spec = parse_config_with_overrides(args.config, args.override)
            sys.stdout.write(spec.resolved_text())
            return EXIT_OK

        if args.command == "figures":
            table = load_results(args.results)
            text = emit_figure_data(table, args.fig)
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            target = out_dir / figure_filename(args.fig)
            target.write_text(text)
            print(f"figure data: {target}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConsistencyError as exc:
        print(f"internal consistency fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    raise AssertionError("unreachable")


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
