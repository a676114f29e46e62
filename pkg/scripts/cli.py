"""
Certify CLI

Command-line interface for residual-based error bounds.
Uses the API layer for all operations.

Exit codes: 0 success, 1 every row failed numerically, 2 usage or
configuration error.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add scripts directory to path
SCRIPTS_DIR = Path(__file__).parent
sys.path.insert(0, str(SCRIPTS_DIR))

from rich.console import Console

from logger import logger, silence_console
from api import CertifyAPI, load_run_config
from errors import CertifyError, ConfigurationError
import dashboard

EXIT_OK = 0
EXIT_ALL_FAILED = 1
EXIT_USAGE = 2


def create_parser() -> argparse.ArgumentParser:
    """Create and configure argument parser."""
    parser = argparse.ArgumentParser(
        prog="certify",
        description="Certified lower and upper error bounds for PDE approximants",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Certify a parameter sweep from a JSON run config")
    run.add_argument("--config", "-c", required=True, type=Path, help="Run configuration (JSON)")
    run.add_argument("--out", "-o", type=Path, help="CSV output path (overrides the config)")
    run.add_argument("--workers", "-w", type=int, help="Worker threads (overrides config and CERTIFY_WORKERS)")
    run.add_argument("--serial", action="store_true", help="Certify rows one after another in this thread")
    run.add_argument("--dashboard", "-d", action="store_true", help="Show live progress during the sweep")
    run.add_argument("--quiet", "-q", action="store_true", help="Do not print the summary table")

    describe = sub.add_parser("describe", help="Print the problem sheet of a catalog entry")
    describe.add_argument("problem", help="Catalog id")

    listing = sub.add_parser("list", help="List stored runs")
    listing.add_argument("--problems", action="store_true", help="List the problem catalog instead")

    return parser


def cmd_run(api: CertifyAPI, args: argparse.Namespace, console: Console) -> int:
    run_config = load_run_config(args.config, api.config)
    if args.workers is not None and args.workers < 1:
        raise ConfigurationError(f"--workers must be >= 1, got {args.workers}")

    if args.dashboard:
        silence_console()
        with dashboard.SweepDashboard(len(run_config.parameters), title=run_config.problem) as dash:
            sink_id = logger.add(dashboard.create_dashboard_sink(dash), level="WARNING")
            try:
                outcome = api.run(run_config, out=args.out, workers=args.workers,
                                  serial=args.serial, on_row=dash.on_row)
            finally:
                logger.remove(sink_id)
    else:
        outcome = api.run(run_config, out=args.out, workers=args.workers, serial=args.serial)

    if not args.quiet:
        dashboard.render_summary(console, outcome.reports, run_config.mu_names,
                                 outcome.result.summary, str(outcome.csv_path))
    if outcome.all_failed:
        logger.error(f"All {len(outcome.reports)} rows failed; see the error column of {outcome.csv_path}")
        return EXIT_ALL_FAILED
    return EXIT_OK


def cmd_describe(api: CertifyAPI, args: argparse.Namespace, console: Console) -> int:
    try:
        sheet = api.describe(args.problem)
    except ConfigurationError as e:
        logger.error(str(e))
        dashboard.render_catalog(console, api.list_problems())
        return EXIT_USAGE
    dashboard.render_problem_sheet(console, sheet)
    return EXIT_OK


def cmd_list(api: CertifyAPI, args: argparse.Namespace, console: Console) -> int:
    if args.problems:
        dashboard.render_catalog(console, api.list_problems())
    else:
        dashboard.render_run_list(console, api.list_runs())
    return EXIT_OK


COMMANDS = {"run": cmd_run, "describe": cmd_describe, "list": cmd_list}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI; returns the exit status."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    console = Console()
    try:
        api = CertifyAPI()
        return COMMANDS[args.command](api, args, console)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_USAGE
    except CertifyError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
