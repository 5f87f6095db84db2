"""Command-line interface for netcore."""

import argparse
import sys
import logging
from pathlib import Path
from typing import List, Optional

from src import config
from src.core_classes import parse_class_spec
from src.errors import AttemptsExhausted, NetcoreError, NoSingularityFound
from src.experiment_service import ExperimentService
from src.models import ExperimentConfig, ExperimentReport
from src.oracle import enumerate_networks, format_network_counts, save_network_counts
from src.report_service import ReportFormat, ReportService
from src.selftest import SelftestOptions, run_selftest
from src.singularity import network_constants
from src.tables import brute_force_three_connected, format_table, save_table


# Configure logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEAR_CRITICAL = 2


class CLI:
    """
    Command-line interface for constants, sampling campaigns, enumeration and selftests.

    Attributes:
        report_service: ReportService used to render every report
    """

    def __init__(self, report_service: Optional[ReportService] = None):
        """
        Initialize the CLI.

        Args:
            report_service: Configured ReportService instance (optional)
        """
        self.report_service = report_service or ReportService()

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="netcore",
            description="Random networks and biconnected graphs from a class of 3-connected cores"
        )
        subparsers = parser.add_subparsers(dest="command", help="Available commands")

        # Constants command
        constants_parser = subparsers.add_parser(
            "constants",
            help="Locate the dominant singularity and print the limit constants"
        )
        constants_parser.add_argument("--class", dest="class_spec", required=True,
                                      help="Core class, e.g. wheels, wheels+k33+prism, table:<path>, "
                                           "synthetic:alpha=1.5,lambda=1,radius=0.05")
        constants_parser.add_argument("--y", type=float, default=1.0, help="Edge variable (default: 1)")
        constants_parser.add_argument("--k-max", type=int, default=config.K_MAX,
                                      help=f"Length of the p_k table (default: {config.K_MAX})")
        constants_parser.add_argument("--fit-order", type=int, default=config.SERIES_ORDER,
                                      help="Series order of the exponent fit, 0 to skip "
                                           f"(default: {config.SERIES_ORDER})")
        constants_parser.add_argument("--format", choices=["json", "txt", "markdown"], default="json",
                                      help="Output format (default: json)")

        # Experiment command
        experiment_parser = subparsers.add_parser(
            "experiment",
            help="Run a sampling campaign and compare it with the predicted constants"
        )
        experiment_parser.add_argument("--class", dest="class_spec", required=True, help="Core class")
        experiment_parser.add_argument("--n", type=int, required=True, help="Target number of labeled vertices")
        experiment_parser.add_argument("--eps", type=float, default=0.1, help="Size window (default: 0.1)")
        experiment_parser.add_argument("--samples", type=int, default=100, help="Accepted samples (default: 100)")
        experiment_parser.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
        experiment_parser.add_argument("--workers", type=int, default=config.DEFAULT_WORKERS,
                                       help=f"Worker processes (default: {config.DEFAULT_WORKERS})")
        experiment_parser.add_argument("--size-only", action="store_true", help="Sample sizes only")
        experiment_parser.add_argument("--y", type=float, default=1.0, help="Edge variable (default: 1)")
        experiment_parser.add_argument("--k-max", type=int, default=config.K_MAX, help="Length of the p_k table")
        experiment_parser.add_argument("--max-attempts", type=int, default=config.MAX_ATTEMPTS,
                                       help="Rejection cap per accepted sample")
        experiment_parser.add_argument("--variance-n", type=int,
                                       help="Also sample at this size and compare the edge-variance scaling")
        experiment_parser.add_argument("--out", help="JSON report path; the census CSV goes to <out>.census.csv")
        experiment_parser.add_argument("--format", choices=["txt", "markdown", "json"], default="txt",
                                       help="Format of the summary printed to stdout (default: txt)")

        # Enumerate command
        enumerate_parser = subparsers.add_parser(
            "enumerate",
            help="Count networks (or 3-connected graphs) by brute force"
        )
        enumerate_parser.add_argument("--class", dest="class_spec",
                                      help="Core class (required for networks)")
        enumerate_parser.add_argument("--nmax", type=int, required=True, help="Largest number of vertices")
        enumerate_parser.add_argument("--three-connected", action="store_true",
                                      help="Count 3-connected graphs instead, optionally restricted to --class")
        enumerate_parser.add_argument("--out", help="Write the records to this file")

        # Selftest command
        selftest_parser = subparsers.add_parser("selftest", help="Run the oracle suites")
        selftest_parser.add_argument("--table", action="append", default=[],
                                     help="Table file to validate (repeatable)")
        selftest_parser.add_argument("--seed", type=int, default=0, help="Seed (default: 0)")
        selftest_parser.add_argument("--nmax", type=int, default=4,
                                     help="Largest n of the series-vs-enumeration suite (default: 4)")
        return parser

    def run(self, args: List[str]) -> int:
        """
        Main entry point for the CLI. Parses arguments and executes commands.

        Args:
            args: Command-line arguments (typically sys.argv[1:])

        Returns:
            Exit code (0 success, 1 error, 2 near-critical constants)
        """
        parser = self.build_parser()
        parsed_args = parser.parse_args(args)

        if not parsed_args.command:
            parser.print_help()
            return EXIT_ERROR

        try:
            if parsed_args.command == "constants":
                return self.handle_constants(parsed_args)
            elif parsed_args.command == "experiment":
                return self.handle_experiment(parsed_args)
            elif parsed_args.command == "enumerate":
                return self.handle_enumerate(parsed_args)
            elif parsed_args.command == "selftest":
                return self.handle_selftest(parsed_args)
            else:
                print(f"Unknown command: {parsed_args.command}", file=sys.stderr)
                return EXIT_ERROR
        except AttemptsExhausted as e:
            print(f"Error: {e}", file=sys.stderr)
            print(f"  attempts: {e.attempts}, hits: {e.hits}, "
                  f"observed acceptance rate {e.acceptance_rate:.3g}; "
                  "widen --eps or raise --max-attempts", file=sys.stderr)
            return EXIT_ERROR
        except NoSingularityFound as e:
            print(f"Error: no dominant singularity found - {e}", file=sys.stderr)
            return EXIT_ERROR
        except (NetcoreError, ValueError, OSError) as e:
            print(f"Error: {e}", file=sys.stderr)
            return EXIT_ERROR

    def handle_constants(self, args) -> int:
        """Print the singularity report; exit 2 when the class is near the regime boundary."""
        core_class = parse_class_spec(args.class_spec)
        report = network_constants(core_class, args.y, k_max=args.k_max, fit_order=args.fit_order)
        print(self.report_service.render_constants(report, ReportFormat(args.format)), end="")
        if report.entire_function:
            print("Warning: the class has no finite singularity (entire function)", file=sys.stderr)
        if report.near_critical:
            print("Warning: the class is near the critical boundary; the regime is uncertain",
                  file=sys.stderr)
            return EXIT_NEAR_CRITICAL
        return EXIT_OK

    def handle_experiment(self, args) -> int:
        """Run a campaign, write the report files and print a summary."""
        experiment_config = ExperimentConfig(
            class_spec=args.class_spec,
            n=args.n,
            eps=args.eps,
            samples=args.samples,
            master_seed=args.seed,
            workers=args.workers,
            size_only=args.size_only,
            out=args.out,
            y=args.y,
            k_max=args.k_max,
            max_attempts=args.max_attempts,
            variance_n=args.variance_n,
        )
        report = ExperimentService(experiment_config).run()
        if args.out:
            for path in self.report_service.write_experiment(report, args.out):
                print(f"Wrote {path}", file=sys.stderr)
        print(self.report_service.render_experiment(report, ReportFormat(args.format)), end="")
        return EXIT_OK if report.all_passed() else EXIT_ERROR

    def handle_enumerate(self, args) -> int:
        """Print (or write) brute-force counts in the table grammar."""
        restrict = parse_class_spec(args.class_spec) if args.class_spec else None
        if args.three_connected:
            table = brute_force_three_connected(args.nmax, restrict_to=restrict)
            if args.out:
                save_table(table, args.out)
            else:
                print(format_table(table), end="")
            return EXIT_OK
        if restrict is None:
            print("Error: --class is required to enumerate networks", file=sys.stderr)
            return EXIT_ERROR
        enumeration = enumerate_networks(restrict, args.nmax)
        if args.out:
            save_network_counts(enumeration, args.out)
            print(f"Wrote {Path(args.out)}", file=sys.stderr)
        else:
            print(format_network_counts(enumeration), end="")
        return EXIT_OK

    def handle_selftest(self, args) -> int:
        """Run every suite and print one line per suite; exit 1 on any failure."""
        options = SelftestOptions(seed=args.seed, n_max=args.nmax, tables=tuple(args.table))
        results = run_selftest(options)
        for result in results:
            status = "PASS" if result.passed else "FAIL"
            print(f"[{status}] {result.name} ({result.checks} checks)")
            for failure in result.failures[:10]:
                print(f"    - {failure}")
        failed = [r.name for r in results if not r.passed]
        print(f"\n{len(results) - len(failed)}/{len(results)} suites passed")
        return EXIT_ERROR if failed else EXIT_OK
