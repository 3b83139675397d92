"""Command line entry point: ``peterlin run|compare|validate|version``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .config import format_report, load_config
from .driver import compare_closure, run
from .errors import BlowupError, ConfigError, PeterlinError, PositivityError, StepRejectedError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _build_parser():
    parser = argparse.ArgumentParser(prog="peterlin", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run the mode selected in the config file"),
                            ("compare", "macroscopic vs kinetic closure comparison"),
                            ("validate", "report admissibility and the ratio condition")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config")
    sub.add_parser("version", help="print the package version")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "version":
        print(f"peterlin {__version__}")
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            sys.stdout.write(format_report(cfg))
            return EXIT_OK
        sys.stdout.write(format_report(cfg))
        if args.command == "compare" or cfg.mode == "closure_compare":
            report = compare_closure(cfg)
            sys.stdout.write(report.to_text())
        else:
            result = run(cfg)
            print(f"wrote {len(result.rows)} diagnostics rows to {result.output_dir}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowupError, StepRejectedError, PositivityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PeterlinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
