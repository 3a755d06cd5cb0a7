"""Command line entry point: ``tgopt <mode> --config <path>``.

Exit status: 0 all checks passed, 1 a check failed, 2 configuration
error, 3 a numerical hypothesis was violated.
"""

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, HypothesisError, IncompatibleShape, ParseError
from .runner import FORMATS, MODES, parse_config, run_experiment

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_HYPOTHESIS = 0, 1, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(prog="tgopt", description="Two-grid optimal interpolation experiments.")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="JSON experiment file")
    parser.add_argument("--out", help="report path (default: config output_path, else stdout)")
    parser.add_argument("--format", choices=FORMATS, help="report format (default json)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--tol", type=float, help="override the config tolerance")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        path = Path(args.config)
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(str(exc), "--config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", "--config") from None
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("must be positive", "--tol")
        cfg = parse_config(
            doc, mode=args.mode, base_dir=path.parent, seed=args.seed, tol=args.tol, out=args.out, fmt=args.format
        )
        report = run_experiment(cfg)
    except (ConfigError, IncompatibleShape, ParseError) as exc:
        print(f"tgopt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as exc:
        print(f"tgopt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    if not cfg.output_path:
        sys.stdout.write(report.to_json() + "\n" if cfg.format == "json" else report.to_csv())
    for name, c in report.checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name} (residual {c['residual']:.3e})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
