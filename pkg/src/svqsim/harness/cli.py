"""Command line entry point: ``svqsim run|spectrum|validate|version``."""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence

from .. import __version__
from .config import ConfigError, load_config, resolve_output_dir
from .experiments import run_experiment, run_spectrum_sweep

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svqsim", description="Subspace variational quantum simulation experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_overrides(p):
        p.add_argument("config", help="experiment YAML file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (overrides $SVQSIM_OUTPUT_DIR and the config)")
        p.add_argument("--noise-p2", type=float, dest="noise_p2")
        p.add_argument("--shots", type=int)
        return p

    with_overrides(sub.add_parser("run", help="run the experiment end to end"))
    with_overrides(sub.add_parser("spectrum", help="eigenvalues versus bond distance"))
    with_overrides(sub.add_parser("validate", help="check a config and print it fully resolved"))
    sub.add_parser("version", help="print the library version")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.noise_p2 is not None:
        out["noise.p2"] = args.noise_p2
    if args.shots is not None:
        out["shots"] = args.shots
    return out


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    if args.command == "version":
        print(__version__)
        return EXIT_OK
    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(json.dumps(config.model_dump(mode="json"), indent=2))
        return EXIT_OK

    out = resolve_output_dir(config, args.out)
    try:
        if args.command == "spectrum":
            manifest = run_spectrum_sweep(config, out)
        else:
            manifest = run_experiment(config, out)
    except (KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(out / "manifest.json")
    if not manifest.converged:
        print("SSVQE did not converge; see manifest", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
