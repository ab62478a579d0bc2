"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure. Failures print one JSON line to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from cvtnet import __version__, dataset, depstats, forest, neuralnet, pathrank, pipeline, render
from cvtnet.config import ConfigError, validate_config

OUTPUT_ENV = "CVTNET_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvtnet",
                     description="Train a small MLP, rank its input-to-output paths by "
                                 "copula correlation variance and compare with a random forest.")
    parser.add_argument("--version", action="version", version=f"cvtnet {__version__}")
    parser.add_argument("command", choices=[*pipeline.STAGES, "all", "validate-config"])
    parser.add_argument("-c", "--config", help="key = value config file")
    parser.add_argument("-o", "--out", help=f"output directory (overrides ${OUTPUT_ENV})")
    parser.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _classify(exc: BaseException) -> tuple[int, str]:
    if isinstance(exc, (UsageError, ConfigError)):
        return EXIT_USAGE, "usage"
    if isinstance(exc, (neuralnet.TrainingDiverged, pathrank.UndefinedImportance,
                        FloatingPointError)):
        return EXIT_NUMERIC, "numeric"
    if isinstance(exc, (dataset.DatasetError, pipeline.MissingArtifact, neuralnet.NetworkError,
                        depstats.DependenceError, pathrank.PathError, forest.ForestError,
                        render.RenderError, OSError, json.JSONDecodeError)):
        return EXIT_DATA, "data"
    return EXIT_NUMERIC, "internal"


def _fail(exc: BaseException) -> int:
    code, kind = _classify(exc)
    print(json.dumps({"error": kind, "code": code, "type": type(exc).__name__,
                      "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    out = None
    try:
        args = build_parser().parse_args(argv)
        overrides = []
        for item in args.set:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            overrides.append(tuple(item.split("=", 1)))
        out_dir = args.out or os.environ.get(OUTPUT_ENV)
        if out_dir:
            overrides.append(("output_dir", out_dir))
        cfg = validate_config(args.config, overrides)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        out = pipeline.Artifacts(cfg.output_dir, cfg)
        out.target(pipeline.CONFIG_ECHO).write_text(cfg.echo(with_output_dir=False),
                                                   encoding="utf-8")
        if args.command == "validate-config":
            print(cfg.echo(), end="")
        elif args.command == "all":
            pipeline.run_all(cfg, out)
        else:
            pipeline.STAGES[args.command](cfg, out)
    except SystemExit as exc:  # --help / --version
        return exc.code or EXIT_OK
    except Exception as exc:
        if out is not None:
            out.discard()
        return _fail(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
