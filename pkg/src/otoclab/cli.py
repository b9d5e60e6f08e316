"""Command-line runner: ``otoclab <experiment> --config file.json [--set key=value]... [--plot]``.

Exit status: 0 success, 1 invalid configuration or input, 2 guard-truncated
run (partial results kept), 3 unknown experiment, 4 unwritable output directory.
"""

import argparse
import os
import sys
import time

from . import __version__, io
from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import REGISTRY
from .grid import GridError

EXIT_OK, EXIT_CONFIG, EXIT_TRUNCATED, EXIT_UNKNOWN, EXIT_OUTPUT = 0, 1, 2, 3, 4


def build_parser():
    ap = argparse.ArgumentParser(prog="otoclab", description="Nonlinear kicked-rotor OTOC experiments.")
    ap.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (value parsed as JSON when possible)")
    ap.add_argument("--output-dir", help="shortcut for --set output_dir=...")
    ap.add_argument("--plot", action="store_true", help="also write an SVG per series")
    ap.add_argument("--version", action="version", version=f"otoclab {__version__}")
    return ap


def _fail(code, msg):
    print(f"otoclab: error: {msg}", file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.experiment not in REGISTRY:
        return _fail(EXIT_UNKNOWN, f"unknown experiment {args.experiment!r} (choose from {', '.join(EXPERIMENTS)})")
    overrides = list(args.overrides)
    if args.output_dir:
        overrides.append(f"output_dir={args.output_dir}")
    try:
        config = load_config(args.config, overrides, args.experiment)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))

    out = os.path.join(config.output_dir, config.experiment)
    try:
        io.ensure_writable(out)
    except io.OutputError as exc:
        return _fail(EXIT_OUTPUT, str(exc))
    manifest = os.path.join(out, "manifest.json")
    if os.path.exists(manifest):
        os.remove(manifest)

    t0 = time.perf_counter()
    try:
        res = REGISTRY[config.experiment](config, out)
    except (GridError, ValueError) as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        return _fail(EXIT_OUTPUT, str(exc))

    if args.plot:
        for csv_path, kind, x, y in res.plots:
            try:
                res.files.append(io.plot(csv_path, kind, x=x, y=y, title=config.experiment))
            except ValueError as exc:
                print(f"otoclab: warning: no plot for {csv_path}: {exc}", file=sys.stderr)
    status = EXIT_TRUNCATED if res.truncated else EXIT_OK
    io.write_manifest(manifest, config.to_dict(), __version__, time.perf_counter() - t0,
                      res.guard_events, res.files, res.fits, status)
    for f in res.files:
        print(f)
    if res.truncated:
        print(f"otoclab: guard: {res.message} (partial results kept)", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
