"""Command-line entry point: ``lrloc run|validate|presets|version``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import UsageError
from .experiment import ConfigError, load_config, preset_names, resolve, run_experiment
from .params import Params, params_check

OUT_ENV = "LRLOC_OUT_DIR"


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrloc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None, help="override seeds.base")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    run.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or ./results)")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")

    pre = sub.add_parser("presets", help="parameter presets")
    pre.add_argument("action", choices=["list"])

    sub.add_parser("version", help="print the package version")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "version":
            print(__version__)
            return 0
        if args.command == "presets":
            for name, desc in preset_names():
                print(f"{name}\t{desc}")
            return 0
        cfg = load_config(args.config)
        if args.command == "validate":
            resolved = resolve(cfg)
            bad = [r.id for r in params_check(Params.from_dict(resolved["params"])) if not r.satisfied]
            print(f"config OK ({cfg.kind})")
            if bad:
                print("warning: parameter relations violated: " + ", ".join(bad))
            return 0
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        out = args.out or cfg.output_dir or os.environ.get(OUT_ENV) or "results"
        summary = run_experiment(cfg, out, jobs=args.jobs, seed=args.seed)
        if not summary["params_all_satisfied"]:
            bad = [r["id"] for r in summary["params_check"] if not r["satisfied"]]
            print("warning: parameter relations violated: " + ", ".join(bad), file=sys.stderr)
        print(json.dumps({"directory": summary["directory"], "files": summary["files"]}))
        return 0
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numeric failures and I/O
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
