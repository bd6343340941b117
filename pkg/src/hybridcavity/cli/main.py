"""``hybridcavity`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys

from .. import __version__
from ..errors import CavityError
from . import config as config_mod
from .commands import COMMANDS, SweepResult

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".12g")
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return float(format(value, ".12g")) if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return _jsonable(float(value))


def metadata(command: str, cfg: config_mod.RunConfig, extra: dict | None = None) -> dict:
    text = cfg.to_text()
    meta = {
        "tool": "hybridcavity",
        "version": __version__,
        "command": command,
        "config": cfg.to_flat(),
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
    }
    if extra:
        meta["results"] = extra
    return _jsonable(meta)


def render(result: SweepResult, meta: dict, fmt: str) -> str:
    if fmt == "json":
        data = {c: [_jsonable(r[c]) for r in result.rows] for c in result.columns}
        return json.dumps({"metadata": meta, "data": data}, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_fmt(row[c]) for c in result.columns])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # downstream closed early (e.g. ``| head``); silence the flush at exit
            sys.stdout = open(os.devnull, "w")
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run configuration file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--seed", type=int, default=None, help="reserved; the model is deterministic")

    parser = argparse.ArgumentParser(
        prog="hybridcavity", description="Design calculations for hybrid diamond-air Fabry-Perot microcavities."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "sweep-thickness": "relative intensity, linewidth and ZPL emission versus diamond thickness",
        "losses": "effective loss channels versus thickness, or the mode trade-off boundary versus roughness",
        "modes": "Gaussian mode waists, mirror spot size and clipping (analytic and numeric)",
        "optimize": "optimal outcoupler transmission versus vibrations, or figures of merit versus T_o",
        "field-profile": "standing-wave field through the resonant cavity",
        "validate": "check a configuration and print its normalised form",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = config_mod.load(args.config)
        if args.command == "validate":
            _emit(cfg.to_text(), args.out)
            return EXIT_OK
        result = COMMANDS[args.command](cfg, jobs=args.jobs)
        _emit(render(result, metadata(args.command, cfg, result.metadata), args.format), args.out)
    except config_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CavityError, ValueError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
