"""Command line front end: run, synth, validate-tess, report.

Every failure prints one machine-readable JSON line to stderr and exits
nonzero.  validate-tess exits 2 when the tessellation itself is invalid,
so scripts can tell bad geometry from operational errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    load_report,
    run_experiment,
    write_report,
)
from .synth import CityPattern, generate_synthetic_city, write_synthetic_city
from .tessellation import (
    BoundingBox,
    TessellationError,
    build_square_grid,
    load_polygon_tessellation,
    validate,
)

__all__ = ["main"]


def _fail(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return 1


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    out_dir = Path(args.out) if args.out else cfg.output_dir
    if out_dir is None:
        return _fail("config", "no output directory: pass --out or set output_dir")
    report = run_experiment(cfg)
    paths = write_report(report, out_dir)
    for key in ("json", "csv", "markdown"):
        print(f"wrote {paths[key]}")
    return 0


def _cmd_synth(args) -> int:
    pattern = CityPattern(
        peak_low=args.peak_low, peak_high=args.peak_high, noise_amplitude=args.noise
    )
    city = generate_synthetic_city(
        seed=args.seed,
        n_tiles=args.tiles,
        days=args.days,
        interval_seconds=args.interval_seconds,
        pattern=pattern,
    )
    paths = write_synthetic_city(city, args.out)
    for key in ("city", "trips", "tensor"):
        print(f"wrote {paths[key]}")
    print(f"total trips: {city.meta['total_trips']}")
    return 0


def _cmd_validate_tess(args) -> int:
    if args.geojson:
        text = Path(args.geojson).read_text("utf-8")
        tess = load_polygon_tessellation(text)
    else:
        west, south, east, north, cell_size = args.grid
        tess = build_square_grid(
            BoundingBox(west=west, south=south, east=east, north=north), cell_size
        )
    report = validate(tess)
    print(f"{tess.n} tiles: {report.summary()}")
    return 0 if report.ok else 2


def _cmd_report(args) -> int:
    report = load_report(args.report)
    paths = write_report(report, args.out)
    for key in ("json", "csv", "markdown"):
        print(f"wrote {paths[key]}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odflow",
        description="origin-destination flow forecasting toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment described by a JSON config")
    p_run.add_argument("--config", required=True, help="path to the experiment config")
    p_run.add_argument("--out", help="report output directory (overrides config output_dir)")
    p_run.set_defaults(func=_cmd_run)

    p_synth = sub.add_parser("synth", help="generate a deterministic synthetic city")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.add_argument("--tiles", type=int, default=16)
    p_synth.add_argument("--days", type=int, default=14)
    p_synth.add_argument("--interval-seconds", type=float, default=3600.0)
    p_synth.add_argument("--peak-low", type=float, default=2.0)
    p_synth.add_argument("--peak-high", type=float, default=10.0)
    p_synth.add_argument("--noise", type=int, default=1, help="integer noise amplitude")
    p_synth.set_defaults(func=_cmd_synth)

    p_val = sub.add_parser("validate-tess", help="check a tessellation's structural properties")
    source = p_val.add_mutually_exclusive_group(required=True)
    source.add_argument("--geojson", help="polygon tessellation file")
    source.add_argument(
        "--grid",
        nargs=5,
        type=float,
        metavar=("WEST", "SOUTH", "EAST", "NORTH", "CELL_SIZE"),
        help="build and check a square grid",
    )
    p_val.set_defaults(func=_cmd_validate_tess)

    p_rep = sub.add_parser("report", help="re-render a saved report.json")
    p_rep.add_argument("--report", required=True, help="path to report.json")
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", str(exc))
    except TessellationError as exc:
        return _fail("tessellation", str(exc))
    except ExperimentError as exc:
        return _fail("experiment", str(exc))
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__.lower(), str(exc))


if __name__ == "__main__":
    sys.exit(main())
