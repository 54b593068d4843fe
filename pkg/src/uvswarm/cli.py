"""Command-line entry point.

Exit codes: 0 clean run, 1 configuration or I/O error, 2 run completed but
recorded faults.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import kernels
from .core import ConfigError
from .engine import run
from .metrics import stability_sweep
from .output import CsvSink, write_json, write_sweep
from .world import ALIASES, BUNDLED, bundled_scenario_path, dump_scenario, load_scenario

OUT_ENV = "UVSWARM_OUT"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAULTS = 2


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if (stem in BUNDLED or stem in ALIASES) and p.parent == Path("."):
        return bundled_scenario_path(stem)
    return p


def _load(path: str):
    p = _resolve(path)
    try:
        return load_scenario(p)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or "results")


def cmd_run(args) -> int:
    cfg = _load(args.scenario)
    if args.seed is not None:
        cfg = cfg.with_updates(seed=args.seed)
    if args.lag or args.tau is not None:
        cfg = cfg.with_updates(kinematics="lag", tau=args.tau if args.tau is not None else cfg.tau)
    if args.zero_noise:
        cfg = cfg.with_updates(noise=cfg.noise.scaled(0.0))
    out = _out_dir(args.out)
    try:
        sink = CsvSink(out)
    except OSError as exc:
        print(f"error: cannot open output directory {out}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    summary = run(cfg, (sink,), workers=args.workers)
    try:
        write_json(out / "summary.json", summary.to_dict())
    except OSError as exc:
        print(f"error: cannot write summary: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if summary.error:
        print(f"error: {summary.error}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{cfg.name}: {summary.steps} steps, min pair {summary.min_pair:.3f} m, "
          f"faults {len(summary.faults)}, wrote {out}")
    return EXIT_FAULTS if summary.faults else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args.scenario)
    scales = [float(s) for s in args.scales.split(",") if s.strip()]
    base = cfg.noise
    levels = [(base.sigma_r * s, base.sigma_az * s) for s in scales]
    seeds = [args.seed_base + i for i in range(args.seeds)]
    result = stability_sweep(cfg, levels, seeds, workers=args.workers)
    out = _out_dir(args.out)
    try:
        write_sweep(out, result)
    except OSError as exc:
        print(f"error: cannot write sweep results: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for row in result.medians():
        print(f"sigma_r={row['sigma_r']:.3f} sigma_az={row['sigma_az']:.3f} "
              f"median min={row['median_run_min_dist']:.3f} avg={row['median_run_avg_dist']:.3f}")
    return EXIT_FAULTS if any(r.faults for r in result.runs) else EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args.scenario)
    sys.stdout.write(dump_scenario(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uvswarm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("--scenario", required=True, help=f"JSON file or bundled name ({', '.join(BUNDLED)})")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--lag", action="store_true", help="first-order velocity lag instead of ideal tracking")
    p.add_argument("--tau", type=float, default=None, help="lag time constant in seconds (implies --lag)")
    p.add_argument("--zero-noise", action="store_true", help="disable localization noise")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="noise-level sweep over many seeds")
    p.add_argument("--scenario", required=True)
    p.add_argument("--scales", default="0,0.5,1,2,3", help="comma-separated noise multipliers")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a scenario and print its normalized form")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).info("kernel backend: %s", kernels.BACKEND)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:  # pragma: no cover
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
