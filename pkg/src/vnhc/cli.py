"""Command-line front end: ``vnhc simulate | check | sweep | plot``.

Exit codes: 0 ok, 1 config error, 2 runtime error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, RunConfig, config_from_dict, load_config, load_grid
from .constraint import ProjectionError
from .geometry import SingularMetricError
from .runner import RuntimeFailure, read_csv, run, summary, write_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3
WORKERS_ENV = "VNHC_WORKERS"

log = logging.getLogger("vnhc")


def _simulate_to(config: RunConfig, out_dir: Path, prefix: str, free: bool, plots: bool) -> dict:
    traj, prep, wall = run(config, free)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{prefix}.csv"
    write_csv(traj, csv_path, prep.m)
    info = summary(traj, config, wall, prep.m)
    info["csv"] = str(csv_path)
    if plots:
        from .plotting import plot_trajectory
        info["figures"] = [str(p) for p in plot_trajectory(read_csv(csv_path), out_dir, prefix)]
    write_json(info, out_dir / f"{prefix}_summary.json")
    return info


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    out_dir = Path(args.out or config.out_dir)
    info = _simulate_to(config, out_dir, config.prefix, args.free, args.plot or config.plots)
    if info["failure"] is not None:
        log.error("run stopped at step %d: %s", info["failure"]["step"], info["failure"]["message"])
        return EXIT_RUNTIME
    log.info("wrote %s (%d steps), E %.6g -> %.6g", info["csv"], info["steps_completed"],
             info["initial_energy"], info["final_energy"])
    return EXIT_OK


def cmd_check(args) -> int:
    from .runner import build_model
    from .verify import run_checks

    config = load_config(args.config)
    spec = build_model(config)
    seed = config.seed if args.seed is None else args.seed
    start = time.perf_counter()
    results = run_checks(spec, samples=args.samples, seed=seed, flip_sign=args.flip_control_sign,
                         progress=log.info)
    report = {
        "model": config.model,
        "derivatives": config.derivatives,
        "samples": args.samples,
        "seed": seed,
        "wall_time_s": time.perf_counter() - start,
        "checks": [r.as_dict() for r in results],
        "all_passed": all(r.passed for r in results),
    }
    out = Path(args.out or Path(config.out_dir) / f"{config.prefix}_check.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_json(report, out)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:28s} n={r.samples:<5d} "
              f"max={r.max_residual:.3e} tol={r.tolerance:.1e}")
    return EXIT_OK if report["all_passed"] else EXIT_VERIFY


def _grid_config(config: RunConfig, point: dict) -> RunConfig:
    q, qdot = list(config.q), list(config.qdot)
    for key, val in point.items():
        target, idx = (qdot, int(key[2:]) - 1) if key.startswith("dq") else (q, int(key[1:]) - 1)
        if not 0 <= idx < len(target):
            raise ConfigError(f"grid key {key!r} out of range for n={len(q)}")
        target[idx] = val
    return config.with_initial(q, qdot)


def _sweep_point(config_doc: dict, point: dict, out_dir: str, prefix: str, free: bool) -> dict:
    entry = {"point": point, "prefix": prefix}
    try:
        config = _grid_config(config_from_dict(config_doc), point)
        entry["summary"] = _simulate_to(config, Path(out_dir), prefix, free, False)
        entry["ok"] = entry["summary"]["failure"] is None
    except Exception as exc:  # noqa: BLE001 - recorded per point
        entry["ok"] = False
        entry["error"] = f"{type(exc).__name__}: {exc}"
    return entry


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    points = load_grid(args.grid)
    out_dir = Path(args.out or config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = config.to_dict()
    workers = args.workers or int(os.environ.get(WORKERS_ENV, "0") or 0) or min(len(points), os.cpu_count() or 1)
    jobs = [(doc, p, str(out_dir), f"{config.prefix}_{k:04d}", args.free) for k, p in enumerate(points)]
    if workers <= 1 or len(points) == 1:
        entries = [_sweep_point(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_sweep_point, *zip(*jobs)))
    index = {"config": doc, "points": entries}
    write_json(index, out_dir / f"{config.prefix}_index.json")
    failed = sum(not e["ok"] for e in entries)
    log.info("sweep: %d points, %d failed", len(entries), failed)
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


def cmd_plot(args) -> int:
    from .plotting import plot_trajectory

    csv_path = Path(args.csv)
    if not csv_path.exists():
        raise ConfigError(f"no such CSV: {csv_path}")
    out = Path(args.out or csv_path.parent)
    for p in plot_trajectory(read_csv(csv_path), out, args.prefix or csv_path.stem, wrap=args.wrap):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnhc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one run, write CSV + summary JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--free", action="store_true", help="simulate the unactuated dynamics")
    p.add_argument("--plot", action="store_true", help="also render figures next to the CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="run the randomised identity checks")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="report path")
    p.add_argument("--flip-control-sign", action="store_true",
                   help="debug: negate the control in the invariance check")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="one run per point of a grid of initial conditions")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out")
    p.add_argument("--free", action="store_true")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or cpu count)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render figures from a trajectory CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out")
    p.add_argument("--prefix")
    p.add_argument("--wrap", action="store_true", help="wrap angles to (-pi, pi]")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeFailure, SingularMetricError, ProjectionError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
