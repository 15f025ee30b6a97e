"""Turn a :class:`RunConfig` into a trajectory and write CSV/JSON outputs."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .chetaev import chetaev_vectorfield, multipliers
from .config import ConfigError, RunConfig
from .constraint import ProjectionError, project_velocities
from .control import closed_loop_vectorfield, control_law, invariance_residual
from .dynamics import energy, free_vectorfield
from .geometry import TangentPoint
from .models import ModelSpec, load_model
from .sim import Monitors, Trajectory, simulate


class RuntimeFailure(RuntimeError):
    """Transversality, singularity or projection failure during a run."""


@dataclass
class PreparedRun:
    spec: ModelSpec
    initial: TangentPoint
    field: object
    monitors: Monitors
    m: int


def build_model(config: RunConfig) -> ModelSpec:
    try:
        spec = load_model(config.model, **config.params)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc.args[0] if exc.args else exc)) from None
    if spec.system.n != len(config.q):
        raise ConfigError(f"model {config.model!r} has n={spec.system.n}, "
                          f"initial state has {len(config.q)} entries")
    if config.derivatives == "fd":
        spec = spec.with_fd(config.h_fd)
    return spec


def prepare(config: RunConfig, free: bool = False) -> PreparedRun:
    spec = build_model(config)
    dynamics = "free" if free else config.dynamics
    cons = spec.constraints
    if cons is None and dynamics != "free":
        raise ConfigError("model has no constraint; use --free")
    if dynamics == "closed_loop" and spec.inputs is None:
        raise ConfigError(f"model {config.model!r} has no inputs; set run.dynamics = 'chetaev'")

    initial = TangentPoint(config.q, config.qdot)
    if config.solve_velocity is not None:
        if cons is None:
            raise ConfigError("initial.solve_velocity given but the model has no constraint")
        if len(config.solve_velocity) != cons.m:
            raise ConfigError(f"initial.solve_velocity needs {cons.m} indices")
        try:
            initial = project_velocities(cons, initial, config.solve_velocity)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        except ProjectionError as exc:
            raise RuntimeFailure(str(exc)) from None

    system = spec.system
    monitors = Monitors(energy=lambda x: energy(system, x))
    m = 0
    if dynamics == "closed_loop":
        cls = spec.closed_loop
        field = lambda x: closed_loop_vectorfield(cls, x)  # noqa: E731
        monitors.control = lambda x: control_law(cls, x)
        monitors.extra["inv_residual"] = lambda x: float(np.max(np.abs(invariance_residual(cls, x))))
    elif dynamics == "chetaev":
        chs = spec.chetaev
        field = lambda x: chetaev_vectorfield(chs, x)  # noqa: E731
        monitors.control = lambda x: multipliers(chs, x)
        monitors.extra["inv_residual"] = lambda x: float(
            np.max(np.abs(cons.derivative_along(x, chetaev_vectorfield(chs, x)))))
    else:
        field = lambda x: free_vectorfield(system, x)  # noqa: E731
        if cons is not None:
            monitors.control = lambda x: np.zeros(cons.m)
            monitors.extra["inv_residual"] = lambda x: float(
                np.max(np.abs(cons.derivative_along(x, free_vectorfield(system, x)))))
        else:
            monitors.extra["inv_residual"] = lambda x: float("nan")
    if cons is not None:
        monitors.constraint = cons.evaluate
        m = cons.m
    return PreparedRun(spec, initial, field, monitors, m)


def run(config: RunConfig, free: bool = False) -> tuple[Trajectory, PreparedRun, float]:
    prep = prepare(config, free)
    start = time.perf_counter()
    traj = simulate(prep.field, prep.monitors, prep.initial, config.h, config.N)
    return traj, prep, time.perf_counter() - start


def csv_header(n: int, m: int) -> List[str]:
    return (["t"] + [f"q{i + 1}" for i in range(n)] + [f"dq{i + 1}" for i in range(n)]
            + [f"u{a + 1}" for a in range(m)] + ["E"] + [f"phi{a + 1}" for a in range(m)]
            + ["inv_residual"])


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(traj: Trajectory, path, m: int) -> None:
    n = traj.n
    inv = traj.extra.get("inv_residual", np.full(len(traj), np.nan))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(n, m))
        for k in range(len(traj)):
            row = [traj.t[k], *traj.states[k], *traj.controls[k][:m], traj.energy[k],
                   *traj.residuals[k][:m], inv[k]]
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> dict:
    """Columns of a trajectory CSV as float arrays keyed by header name."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def _jsonable(x):
    x = float(x)
    return x if np.isfinite(x) else None


def summary(traj: Trajectory, config: RunConfig, wall_time: float, m: int) -> dict:
    inv = traj.extra.get("inv_residual", np.full(len(traj), np.nan))
    res = np.abs(traj.residuals[:, :m]) if m else np.zeros((len(traj), 0))
    return {
        "model": config.model,
        "dynamics": config.dynamics,
        "h": config.h,
        "N": config.N,
        "steps_completed": len(traj) - 1,
        "initial_energy": _jsonable(traj.energy[0]),
        "final_energy": _jsonable(traj.energy[-1]),
        "max_abs_phi": _jsonable(res.max()) if res.size else None,
        "max_inv_residual": _jsonable(np.nanmax(inv)) if np.any(np.isfinite(inv)) else None,
        "initial_state": [float(v) for v in traj.states[0]],
        "final_state": [float(v) for v in traj.states[-1]],
        "wall_time_s": wall_time,
        "failure": None if traj.failure is None else {
            "step": traj.failure.step, "message": str(traj.failure.cause)},
    }


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")
