"""TOML run configuration.

Example::

    [model]
    name = "double_pendulum"
    params = { m = 1.0, l = 1.0, g = 10.0 }
    derivatives = "analytic"     # or "fd"
    # h_fd = 1e-6

    [initial]
    q = [0.4, 0.0]
    qdot = [0.0, 10.0]
    solve_velocity = [0]         # 0-based velocity indices solved from phi = 0

    [integrator]
    h = 0.1
    N = 100

    [run]
    dynamics = "closed_loop"     # closed_loop | chetaev | free
    seed = 42

    [output]
    dir = "out"
    prefix = "run"
    plots = false
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DYNAMICS = ("closed_loop", "chetaev", "free")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str
    q: List[float]
    qdot: List[float]
    h: float
    N: int
    params: Dict[str, Any] = field(default_factory=dict)
    solve_velocity: Optional[List[int]] = None
    derivatives: str = "analytic"
    h_fd: Optional[float] = None
    dynamics: str = "closed_loop"
    seed: int = 42
    out_dir: str = "out"
    prefix: str = "run"
    plots: bool = False

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError(f"integrator.h must be positive, got {self.h}")
        if self.N < 0:
            raise ConfigError(f"integrator.N must be >= 0, got {self.N}")
        if len(self.q) != len(self.qdot):
            raise ConfigError("initial.q and initial.qdot differ in length")
        if self.derivatives not in ("analytic", "fd"):
            raise ConfigError(f"model.derivatives must be 'analytic' or 'fd', got {self.derivatives!r}")
        if self.dynamics not in DYNAMICS:
            raise ConfigError(f"run.dynamics must be one of {DYNAMICS}, got {self.dynamics!r}")

    def with_initial(self, q=None, qdot=None) -> "RunConfig":
        return replace(self, q=list(q if q is not None else self.q),
                       qdot=list(qdot if qdot is not None else self.qdot))

    def to_dict(self) -> dict:
        return {
            "model": {"name": self.model, "params": dict(self.params),
                      "derivatives": self.derivatives, "h_fd": self.h_fd},
            "initial": {"q": list(self.q), "qdot": list(self.qdot),
                        "solve_velocity": self.solve_velocity},
            "integrator": {"h": self.h, "N": self.N},
            "run": {"dynamics": self.dynamics, "seed": self.seed},
            "output": {"dir": self.out_dir, "prefix": self.prefix, "plots": self.plots},
        }


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def config_from_dict(doc: dict) -> RunConfig:
    model = _section(doc, "model")
    initial = _section(doc, "initial")
    integ = _section(doc, "integrator")
    run = _section(doc, "run")
    out = _section(doc, "output")
    try:
        solve = initial.get("solve_velocity")
        return RunConfig(
            model=str(model["name"]),
            params=dict(model.get("params", {})),
            derivatives=str(model.get("derivatives", "analytic")),
            h_fd=float(model["h_fd"]) if model.get("h_fd") is not None else None,
            q=[float(v) for v in initial["q"]],
            qdot=[float(v) for v in initial["qdot"]],
            solve_velocity=[int(i) for i in solve] if solve is not None else None,
            h=float(integ["h"]),
            N=int(integ["N"]),
            dynamics=str(run.get("dynamics", "closed_loop")),
            seed=int(run.get("seed", 42)),
            out_dir=str(out.get("dir", "out")),
            prefix=str(out.get("prefix", "run")),
            plots=bool(out.get("plots", False)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return config_from_dict(doc)


GRID_KEYS = ("q", "qdot")


def load_grid(path) -> List[Dict[str, float]]:
    """Read a sweep grid; the cartesian product of the listed values.

    Keys are ``q1..qn`` and ``dq1..dqn`` under ``[grid]``, each a list of
    values overriding that entry of the initial state.
    """
    import itertools

    try:
        with open(Path(path), "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"grid file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    grid = doc.get("grid")
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("grid file needs a non-empty [grid] table")
    keys = sorted(grid)
    for k in keys:
        if not (k.startswith("q") or k.startswith("dq")) or not k.lstrip("dq").isdigit():
            raise ConfigError(f"bad grid key {k!r}; use q1.., dq1..")
        if not isinstance(grid[k], list) or not grid[k]:
            raise ConfigError(f"grid entry {k!r} must be a non-empty list")
    return [dict(zip(keys, map(float, combo)))
            for combo in itertools.product(*(grid[k] for k in keys))]
