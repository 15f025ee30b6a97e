"""Fixed-step RK4 integration with monitors sampled at the stored states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .geometry import TangentPoint, as_point

Field = Callable[[np.ndarray], np.ndarray]


class StepError(RuntimeError):
    """A vector-field evaluation failed while advancing step ``step``."""

    def __init__(self, step: int, cause: BaseException):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


def rk4_step(field: Field, state, h: float) -> np.ndarray:
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.asarray(state.as_array() if isinstance(state, TangentPoint) else state, dtype=float)
    k1 = np.asarray(field(x))
    k2 = np.asarray(field(x + 0.5 * h * k1))
    k3 = np.asarray(field(x + 0.5 * h * k2))
    k4 = np.asarray(field(x + h * k3))
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class Monitors:
    """Pure functions of a stored state; any of them may be omitted."""

    energy: Optional[Callable[[np.ndarray], float]] = None
    constraint: Optional[Callable[[np.ndarray], np.ndarray]] = None
    control: Optional[Callable[[np.ndarray], np.ndarray]] = None
    extra: Dict[str, Callable[[np.ndarray], float]] = field(default_factory=dict)


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    energy: np.ndarray
    residuals: np.ndarray
    extra: Dict[str, np.ndarray] = field(default_factory=dict)
    failure: Optional[StepError] = None

    @property
    def n(self) -> int:
        return self.states.shape[1] // 2

    @property
    def q(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def qdot(self) -> np.ndarray:
        return self.states[:, self.n:]

    def __len__(self) -> int:
        return self.t.size


def _record(monitors: Monitors, x: np.ndarray):
    e = monitors.energy(x) if monitors.energy else np.nan
    r = np.atleast_1d(monitors.constraint(x)) if monitors.constraint else np.zeros(0)
    u = np.atleast_1d(monitors.control(x)) if monitors.control else np.zeros(0)
    extra = {k: fn(x) for k, fn in monitors.extra.items()}
    return e, r, u, extra


def simulate(field: Field, monitors: Optional[Monitors], initial, h: float, N: int,
             t0: float = 0.0) -> Trajectory:
    """Integrate ``N`` RK4 steps of size ``h`` from ``initial``.

    A failure in the field or a monitor stops the run; the states reached so
    far are returned with ``failure`` set.
    """
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    monitors = monitors or Monitors()
    x = as_point(initial).as_array()
    states, records = [], []
    failure = None
    for k in range(N + 1):
        try:
            rec = _record(monitors, x)
        except Exception as exc:  # noqa: BLE001 - reported on the trajectory
            failure = StepError(k, exc)
            break
        states.append(x)
        records.append(rec)
        if k == N:
            break
        try:
            x = rk4_step(field, x, h)
        except Exception as exc:  # noqa: BLE001
            failure = StepError(k, exc)
            break
        if not np.all(np.isfinite(x)):
            failure = StepError(k, FloatingPointError("non-finite state"))
            break

    count = len(states)
    n2 = as_point(initial).as_array().size
    extra_keys = list(monitors.extra)
    return Trajectory(
        t=t0 + h * np.arange(count, dtype=float),
        states=np.array(states).reshape(count, n2),
        controls=np.array([r[2] for r in records]).reshape(count, -1) if count else np.zeros((0, 0)),
        energy=np.array([r[0] for r in records], dtype=float),
        residuals=np.array([r[1] for r in records]).reshape(count, -1) if count else np.zeros((0, 0)),
        extra={k: np.array([r[3][k] for r in records], dtype=float) for k in extra_keys},
        failure=failure,
    )
