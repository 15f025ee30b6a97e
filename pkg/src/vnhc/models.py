"""Built-in models: the shoulder-actuated double pendulum and small test systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .chetaev import ChetaevSystem
from .constraint import ConstraintSet
from .control import ClosedLoopSystem, InputSet
from .dynamics import MechanicalSystem
from .geometry import MetricField


@dataclass(frozen=True)
class DoublePendulumParams:
    m: float = 1.0
    l: float = 1.0
    g: float = 10.0

    def __post_init__(self):
        for name in ("m", "l", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"double pendulum parameter {name} must be positive")


def double_pendulum_metric(params: DoublePendulumParams = DoublePendulumParams()) -> MetricField:
    ml2 = params.m * params.l ** 2

    def matrix(q):
        c2 = np.cos(q[1])
        return ml2 * np.array([[3 + 2 * c2, 1 + c2], [1 + c2, 1.0]])

    def derivative(q):
        s2 = np.sin(q[1])
        d = np.zeros((2, 2, 2))
        d[:, :, 1] = ml2 * np.array([[-2 * s2, -s2], [-s2, 0.0]])
        return d

    return MetricField(2, matrix, derivative)


def double_pendulum_system(params: DoublePendulumParams = DoublePendulumParams()
                           ) -> MechanicalSystem:
    mgl = params.m * params.g * params.l

    def potential(q):
        return -mgl * (2 * np.cos(q[0]) + np.cos(q[0] + q[1]))

    def gradient(q):
        s12 = np.sin(q[0] + q[1])
        return mgl * np.array([2 * np.sin(q[0]) + s12, s12])

    return MechanicalSystem(double_pendulum_metric(params), potential, gradient)


def _dp_arg(q, qdot):
    c2 = np.cos(q[1])
    return (3 + 2 * c2) * qdot[0] + (1 + c2) * qdot[1]


def double_pendulum_constraint() -> ConstraintSet:
    """``q2 - arctan((3 + 2 cos q2) qdot1 + (1 + cos q2) qdot2) = 0``."""

    def phi(q, qdot):
        return np.array([q[1] - np.arctan(_dp_arg(q, qdot))])

    def dphi_dq(q, qdot):
        w = _dp_arg(q, qdot)
        s2 = np.sin(q[1])
        return np.array([[0.0, 1 + s2 * (2 * qdot[0] + qdot[1]) / (1 + w * w)]])

    def dphi_dqdot(q, qdot):
        w = _dp_arg(q, qdot)
        c2 = np.cos(q[1])
        return -np.array([[3 + 2 * c2, 1 + c2]]) / (1 + w * w)

    return ConstraintSet(2, 1, phi, dphi_dq, dphi_dqdot)


def shoulder_input() -> InputSet:
    """Torque at the shoulder, ``F = u dq1``."""
    return InputSet.constant([[1.0, 0.0]])


def chetaev_matching_input() -> InputSet:
    """Input form along ``dphi/dqdot`` of the double-pendulum constraint.

    ``dphi/dqdot`` is ``-(3 + 2 cos q2, 1 + cos q2) / (1 + w^2)``; its direction
    depends on ``q`` only, so this one-form on Q reproduces the Chetaev
    reaction direction at every state.
    """
    def forms(q):
        c2 = np.cos(q[1])
        return np.array([[3 + 2 * c2, 1 + c2]])

    return InputSet(1, forms)


def double_pendulum(params: DoublePendulumParams = DoublePendulumParams()):
    """``(MechanicalSystem, ConstraintSet, InputSet)`` for the shoulder-actuated double pendulum."""
    return double_pendulum_system(params), double_pendulum_constraint(), shoulder_input()


def identity_metric(n: int) -> MetricField:
    return MetricField(n, lambda q: np.eye(n), lambda q: np.zeros((n, n, n)))


def free_particle(n: int = 2) -> MechanicalSystem:
    return MechanicalSystem(identity_metric(n), lambda q: 0.0, lambda q: np.zeros(n))


def unit_speed_constraint() -> ConstraintSet:
    return ConstraintSet(
        2, 1,
        lambda q, v: np.array([v[0] ** 2 + v[1] ** 2 - 1.0]),
        lambda q, v: np.zeros((1, 2)),
        lambda q, v: np.array([[2 * v[0], 2 * v[1]]]),
    )


def unit_speed_particle() -> ChetaevSystem:
    return ChetaevSystem(free_particle(2), unit_speed_constraint())


def pendulum_1d(g: float = 10.0, l: float = 1.0) -> MechanicalSystem:
    """Single pendulum, unit mass: ``L = 1/2 l^2 qdot^2 + g l cos q``."""
    return MechanicalSystem(
        MetricField(1, lambda q: np.array([[l * l]]), lambda q: np.zeros((1, 1, 1))),
        lambda q: -g * l * np.cos(q[0]),
        lambda q: np.array([g * l * np.sin(q[0])]),
    )


def harmonic_oscillator() -> MechanicalSystem:
    return MechanicalSystem(identity_metric(1), lambda q: 0.5 * q[0] ** 2, lambda q: q.copy())


@dataclass(frozen=True)
class ModelSpec:
    """What the CLI needs to run a named model."""

    name: str
    system: MechanicalSystem
    constraints: Optional[ConstraintSet] = None
    inputs: Optional[InputSet] = None
    # sample_state(rng) -> (q, qdot) before projection
    sampler: Optional[Callable] = None
    default_free_indices: tuple = ()

    @property
    def closed_loop(self) -> Optional[ClosedLoopSystem]:
        if self.constraints is None or self.inputs is None:
            return None
        return ClosedLoopSystem(self.system, self.constraints, self.inputs)

    @property
    def chetaev(self) -> Optional[ChetaevSystem]:
        if self.constraints is None:
            return None
        return ChetaevSystem(self.system, self.constraints)

    def with_fd(self, h_fd: Optional[float] = None) -> "ModelSpec":
        return ModelSpec(self.name, self.system.with_fd(h_fd),
                         self.constraints.with_fd(h_fd) if self.constraints else None,
                         self.inputs, self.sampler, self.default_free_indices)


def _dp_sampler(rng):
    # q2 kept inside (-1.2, 1.2): on the constraint set q2 = arctan(w), so
    # |q2| -> pi/2 sends |w| and the control to infinity.
    q = np.array([rng.uniform(-np.pi, np.pi), rng.uniform(-1.2, 1.2)])
    qdot = rng.uniform(-5.0, 5.0, size=2)
    return q, qdot


def _plane_sampler(rng):
    return rng.uniform(-2.0, 2.0, size=2), rng.uniform(-2.0, 2.0, size=2)


def _double_pendulum_spec(**params) -> ModelSpec:
    system, constraints, inputs = double_pendulum(DoublePendulumParams(**params))
    return ModelSpec("double_pendulum", system, constraints, inputs, _dp_sampler, (0,))


def _free_particle_spec(n: int = 2) -> ModelSpec:
    return ModelSpec("free_particle", free_particle(int(n)), sampler=_plane_sampler)


def _unit_speed_spec() -> ModelSpec:
    chs = unit_speed_particle()
    return ModelSpec("unit_speed_particle", chs.system, chs.constraints, None,
                     _plane_sampler, (1,))


def _pendulum_spec(**params) -> ModelSpec:
    return ModelSpec("pendulum_1d", pendulum_1d(**params),
                     sampler=lambda rng: (rng.uniform(-3, 3, 1), rng.uniform(-3, 3, 1)))


MODELS: Dict[str, Callable[..., ModelSpec]] = {
    "double_pendulum": _double_pendulum_spec,
    "free_particle": _free_particle_spec,
    "unit_speed_particle": _unit_speed_spec,
    "pendulum_1d": _pendulum_spec,
}


def load_model(name: str, **params) -> ModelSpec:
    try:
        factory = MODELS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; known: {sorted(MODELS)}") from None
    return factory(**params)
