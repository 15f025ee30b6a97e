"""Free (unactuated) mechanical dynamics of a Lagrangian ``1/2 G(qdot, qdot) - V``."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .geometry import (MetricField, as_point, central_difference, checked_solve,
                       christoffel_at)


@dataclass(frozen=True)
class MechanicalSystem:
    metric: MetricField
    potential: Callable[[np.ndarray], float]
    potential_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    h_fd: Optional[float] = None

    @property
    def n(self) -> int:
        return self.metric.n

    def with_fd(self, h_fd: Optional[float] = None) -> "MechanicalSystem":
        """Same system with every derivative taken by central differences."""
        return replace(self, metric=self.metric.with_fd(h_fd),
                       potential_gradient=None, h_fd=h_fd)

    def grad_potential(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.potential_gradient is not None:
            return np.asarray(self.potential_gradient(q), dtype=float)
        return central_difference(lambda x: np.asarray(self.potential(x)), q, self.h_fd)

    def momentum(self, q, qdot) -> np.ndarray:
        """``dL/dqdot = G(q) qdot``."""
        return self.metric.at(q) @ np.asarray(qdot, dtype=float)


def kinetic_energy(system: MechanicalSystem, state) -> float:
    p = as_point(state)
    return 0.5 * float(p.qdot @ system.metric.at(p.q) @ p.qdot)


def lagrangian(system: MechanicalSystem, state) -> float:
    p = as_point(state)
    return kinetic_energy(system, p) - float(system.potential(p.q))


def energy(system: MechanicalSystem, state) -> float:
    """Total energy ``E_L = qdot dL/dqdot - L = K + V``."""
    p = as_point(state)
    return kinetic_energy(system, p) + float(system.potential(p.q))


def energy_differential(system: MechanicalSystem, state,
                        h_fd: Optional[float] = None) -> np.ndarray:
    """``dE_L`` as a bundle covector, by central differences of :func:`energy`."""
    x = as_point(state).as_array()
    return central_difference(lambda y: np.asarray(energy(system, y)), x, h_fd)


def free_acceleration(system: MechanicalSystem, state) -> np.ndarray:
    """Solve ``nabla_qdot qdot = -grad V`` for ``qddot``."""
    p = as_point(state)
    gam = christoffel_at(system.metric, p.q)
    coriolis = np.einsum("kij,i,j->k", gam, p.qdot, p.qdot)
    grad = checked_solve(system.metric.at(p.q), system.grad_potential(p.q),
                         f"metric at q={p.q}")
    return -coriolis - grad


def free_vectorfield(system: MechanicalSystem, state) -> np.ndarray:
    """The second-order field ``G = (qdot, free_acceleration)``."""
    p = as_point(state)
    return np.concatenate([p.qdot, free_acceleration(system, p)])
