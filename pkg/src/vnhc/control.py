"""Feedback that renders a velocity constraint set invariant.

For a mechanical control system ``nabla_qdot qdot = -grad V + u_a Y^a`` with
``Y^a = sharp(f^a)``, the closed-loop field is ``G + u_a (Y^a)^V``. The
coupling matrix ``C^{ab} = dphi^a/dqdot . Y^b`` decides whether a unique
``u`` keeping ``dphi(Gamma) = 0`` exists; when it does, that ``u`` is
``tau*`` and the closed-loop field equals the oblique projection ``P(G)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .constraint import ConstraintSet
from .dynamics import MechanicalSystem, energy_differential, free_vectorfield
from .geometry import (as_point, checked_solve, lagrangian_symplectic_at,
                       symplectic_flat, vertical_lift_form)

COND_TRANSVERSAL = 1e8


class TransversalityError(ArithmeticError):
    def __init__(self, state, condition: float):
        super().__init__(f"transversality violated at state {np.asarray(state).tolist()} "
                         f"(coupling condition estimate {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True)
class InputSet:
    """Input one-forms ``f^a(q)``; ``forms(q)`` returns an ``m x n`` array of rows."""

    m: int
    forms: Callable[[np.ndarray], np.ndarray]

    def at(self, q) -> np.ndarray:
        return np.asarray(self.forms(np.asarray(q, dtype=float)), dtype=float).reshape(self.m, -1)

    def scaled(self, factor: float) -> "InputSet":
        return InputSet(self.m, lambda q: factor * self.at(q))

    @classmethod
    def constant(cls, rows) -> "InputSet":
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return cls(rows.shape[0], lambda q: rows)


@dataclass(frozen=True)
class Transversality:
    ok: bool
    condition: float


@dataclass(frozen=True)
class ClosedLoopSystem:
    system: MechanicalSystem
    constraints: ConstraintSet
    inputs: InputSet
    cond_threshold: float = COND_TRANSVERSAL

    def __post_init__(self):
        if self.inputs.m != self.constraints.m:
            raise ValueError(f"{self.inputs.m} inputs for {self.constraints.m} constraints")

    def input_fields(self, q) -> np.ndarray:
        """``Y^a = sharp(f^a)`` as the columns of an ``n x m`` array."""
        return checked_solve(self.system.metric.at(q), self.inputs.at(q).T,
                             f"metric at q={np.asarray(q)}")

    def vertical_inputs(self, q) -> np.ndarray:
        """``(Y^a)^V`` as the columns of a ``2n x m`` array."""
        y = self.input_fields(q)
        return np.vstack([np.zeros_like(y), y])


def coupling_matrix(cls: ClosedLoopSystem, state) -> np.ndarray:
    """``C[a, b] = (Y^b)^V(phi^a)``."""
    p = as_point(state)
    _, dv = cls.constraints.jacobians(p)
    return dv @ cls.input_fields(p.q)


def transversality_check(cls: ClosedLoopSystem, state) -> Transversality:
    c = coupling_matrix(cls, state)
    cond = float(np.linalg.cond(c))
    return Transversality(bool(np.isfinite(cond) and cond < cls.cond_threshold), cond)


def _free_drift(cls: ClosedLoopSystem, p) -> tuple[np.ndarray, np.ndarray]:
    g = free_vectorfield(cls.system, p)
    return g, cls.constraints.derivative_along(p, g)


def _solve_coupling(cls: ClosedLoopSystem, p, rhs) -> np.ndarray:
    c = coupling_matrix(cls, p)
    cond = float(np.linalg.cond(c))
    if not (np.isfinite(cond) and cond < cls.cond_threshold):
        raise TransversalityError(p.as_array(), cond)
    return np.linalg.solve(c, rhs)


def control_law(cls: ClosedLoopSystem, state) -> np.ndarray:
    """The unique ``tau*`` with ``C tau* = -G(phi)``."""
    p = as_point(state)
    _, drift = _free_drift(cls, p)
    return _solve_coupling(cls, p, -drift)


def closed_loop_vectorfield(cls: ClosedLoopSystem, state,
                            control: Optional[np.ndarray] = None) -> np.ndarray:
    """``Gamma = G + u_a (Y^a)^V`` with ``u = tau*`` unless ``control`` is given."""
    p = as_point(state)
    g, drift = _free_drift(cls, p)
    u = _solve_coupling(cls, p, -drift) if control is None else np.asarray(control, float)
    return g + cls.vertical_inputs(p.q) @ u


def projectors(cls: ClosedLoopSystem, state) -> tuple[np.ndarray, np.ndarray]:
    """``(P, Q)`` with ``Q = C_ab (Y^a)^V (x) dphi^b`` and ``P = Id - Q``."""
    p = as_point(state)
    dphi = cls.constraints.differential(p)
    q_op = cls.vertical_inputs(p.q) @ _solve_coupling(cls, p, dphi)
    return np.eye(q_op.shape[0]) - q_op, q_op


def closed_loop_via_projection(cls: ClosedLoopSystem, state) -> np.ndarray:
    """``P(G)``, built from the projector rather than from ``tau*``."""
    p = as_point(state)
    proj, _ = projectors(cls, p)
    return proj @ free_vectorfield(cls.system, p)


def invariance_residual(cls: ClosedLoopSystem, state,
                        field: Optional[np.ndarray] = None) -> np.ndarray:
    """``dphi(Gamma)``, zero exactly when ``Gamma`` is tangent to the level set."""
    p = as_point(state)
    if field is None:
        field = closed_loop_vectorfield(cls, p)
    return cls.constraints.derivative_along(p, field)


def symplectic_residual(cls: ClosedLoopSystem, state, h_fd: Optional[float] = None
                        ) -> np.ndarray:
    """``i_Gamma omega_L - dE_L + tau*_a (f^a)^V`` with finite-difference ``omega_L``, ``dE_L``.

    ``omega_L`` is assembled from central differences of the momentum
    ``dL/dqdot``, independently of the Christoffel path used for ``G``.
    """
    p = as_point(state)
    omega = lagrangian_symplectic_at(cls.system.metric, p, momentum=cls.system.momentum,
                                     h_fd=h_fd)
    tau = control_law(cls, p)
    gamma = closed_loop_vectorfield(cls, p, control=tau)
    forcing = vertical_lift_form(tau @ cls.inputs.at(p.q))
    return symplectic_flat(omega, gamma) - energy_differential(cls.system, p, h_fd) + forcing
