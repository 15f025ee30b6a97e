"""Nonlinear nonholonomic (Chetaev) dynamics with Lagrange multipliers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraint import ConstraintSet
from .control import InputSet
from .dynamics import MechanicalSystem, free_vectorfield
from .geometry import SingularMetricError, as_point, checked_solve


class ChetaevSingularError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ChetaevSystem:
    system: MechanicalSystem
    constraints: ConstraintSet


def _pieces(chs: ChetaevSystem, p):
    g = free_vectorfield(chs.system, p)
    _, dv = chs.constraints.jacobians(p)
    w = checked_solve(chs.system.metric.at(p.q), dv.T, f"metric at q={p.q}")
    return g, dv, w


def multipliers(chs: ChetaevSystem, state) -> np.ndarray:
    """Multipliers ``lambda`` solving ``A lambda = -G(phi)``, ``A = dphi/dqdot G^-1 dphi/dqdot^T``."""
    p = as_point(state)
    g, dv, w = _pieces(chs, p)
    drift = chs.constraints.derivative_along(p, g)
    try:
        return checked_solve(dv @ w, -drift, "Chetaev matrix", limit=1e12)
    except SingularMetricError as exc:
        raise ChetaevSingularError(f"Chetaev system singular at state {p.as_array().tolist()} "
                                   f"(condition estimate {exc.condition:.3e})") from exc


def chetaev_vectorfield(chs: ChetaevSystem, state) -> np.ndarray:
    p = as_point(state)
    g, _, w = _pieces(chs, p)
    lam = multipliers(chs, p)
    return g + np.concatenate([np.zeros(p.n), w @ lam])


def sbot_basis(chs: ChetaevSystem, state) -> list[np.ndarray]:
    """Vertical vectors ``(0, G^-1 dphi^a/dqdot)`` spanning the orthogonal complement of S."""
    p = as_point(state)
    _, _, w = _pieces(chs, p)
    return [np.concatenate([np.zeros(p.n), w[:, a]]) for a in range(w.shape[1])]


def matching_inputs(chs: ChetaevSystem, state) -> InputSet:
    """Constant input forms equal to ``dphi/dqdot`` at ``state``.

    The vertical lift of the resulting input distribution coincides with the
    orthogonal complement of S at that state, which is all a pointwise
    comparison of closed-loop and Chetaev fields needs.
    """
    _, dv = chs.constraints.jacobians(as_point(state))
    return InputSet.constant(dv)
