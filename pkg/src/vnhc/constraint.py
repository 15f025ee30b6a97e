"""Velocity-level constraint sets ``phi: TQ -> R^m`` and their level sets."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import TangentPoint, as_point, central_difference, fd_step

TOL_MEMBERSHIP = 1e-9


class ProjectionError(RuntimeError):
    """Newton projection onto the constraint manifold failed.

    ``state`` and ``residual`` hold the best iterate found.
    """

    def __init__(self, message: str, state: Optional[TangentPoint] = None,
                 residual: float = float("nan")):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.state = state
        self.residual = residual


@dataclass(frozen=True)
class ConstraintSet:
    """``m`` scalar constraints ``phi^a(q, qdot)`` on an ``n``-dimensional Q.

    ``phi``, ``dphi_dq`` and ``dphi_dqdot`` take ``(q, qdot)``; the Jacobians
    return ``m x n`` arrays. Missing Jacobians are taken by central
    differences.
    """

    n: int
    m: int
    phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dphi_dq: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    dphi_dqdot: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    h_fd: Optional[float] = None
    tol_membership: float = TOL_MEMBERSHIP

    def __post_init__(self):
        if not 0 < self.m < self.n:
            raise ValueError(f"need 0 < m < n, got m={self.m}, n={self.n}")

    @property
    def mode(self) -> str:
        analytic = self.dphi_dq is not None and self.dphi_dqdot is not None
        return "analytic" if analytic else "fd"

    def with_fd(self, h_fd: Optional[float] = None) -> "ConstraintSet":
        return replace(self, dphi_dq=None, dphi_dqdot=None, h_fd=h_fd)

    def evaluate(self, state) -> np.ndarray:
        p = as_point(state)
        return np.atleast_1d(np.asarray(self.phi(p.q, p.qdot), dtype=float))

    def contains(self, state) -> bool:
        return bool(np.max(np.abs(self.evaluate(state))) <= self.tol_membership)

    def jacobians(self, state) -> tuple[np.ndarray, np.ndarray]:
        """``(dphi/dq, dphi/dqdot)``, each ``m x n``."""
        p = as_point(state)
        h = self.h_fd if self.h_fd is not None else fd_step(p.as_array())
        if self.dphi_dq is not None:
            dq = np.asarray(self.dphi_dq(p.q, p.qdot), dtype=float)
        else:
            dq = central_difference(lambda q: self.evaluate(TangentPoint(q, p.qdot)), p.q, h)
        if self.dphi_dqdot is not None:
            dv = np.asarray(self.dphi_dqdot(p.q, p.qdot), dtype=float)
        else:
            dv = central_difference(lambda v: self.evaluate(TangentPoint(p.q, v)), p.qdot, h)
        return dq.reshape(self.m, self.n), dv.reshape(self.m, self.n)

    def differential(self, state) -> np.ndarray:
        """Full ``m x 2n`` differential ``dphi`` in the ``(dq, dqdot)`` frame."""
        dq, dv = self.jacobians(state)
        return np.hstack([dq, dv])

    def derivative_along(self, state, vector) -> np.ndarray:
        """``dphi(X)`` for a bundle vector ``X``."""
        return self.differential(state) @ np.asarray(vector, dtype=float)


def project_velocities(constraints: ConstraintSet, state, free_indices: Sequence[int],
                       tol: float = 1e-12, max_iter: int = 50) -> TangentPoint:
    """Move the selected velocity entries so that ``phi = 0``.

    Damped Newton on the ``m x m`` sub-block of ``dphi/dqdot``; configuration
    and the remaining velocities are left alone.
    """
    p = as_point(state)
    idx = [int(i) for i in free_indices]
    if len(idx) != constraints.m:
        raise ValueError(f"need {constraints.m} free velocity indices, got {len(idx)}")
    if len(set(idx)) != len(idx) or any(not 0 <= i < constraints.n for i in idx):
        raise ValueError(f"bad free velocity indices {idx}")

    qdot = p.qdot.copy()
    res = constraints.evaluate(TangentPoint(p.q, qdot))
    best = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if best < tol:
            return TangentPoint(p.q, qdot)
        _, dv = constraints.jacobians(TangentPoint(p.q, qdot))
        block = dv[:, idx]
        cond = np.linalg.cond(block)
        if not np.isfinite(cond) or cond > 1e12:
            raise ProjectionError("singular sub-Jacobian", TangentPoint(p.q, qdot), best)
        step = np.linalg.solve(block, -res)
        t = 1.0
        while True:
            trial = qdot.copy()
            trial[idx] += t * step
            trial_res = constraints.evaluate(TangentPoint(p.q, trial))
            trial_norm = float(np.max(np.abs(trial_res)))
            if trial_norm < best or t < 1e-6:
                break
            t *= 0.5
        if trial_norm >= best:
            break
        qdot, res, best = trial, trial_res, trial_norm
    if best < tol:
        return TangentPoint(p.q, qdot)
    raise ProjectionError("projection did not converge", TangentPoint(p.q, qdot), best)
