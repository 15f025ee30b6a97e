"""Riemannian and tangent-bundle objects evaluated at a point.

Everything here works in natural bundle coordinates ``(q, qdot)``. Vectors
on ``TQ`` are length-``2n`` arrays ordered ``(d/dq, d/dqdot)``; covectors
on ``TQ`` are length-``2n`` arrays ordered ``(dq, dqdot)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

COND_LIMIT = 1e12


class SingularMetricError(ArithmeticError):
    """Raised when a matrix that must be inverted is (numerically) singular."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


def fd_step(x: np.ndarray, base: float = 1e-6) -> float:
    """Default central-difference step, scaled with the size of ``x``."""
    return base * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0)


def central_difference(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                       h: Optional[float] = None) -> np.ndarray:
    """Central-difference derivative of ``fun`` at ``x``.

    The derivative index is appended as the last axis, so a function returning
    shape ``S`` yields an array of shape ``S + (len(x),)``.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = fd_step(x)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def checked_solve(a: np.ndarray, b: np.ndarray, what: str = "matrix",
                  limit: float = COND_LIMIT) -> np.ndarray:
    """Solve ``a x = b`` after a condition-number guard."""
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > limit:
        raise SingularMetricError(f"{what} not invertible", float(cond))
    return np.linalg.solve(a, b)


@dataclass(frozen=True)
class TangentPoint:
    """A point ``(q, qdot)`` of the tangent bundle."""

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        qdot = np.array(self.qdot, dtype=float).reshape(-1)
        if q.shape != qdot.shape:
            raise ValueError(f"q has {q.size} entries but qdot has {qdot.size}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qdot)

    @property
    def n(self) -> int:
        return self.q.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.qdot])

    @classmethod
    def from_array(cls, x) -> "TangentPoint":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size % 2:
            raise ValueError("bundle state must have even length")
        n = x.size // 2
        return cls(x[:n], x[n:])


def as_point(state) -> TangentPoint:
    """Accept a TangentPoint or a flat ``(q, qdot)`` array."""
    if isinstance(state, TangentPoint):
        return state
    return TangentPoint.from_array(state)


@dataclass(frozen=True)
class MetricField:
    """A Riemannian metric ``q -> G(q)`` with access to its first derivatives.

    ``derivative(q)`` must return ``dG[i, j, k] = dG_ij/dq^k``. When it is
    omitted, derivatives come from central differences with step ``h_fd``
    (``None`` means ``1e-6 * max(1, |q|_inf)``).
    """

    n: int
    matrix: Callable[[np.ndarray], np.ndarray]
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    h_fd: Optional[float] = None

    @property
    def mode(self) -> str:
        return "analytic" if self.derivative is not None else "fd"

    def with_fd(self, h_fd: Optional[float] = None) -> "MetricField":
        return MetricField(self.n, self.matrix, None, h_fd)

    def at(self, q) -> np.ndarray:
        return np.asarray(self.matrix(np.asarray(q, dtype=float)), dtype=float)

    def derivative_at(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.derivative is not None:
            return np.asarray(self.derivative(q), dtype=float)
        return central_difference(self.matrix, q, self.h_fd)

    def inverse_at(self, q) -> np.ndarray:
        g = self.at(q)
        return checked_solve(g, np.eye(self.n), f"metric at q={np.asarray(q)}")


def christoffel_at(metric: MetricField, q) -> np.ndarray:
    """Christoffel symbols of the Levi-Civita connection, indexed ``[k, i, j]``."""
    q = np.asarray(q, dtype=float)
    dg = metric.derivative_at(q)
    # first[l, i, j] = d_i G_jl + d_j G_il - d_l G_ij
    first = (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg)
             - np.einsum("ijl->lij", dg))
    g = metric.at(q)
    n = metric.n
    gam = 0.5 * checked_solve(g, first.reshape(n, n * n),
                              f"metric at q={q}").reshape(n, n, n)
    # exact symmetry in the lower pair
    return 0.5 * (gam + np.swapaxes(gam, 1, 2))


def sharp(metric: MetricField, q, covector) -> np.ndarray:
    """Raise an index: the vector ``X`` with ``G X = covector``."""
    return checked_solve(metric.at(q), np.asarray(covector, dtype=float),
                         f"metric at q={np.asarray(q)}")


def flat(metric: MetricField, q, vector) -> np.ndarray:
    """Lower an index: ``G_ij X^i``."""
    return metric.at(q) @ np.asarray(vector, dtype=float)


def vertical_lift(vector) -> np.ndarray:
    """``X -> X^V = (0, X)`` as a bundle vector."""
    x = np.asarray(vector, dtype=float)
    return np.concatenate([np.zeros_like(x), x])


def vertical_lift_form(covector) -> np.ndarray:
    """``alpha -> alpha^V = (alpha, 0)``, the pullback of a one-form on Q."""
    a = np.asarray(covector, dtype=float)
    return np.concatenate([a, np.zeros_like(a)])


def complete_lift(field: Callable[[np.ndarray], np.ndarray], state,
                  jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
                  ) -> np.ndarray:
    """Complete lift ``X^c = (X, qdot^j dX/dq^j)`` of a vector field on Q."""
    p = as_point(state)
    x = np.asarray(field(p.q), dtype=float)
    dx = jacobian(p.q) if jacobian is not None else central_difference(field, p.q)
    return np.concatenate([x, np.asarray(dx) @ p.qdot])


def complete_lift_metric_at(metric: MetricField, state) -> np.ndarray:
    """The semi-Riemannian metric ``G^c`` on TQ as a ``2n x 2n`` matrix."""
    p = as_point(state)
    g = metric.at(p.q)
    upper = np.einsum("ijk,k->ij", metric.derivative_at(p.q), p.qdot)
    n = metric.n
    return np.block([[upper, g], [g, np.zeros((n, n))]])


def lagrangian_symplectic_at(metric: MetricField, state,
                             momentum: Optional[Callable] = None,
                             h_fd: Optional[float] = None) -> np.ndarray:
    """Component matrix ``W[I, J] = omega_L(e_I, e_J)`` of ``omega_L = -d(J* dL)``.

    For a mechanical Lagrangian the layout is ``[[A, G], [-G, 0]]`` with
    ``A_ij = d2L/dqdot^i dq^j - d2L/dqdot^j dq^i``. With the default
    ``momentum=None`` the mixed second derivatives come from the metric
    derivative. Passing ``momentum(q, qdot) -> dL/dqdot`` instead builds
    both blocks by central differences of the Poincare-Cartan coefficients.

    The flat map follows ``<flat(X), Y> = omega_L(X, Y)``, i.e.
    ``flat(X) = W.T @ X``; see :func:`symplectic_flat`.
    """
    p = as_point(state)
    n = metric.n
    if momentum is None:
        g = metric.at(p.q)
        # mixed[i, j] = d/dq^j (G_ik qdot^k)
        mixed = np.einsum("ikj,k->ij", metric.derivative_at(p.q), p.qdot)
    else:
        mixed = central_difference(lambda q: momentum(q, p.qdot), p.q, h_fd)
        g = central_difference(lambda v: momentum(p.q, v), p.qdot, h_fd)
    a = mixed - mixed.T
    return np.block([[a, g], [-g, np.zeros((n, n))]])


def symplectic_flat(omega: np.ndarray, vector) -> np.ndarray:
    """``i_X omega``: the covector ``Y -> omega(X, Y)``."""
    return omega.T @ np.asarray(vector, dtype=float)


def symplectic_sharp(omega: np.ndarray, covector) -> np.ndarray:
    """Inverse of :func:`symplectic_flat`."""
    return checked_solve(omega.T, np.asarray(covector, dtype=float),
                         "symplectic matrix")


def chetaev_oneform_at(constraints, state, index: int) -> np.ndarray:
    """``J*(d phi^a) = (dphi^a/dqdot, 0)`` as a bundle covector."""
    if not 0 <= index < constraints.m:
        raise IndexError(f"constraint index {index} out of range for m={constraints.m}")
    _, dv = constraints.jacobians(state)
    return vertical_lift_form(dv[index])
