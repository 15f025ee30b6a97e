"""Randomised numerical checks of the geometric identities behind the control law.

Each check returns a :class:`CheckResult` holding the worst residual seen over
its samples and the tolerance it is judged against.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, List, Optional

import numpy as np

from .chetaev import ChetaevSystem, chetaev_vectorfield, matching_inputs, sbot_basis
from .constraint import ProjectionError, project_velocities
from .control import (ClosedLoopSystem, closed_loop_vectorfield, closed_loop_via_projection,
                      control_law, coupling_matrix, invariance_residual, projectors,
                      symplectic_residual)
from .geometry import (TangentPoint, central_difference, complete_lift_metric_at,
                       lagrangian_symplectic_at, sharp, symplectic_sharp, vertical_lift,
                       vertical_lift_form)
from .models import ModelSpec


@dataclass
class CheckResult:
    name: str
    samples: int
    max_residual: float
    tolerance: float
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _result(name, residuals, tol, note="", lower_bound=False) -> CheckResult:
    residuals = np.asarray(residuals, dtype=float)
    if lower_bound:
        # the check demands residuals to be at least ``tol``
        worst = float(residuals.min())
        ok = bool(np.all(residuals >= tol))
    else:
        worst = float(residuals.max())
        ok = bool(np.all(residuals < tol))
    return CheckResult(name, int(residuals.size), worst, tol, ok, note)


def sample_states(spec: ModelSpec, rng: np.random.Generator, count: int,
                  free_indices=None, on_manifold: bool = True) -> List[TangentPoint]:
    """Draw ``count`` states from the model sampler, projected onto ``phi = 0``."""
    if spec.sampler is None:
        raise ValueError(f"model {spec.name!r} has no state sampler")
    free = spec.default_free_indices if free_indices is None else free_indices
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 20 * count + 100:
            raise RuntimeError("could not sample enough states on the constraint set")
        q, qdot = spec.sampler(rng)
        p = TangentPoint(q, qdot)
        if on_manifold and spec.constraints is not None:
            try:
                p = project_velocities(spec.constraints, p, free)
            except ProjectionError:
                continue
        out.append(p)
    return out


def random_metric_field(n: int):
    """``G(q) = I + q q^T / (1 + |q|^2)`` with its exact derivative."""
    from .geometry import MetricField

    def matrix(q):
        return np.eye(n) + np.outer(q, q) / (1 + q @ q)

    def derivative(q):
        s = 1 + q @ q
        d = np.zeros((n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            d[:, :, k] = (np.outer(e, q) + np.outer(q, e)) / s - np.outer(q, q) * 2 * q[k] / s ** 2
        return d

    return MetricField(n, matrix, derivative)


def check_lift_pairings(rng, count: int, n: int = 3) -> List[CheckResult]:
    metric = random_metric_field(n)
    mixed, vert = [], []
    for _ in range(count):
        q, qdot = rng.normal(size=n), rng.normal(size=n)
        gc = complete_lift_metric_at(metric, TangentPoint(q, qdot))
        # affine vector fields X(q) = A q + a have complete lift (X, A qdot)
        ax, a0 = rng.normal(size=(n, n)), rng.normal(size=n)
        by, b0 = rng.normal(size=(n, n)), rng.normal(size=n)
        x = ax @ q + a0
        y = by @ q + b0
        xv = vertical_lift(x)
        yv = vertical_lift(y)
        yc = np.concatenate([y, by @ qdot])
        mixed.append(abs(xv @ gc @ yc - x @ metric.at(q) @ y))
        vert.append(abs(xv @ gc @ yv))
    return [
        _result("lift_pairing_vertical_complete", mixed, 1e-8),
        _result("lift_pairing_vertical_vertical", vert, 1e-12),
    ]


def check_vertical_sharps(spec: ModelSpec, states, rng) -> List[CheckResult]:
    """Sharps of vertically lifted one-forms.

    ``sharp_{G^c}(f^V)`` equals ``(sharp_G f)^V``. Under the flat-map
    convention ``<flat(X), Y> = omega_L(X, Y)`` (the one for which the free
    field satisfies ``i_G omega_L = dE_L``) ``sharp_{omega_L}(f^V)`` is
    ``-(sharp_G f)^V``; the check reports the residual of that relation.
    """
    metric = spec.system.metric
    gc_res, om_res = [], []
    for p in states:
        f = rng.normal(size=p.n)
        target = vertical_lift(sharp(metric, p.q, f))
        gc = complete_lift_metric_at(metric, p)
        gc_res.append(np.max(np.abs(np.linalg.solve(gc, vertical_lift_form(f)) - target)))
        omega = lagrangian_symplectic_at(metric, p)
        om_res.append(np.max(np.abs(symplectic_sharp(omega, vertical_lift_form(f)) + target)))
    return [
        _result("complete_lift_sharp_vertical", gc_res, 1e-8),
        _result("symplectic_sharp_vertical", om_res, 1e-8,
                note="sharp_omega(f^V) = -(sharp_G f)^V under <flat X, Y> = omega(X, Y)"),
    ]


def check_free_symplectic(spec: ModelSpec, states) -> CheckResult:
    """Free field ``G`` solves ``i_G omega_L = dE_L`` (finite-difference ``omega_L``, ``dE_L``)."""
    from .dynamics import energy_differential, free_vectorfield
    from .geometry import symplectic_flat
    res = []
    for p in states:
        omega = lagrangian_symplectic_at(spec.system.metric, p, momentum=spec.system.momentum)
        r = symplectic_flat(omega, free_vectorfield(spec.system, p)) - energy_differential(spec.system, p)
        res.append(np.max(np.abs(r)))
    return _result("free_field_symplectic", res, 1e-6)


def check_invariance(cls: ClosedLoopSystem, states, tol: float,
                     flip_sign: bool = False) -> CheckResult:
    res = []
    for p in states:
        if flip_sign:
            field = closed_loop_vectorfield(cls, p, control=-control_law(cls, p))
        else:
            field = closed_loop_vectorfield(cls, p)
        res.append(np.max(np.abs(invariance_residual(cls, p, field))))
    note = "control sign deliberately flipped" if flip_sign else ""
    return _result("closed_loop_invariance", res, tol, note)


def check_symplectic(cls: ClosedLoopSystem, states) -> CheckResult:
    res = [np.max(np.abs(symplectic_residual(cls, p))) for p in states]
    return _result("closed_loop_symplectic", res, 1e-6)


def check_projection(cls: ClosedLoopSystem, states) -> List[CheckResult]:
    agree, algebra = [], []
    for p in states:
        agree.append(np.max(np.abs(closed_loop_vectorfield(cls, p)
                                   - closed_loop_via_projection(cls, p))))
        proj, qop = projectors(cls, p)
        eye = np.eye(proj.shape[0])
        algebra.append(max(np.max(np.abs(proj @ proj - proj)),
                           np.max(np.abs(qop @ qop - qop)),
                           np.max(np.abs(proj + qop - eye)),
                           np.max(np.abs(proj @ qop))))
    return [_result("projection_consistency", agree, 1e-10),
            _result("projector_algebra", algebra, 1e-10)]


def check_uniqueness(cls: ClosedLoopSystem, states, delta: float = 1e-3) -> CheckResult:
    """Perturbing ``tau*`` by ``+-delta`` breaks tangency by at least ``1e-4 |C|``."""
    ratios = []
    for p in states:
        tau = control_law(cls, p)
        scale = np.max(np.abs(coupling_matrix(cls, p)))
        for sgn in (1.0, -1.0):
            u = tau + sgn * delta
            r = np.max(np.abs(invariance_residual(cls, p, closed_loop_vectorfield(cls, p, u))))
            ratios.append(r / (1e-4 * scale))
    return _result("control_uniqueness", ratios, 1.0, note="residual / (1e-4 |C|)",
                   lower_bound=True)


def check_input_scaling(cls: ClosedLoopSystem, states, factor: float = 2.5) -> CheckResult:
    scaled = ClosedLoopSystem(cls.system, cls.constraints, cls.inputs.scaled(factor))
    res = []
    for p in states:
        gdiff = np.max(np.abs(closed_loop_vectorfield(cls, p) - closed_loop_vectorfield(scaled, p)))
        tdiff = np.max(np.abs(control_law(cls, p) / factor - control_law(scaled, p)))
        res.append(max(gdiff, tdiff))
    return _result("input_scaling", res, 1e-12)


def check_chetaev_match(spec: ModelSpec, states) -> CheckResult:
    """With input forms along ``dphi/dqdot`` the closed loop is the Chetaev field."""
    chs = ChetaevSystem(spec.system, spec.constraints)
    res = []
    for p in states:
        cls = ClosedLoopSystem(spec.system, spec.constraints, matching_inputs(chs, p))
        res.append(np.max(np.abs(closed_loop_vectorfield(cls, p) - chetaev_vectorfield(chs, p))))
    return _result("chetaev_match", res, 1e-9)


def check_chetaev_tangency(spec: ModelSpec, states, tol: float) -> List[CheckResult]:
    chs = ChetaevSystem(spec.system, spec.constraints)
    tang, vert = [], []
    for p in states:
        tang.append(np.max(np.abs(spec.constraints.derivative_along(p, chetaev_vectorfield(chs, p)))))
        vert.append(max(np.max(np.abs(b[: p.n])) for b in sbot_basis(chs, p)))
    return [_result("chetaev_tangency", tang, tol),
            _result("sbot_vertical", vert, 1e-12)]


def check_fiber_linear_forms(spec: ModelSpec, states) -> CheckResult:
    """``J*(d fhat) = f^V`` for the fiberwise-linear ``fhat(q, v) = <f(q), v>``."""
    res = []
    for p in states:
        f = spec.inputs.at(p.q)
        for a in range(f.shape[0]):
            def fhat(x, a=a):
                n = x.size // 2
                return np.asarray(spec.inputs.at(x[:n])[a] @ x[n:])
            d = central_difference(fhat, p.as_array())
            jstar = np.concatenate([d[p.n:], np.zeros(p.n)])
            res.append(np.max(np.abs(jstar - vertical_lift_form(f[a]))))
    return _result("fiber_linear_input_forms", res, 1e-8)


def run_checks(spec: ModelSpec, samples: int = 1000, seed: int = 42,
               flip_sign: bool = False,
               progress: Optional[Callable[[str], None]] = None) -> List[CheckResult]:
    """Run every check that applies to ``spec``."""
    rng = np.random.default_rng(seed)
    log = progress or (lambda msg: None)
    fd = spec.system.metric.mode == "fd" or (spec.constraints is not None
                                             and spec.constraints.mode == "fd")
    inv_tol = 1e-5 if fd else 1e-9
    states = sample_states(spec, rng, samples)
    few = states[: min(samples, 100)]
    out: List[CheckResult] = []

    log("lift pairings")
    out += check_lift_pairings(rng, min(samples, 100))
    log("vertical sharps")
    out += check_vertical_sharps(spec, few, rng)
    out.append(check_free_symplectic(spec, few))
    if spec.constraints is not None:
        out += check_chetaev_tangency(spec, states, inv_tol)
        out.append(check_chetaev_match(spec, states))
    cls = spec.closed_loop
    if cls is not None:
        log("closed loop")
        out.append(check_invariance(cls, states, inv_tol, flip_sign))
        out.append(check_symplectic(cls, few))
        out += check_projection(cls, states)
        out.append(check_uniqueness(cls, few))
        out.append(check_input_scaling(cls, few))
        out.append(check_fiber_linear_forms(spec, few))
    return out
