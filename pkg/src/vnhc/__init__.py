"""Simulation and verification of virtual nonlinear nonholonomic constraints."""

from .chetaev import ChetaevSystem, chetaev_vectorfield, multipliers, sbot_basis
from .constraint import ConstraintSet, ProjectionError, project_velocities
from .control import (ClosedLoopSystem, InputSet, TransversalityError, closed_loop_vectorfield,
                      closed_loop_via_projection, control_law, coupling_matrix,
                      invariance_residual, projectors, symplectic_residual,
                      transversality_check)
from .dynamics import (MechanicalSystem, energy, free_acceleration, free_vectorfield,
                       lagrangian)
from .geometry import (MetricField, SingularMetricError, TangentPoint, chetaev_oneform_at,
                       christoffel_at, complete_lift_metric_at, flat,
                       lagrangian_symplectic_at, sharp)
from .models import DoublePendulumParams, ModelSpec, double_pendulum, load_model
from .sim import Monitors, Trajectory, rk4_step, simulate

__version__ = "0.1.0"
