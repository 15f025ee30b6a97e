import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vnhc.constraint import project_velocities  # noqa: E402
from vnhc.control import ClosedLoopSystem  # noqa: E402
from vnhc.geometry import TangentPoint  # noqa: E402
from vnhc.models import double_pendulum, load_model  # noqa: E402
from vnhc.verify import sample_states  # noqa: E402

REFERENCE_STATE = TangentPoint([0.4, 0.0], [-4.0, 10.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def dp():
    return double_pendulum()


@pytest.fixture(scope="session")
def dp_cls(dp):
    system, constraints, inputs = dp
    return ClosedLoopSystem(system, constraints, inputs)


@pytest.fixture(scope="session")
def dp_spec():
    return load_model("double_pendulum")


@pytest.fixture(scope="session")
def dp_states(dp_spec):
    """200 seeded states on the constraint set."""
    return sample_states(dp_spec, np.random.default_rng(7), 200)


@pytest.fixture
def reference_state():
    return REFERENCE_STATE


def on_manifold(constraints, q, qdot, free=(0,)):
    return project_velocities(constraints, TangentPoint(q, qdot), free)
