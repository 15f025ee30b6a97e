"""Independent reference computations used by the tests.

Nothing here calls into the code path it is used to check: derivatives are
taken by plain central differences, and the double pendulum is written out
in explicit ``D(q) qddot + P(q, qdot) = B`` form.
"""

import numpy as np


def fd(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def inv2(a):
    (p, q), (r, s) = a
    det = p * s - q * r
    return np.array([[s, -q], [-r, p]]) / det


def dp_mass(q, m=1.0, l=1.0):
    c2 = np.cos(q[1])
    return m * l * l * np.array([[3 + 2 * c2, 1 + c2], [1 + c2, 1.0]])


def dp_potential(q, m=1.0, l=1.0, g=10.0):
    return -m * g * l * (2 * np.cos(q[0]) + np.cos(q[0] + q[1]))


def dp_P(q, qdot, g=10.0):
    """Coriolis + gravity column for m = l = 1, derived by hand from the Lagrangian.

    A variant with second row ``-s2 qdot1 qdot2 + g s12`` circulates (see
    ``dp_P_variant``); expanding ``d/dt dL/dqdot2 - dL/dq2`` gives
    ``s2 qdot1^2 + g s12`` instead.
    """
    s1, s2, s12 = np.sin(q[0]), np.sin(q[1]), np.sin(q[0] + q[1])
    return np.array([
        -2 * s2 * qdot[0] * qdot[1] - s2 * qdot[1] ** 2 + g * (2 * s1 + s12),
        s2 * qdot[0] ** 2 + g * s12,
    ])


def dp_P_variant(q, qdot, g=10.0):
    """The inconsistent variant; kept only to pin down the difference."""
    s1, s2, s12 = np.sin(q[0]), np.sin(q[1]), np.sin(q[0] + q[1])
    return np.array([
        -2 * s2 * qdot[0] * qdot[1] - s2 * qdot[1] ** 2 + g * (2 * s1 + s12),
        -s2 * qdot[0] * qdot[1] + g * s12,
    ])


def dp_free_accel(q, qdot, g=10.0):
    return -np.linalg.solve(dp_mass(q), dp_P(q, qdot, g))


def dp_phi(q, qdot):
    c2 = np.cos(q[1])
    return q[1] - np.arctan((3 + 2 * c2) * qdot[0] + (1 + c2) * qdot[1])


def dp_lagrangian(x):
    q, v = x[:2], x[2:]
    return 0.5 * v @ dp_mass(q) @ v - dp_potential(q)


def dp_energy(x):
    q, v = x[:2], x[2:]
    return 0.5 * v @ dp_mass(q) @ v + dp_potential(q)


def symplectic_matrix_fd(momentum, q, qdot, h=1e-6):
    """``omega_L(e_I, e_J)`` from central differences of ``p = dL/dqdot``."""
    n = len(q)
    mixed = fd(lambda y: momentum(y, qdot), q, h)
    g = fd(lambda v: momentum(q, v), qdot, h)
    return np.block([[mixed - mixed.T, g], [-g, np.zeros((n, n))]])


def rk4_reference(f, x, h):
    k1 = f(x)
    k2 = f(x + h / 2 * k1)
    k3 = f(x + h / 2 * k2)
    k4 = f(x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
