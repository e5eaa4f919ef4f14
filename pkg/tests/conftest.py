import math

import numpy as np
import pytest

from blowup_lab import make_force, make_operator


@pytest.fixture(scope="session")
def op_p2():
    return make_operator(kind="p-laplace", p=2)


@pytest.fixture(scope="session")
def op_p3():
    return make_operator(kind="p-laplace", p=3)


@pytest.fixture(scope="session")
def op_mc():
    return make_operator(kind="mean-curvature")


@pytest.fixture(scope="session")
def force_cubic():
    return make_force(kind="power", q=3)


@pytest.fixture(scope="session")
def force_dead_core():
    return make_force(kind="piecewise-power", a=0.5, b=3)


def psi_power_closed_form(p: float, q: float, r: float) -> float:
    """Tail integral of the reciprocal inverse energy for a pure power force:
    (1 - 1/p)^(1/p) (q+1)^(1/p) p/(q+1-p) r^(-(q+1-p)/p), valid for q > p-1."""
    return ((1.0 - 1.0 / p) ** (1.0 / p) * (q + 1.0) ** (1.0 / p)
            * p / (q + 1.0 - p) * r ** (-(q + 1.0 - p) / p))


def rk4_profile(p: float, q: float, v0: float, x_end: float, h: float = 2e-5):
    """Independent fixed-step RK4 for (A(w'))' = w^q, w(0) = v0, w'(0) = 0,
    A(t) = t^(p-1), as state (w, z = A(w')).  Returns callable w(x) by linear
    interpolation on the step grid."""
    x0 = 1e-8
    c = (v0 ** q) ** (1.0 / (p - 1.0)) * (p - 1.0) / p
    w = v0 + c * x0 ** (p / (p - 1.0))
    z = v0 ** q * x0

    def rhs(state):
        wi, zi = state
        return np.array([zi ** (1.0 / (p - 1.0)) if zi > 0 else 0.0,
                         max(wi, 0.0) ** q])

    xs = [x0]
    ws = [w]
    state = np.array([w, z])
    x = x0
    n = int(math.ceil((x_end - x0) / h))
    hh = (x_end - x0) / n
    for _ in range(n):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * hh * k1)
        k3 = rhs(state + 0.5 * hh * k2)
        k4 = rhs(state + hh * k3)
        state = state + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += hh
        xs.append(x)
        ws.append(state[0])
    xs = np.array(xs)
    ws = np.array(ws)
    return lambda xq: float(np.interp(xq, xs, ws))
