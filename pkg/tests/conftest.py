import numpy as np
import pytest
from scipy.integrate import solve_ivp

from liewave.harmonics import GroupSpec, build_grid


@pytest.fixture(scope="session")
def torus1_spec():
    return GroupSpec.torus(1, 4)


@pytest.fixture(scope="session")
def torus2_spec():
    return GroupSpec.torus(2, 4)


@pytest.fixture(scope="session")
def su2_spec():
    return GroupSpec.su2(4)


@pytest.fixture(scope="session")
def su2_grid(su2_spec):
    return build_grid(su2_spec)


def damped_mode_oracle(lam2, u0, v0, t):
    """Adaptive high-order integration of v'' + v' + lam2*v = 0."""
    sol = solve_ivp(
        lambda _s, y: (y[1], -y[1] - lam2 * y[0]),
        (0.0, t),
        (u0, v0),
        method="DOP853",
        rtol=1e-13,
        atol=1e-16,
        t_eval=[t],
    )
    return sol.y[0, -1], sol.y[1, -1]


def scalar_pde_oracle(p, u0, v0, t_eval):
    """Dense solution of the constant-data reduction U'' + U' = |U|^p."""
    sol = solve_ivp(
        lambda _s, y: (y[1], -y[1] + abs(y[0]) ** p),
        (0.0, float(np.max(t_eval))),
        (u0, v0),
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        dense_output=True,
    )
    return sol.sol(t_eval)[0]
