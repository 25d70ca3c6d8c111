import math

import pytest

from rydgate.design import DesignPoint, solve_omega0_for_alpha, solve_v_for_beta


@pytest.fixture(scope="session")
def design_point() -> DesignPoint:
    """The solved controlled-Z operating point at omega_e = 10/t_p."""
    omega0 = solve_omega0_for_alpha(10.0, -2.0 * math.pi)
    v = solve_v_for_beta(10.0, omega0, -3.0 * math.pi)
    return DesignPoint(omega_e=10.0, omega0=omega0, v=v)
