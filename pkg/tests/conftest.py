import pytest

from flks.core import ConstantDecay, ModelParams
from flks.limiters import TanhLimiter


@pytest.fixture
def fig_params():
    """Model constants of the traveling-wave figure runs."""
    return ModelParams(
        D=0.8,
        tau=0.1,
        limiter=TanhLimiter(v_max=1.1, s0=1.4),
        decay=ConstantDecay(0.5),
    )


def rk4_scalar_ode(f, t0, y0, t1, n):
    """Plain RK4 reference integrator for scalar ODEs y' = f(t, y)."""
    t, y = t0, y0
    h = (t1 - t0) / n
    for _ in range(n):
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y
