"""Fixed-substep Runge-Kutta integration."""
import math

import numpy as np

from ..errors import IntegrationError

__all__ = ["integrate_rk", "rk4_step"]


def rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def integrate_rk(f, x0, t0, t1, max_step):
    """Integrate ``dx/dt = f(t, x)`` from t0 to t1 with classical RK4.

    The interval is split into the fewest equal substeps no longer than
    ``max_step``. ``x0`` may hold several states as columns.

    Raises
    ------
    IntegrationError
        When a step produces non-finite values; ``time`` holds the step start.
    """
    if t1 < t0:
        raise ValueError("integrate_rk needs t1 >= t0")
    x = np.array(x0, dtype=float)
    if t1 == t0:
        return x
    n = max(1, math.ceil((t1 - t0) / max_step - 1e-12))
    h = (t1 - t0) / n
    for i in range(n):
        t = t0 + i * h
        x = rk4_step(f, t, x, h)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state after step starting at t = {t}", time=t)
    return x
