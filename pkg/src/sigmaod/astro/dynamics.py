"""Orbital force models and equations of motion in Cartesian and MEE form."""
from dataclasses import dataclass

import numpy as np

from .bodies import MU_MOON, MU_SUN, sun_moon_pos, third_body_accel
from .elements import mee_rates, mee_to_cart, rtn_from_eci
from .gravity import HarmonicsModel, gravity_accel
from .timescale import Epoch, gmst_rotation

__all__ = ["ForceModel", "cartesian_rates", "mee_state_rates", "two_body_rates"]


@dataclass(frozen=True, eq=False)
class ForceModel:
    """Gravity field truncation plus optional Sun/Moon perturbations.

    Times passed to the rate functions are seconds past ``start``.
    """

    gravity: HarmonicsModel
    degree: int = 0
    order: int = 0
    third_bodies: bool = False
    start: Epoch = Epoch(0.0)

    @property
    def mu(self):
        return self.gravity.mu

    def accel(self, t, r_eci, central=True):
        """Total acceleration at ECI positions (3, N); ``central=False`` drops
        the point-mass term."""
        ep = self.start + t
        if self.degree == 0 and central:
            rn = np.sqrt(np.sum(r_eci * r_eci, axis=0))
            a = -self.mu * r_eci / rn ** 3
        else:
            R = gmst_rotation(ep)
            a = R.T @ gravity_accel(R @ r_eci, self.gravity, self.degree, self.order)
            if not central:
                rn = np.sqrt(np.sum(r_eci * r_eci, axis=0))
                a = a + self.mu * r_eci / rn ** 3
        if self.degree == 0 and not central:
            a = np.zeros_like(r_eci)
        if self.third_bodies:
            rs, rm = sun_moon_pos(ep)
            a = a + third_body_accel(r_eci, rs, MU_SUN) + third_body_accel(r_eci, rm, MU_MOON)
        return a


def two_body_rates(mu):
    def f(t, x):
        r = x[:3]
        rn = np.sqrt(np.sum(r * r, axis=0))
        return np.concatenate([x[3:], -mu * r / rn ** 3])
    return f


def cartesian_rates(force):
    """``f(t, x)`` for Cartesian states (6,) or (6, N)."""
    def f(t, x):
        return np.concatenate([x[3:], force.accel(t, x[:3])])
    return f


def mee_state_rates(force):
    """``f(t, s)`` for MEE states: perturbations are everything but the point mass."""
    mu = force.mu

    def f(t, s):
        s = np.asarray(s, dtype=float)
        S = s.reshape(6, -1)
        x = mee_to_cart(S, mu)
        a = force.accel(t, x[:3], central=False)
        return mee_rates(S, rtn_from_eci(x[:3], x[3:], a), mu).reshape(s.shape)
    return f
