"""Projectile and orbital sensor models, plus StateModel/MeasModel factories."""
from dataclasses import dataclass

import numpy as np

from .astro.dynamics import cartesian_rates, mee_state_rates
from .astro.elements import cart_to_mee, mee_to_cart
from .astro.integrate import integrate_rk
from .astro.timescale import Epoch, gmst_rate, gmst_rotation
from .errors import GeometryError, ParameterError
from .filters import MeasModel, StateModel, wrap_angle

__all__ = [
    "OMEGA_EARTH",
    "GroundStation",
    "Measurement",
    "projectile_rates",
    "azel_measure",
    "radec_measure",
    "radar_measure",
    "visible",
    "elevation",
    "azel_values",
    "radec_values",
    "radar_values",
    "projectile_model",
    "azel_model",
    "orbit_model",
    "orbit_meas_model",
]

OMEGA_EARTH = 7.292115e-5  # rad/s, nominal; station motion uses the GMST rate
TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class GroundStation:
    """Fixed or moving site in Earth-fixed coordinates (m, m/s)."""

    position: np.ndarray
    velocity: np.ndarray = np.zeros(3)

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3))
        rn = np.linalg.norm(p)
        if not 0.9 * 6378136.3 <= rn <= 1.1 * 6378136.3:
            raise ParameterError(f"station radius {rn:.1f} m is not near the Earth surface")

    def eci(self, epoch):
        """Station position and velocity in ECI at ``epoch``.

        The velocity uses the GMST rate so that it is the exact time
        derivative of the rotated position.
        """
        R = gmst_rotation(epoch)
        w = np.array([0.0, 0.0, gmst_rate(epoch)])
        v_ecef = self.velocity + np.cross(w, self.position)
        return R.T @ self.position, R.T @ v_ecef


@dataclass(frozen=True, eq=False)
class Measurement:
    """One observation; ``kind`` is 'AZEL', 'RADEC' or 'RADAR4'."""

    epoch: float
    kind: str
    values: np.ndarray
    angular: tuple


_ANGULAR = {"AZEL": (True, True), "RADEC": (True, True), "RADAR4": (False, False, True, True)}


def projectile_rates(x, f_xyz, b, g):
    """Projectile equations of motion with quadratic drag.

    ``x`` is (6,) or (6, N); ``f_xyz`` matches with 3 rows.
    """
    v = x[3:]
    speed = np.sqrt(np.sum(v * v, axis=0))
    acc = -b * speed * v + f_xyz
    acc[2] = acc[2] - g
    return np.concatenate([v, acc])


def azel_values(pos):
    """Azimuth ``atan2(y, -x)`` and elevation of positions (3, N) seen from the origin."""
    x, y, z = pos
    if np.any((x == 0) & (y == 0)):
        raise GeometryError("azimuth undefined on the vertical axis")
    return np.stack([np.arctan2(y, -x), np.arctan2(z, np.hypot(x, y))])


def azel_measure(x, nu=(0.0, 0.0), epoch=0.0):
    """Noisy azimuth/elevation of the projectile position."""
    x = np.asarray(x, dtype=float)
    z = azel_values(x[:3].reshape(3, -1))[:, 0] + np.asarray(nu, dtype=float)
    z[0] = wrap_angle(z[0])
    z[1] = np.clip(z[1], -np.pi / 2, np.pi / 2)
    return Measurement(epoch, "AZEL", z, _ANGULAR["AZEL"])


def _topocentric(r, stn, epoch):
    rs, vs = stn.eci(epoch)
    d = r - rs.reshape(3, *([1] * (r.ndim - 1)))
    return d, rs, vs


def radec_values(r, stn, epoch):
    """Topocentric right ascension in [0, 2pi) and declination, r (3, N) in ECI."""
    d, _, _ = _topocentric(np.asarray(r, dtype=float), stn, epoch)
    rho = np.sqrt(np.sum(d * d, axis=0))
    if np.any(rho == 0):
        raise GeometryError("zero topocentric range")
    return np.stack([np.mod(np.arctan2(d[1], d[0]), TWO_PI), np.arcsin(d[2] / rho)])


def radar_values(r, v, stn, epoch):
    """Range, range rate, right ascension, declination relative to the station."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    d, _, vs = _topocentric(r, stn, epoch)
    dv = v - vs.reshape(3, *([1] * (v.ndim - 1)))
    rho = np.sqrt(np.sum(d * d, axis=0))
    if np.any(rho == 0):
        raise GeometryError("zero topocentric range")
    return np.stack([rho, np.sum(d * dv, axis=0) / rho,
                     np.mod(np.arctan2(d[1], d[0]), TWO_PI), np.arcsin(d[2] / rho)])


def radec_measure(r_rso, stn, epoch, nu=(0.0, 0.0)):
    """Noisy topocentric RA/Dec."""
    z = radec_values(np.asarray(r_rso, dtype=float).reshape(3, 1), stn, epoch)[:, 0]
    z = z + np.asarray(nu, dtype=float)
    z[0] = np.mod(z[0], TWO_PI)
    z[1] = np.clip(z[1], -np.pi / 2, np.pi / 2)
    return Measurement(_seconds(epoch), "RADEC", z, _ANGULAR["RADEC"])


def radar_measure(r_rso, v_rso, stn, epoch, nu=(0.0, 0.0, 0.0, 0.0)):
    """Noisy range, range rate, RA and Dec."""
    z = radar_values(np.asarray(r_rso, dtype=float).reshape(3, 1),
                     np.asarray(v_rso, dtype=float).reshape(3, 1), stn, epoch)[:, 0]
    z = z + np.asarray(nu, dtype=float)
    z[2] = np.mod(z[2], TWO_PI)
    z[3] = np.clip(z[3], -np.pi / 2, np.pi / 2)
    return Measurement(_seconds(epoch), "RADAR4", z, _ANGULAR["RADAR4"])


def _seconds(epoch):
    return epoch.seconds if isinstance(epoch, Epoch) else float(epoch)


def elevation(r_rso, stn, epoch):
    """Topocentric elevation above the station's geocentric horizon."""
    r = np.asarray(r_rso, dtype=float)
    d, rs, _ = _topocentric(r, stn, epoch)
    up = rs / np.linalg.norm(rs)
    rho = np.sqrt(np.sum(d * d, axis=0))
    return np.arcsin(np.clip(np.tensordot(up, d, axes=(0, 0)) / rho, -1.0, 1.0))


def visible(r_rso, stn, epoch, min_elevation=0.0):
    """True where the elevation is at least ``min_elevation``."""
    return elevation(r_rso, stn, epoch) >= min_elevation


# ----------------------------------------------------------------------------
# model factories for the filters

def projectile_model(b=0.001, g=9.807, max_step=0.2):
    """StateModel with process noise entering as accelerations held over each step."""
    def propagate(X, W, t0, t1):
        F = np.zeros((3, X.shape[1])) if W is None else W
        return integrate_rk(lambda t, x: projectile_rates(x, F, b, g), X, t0, t1, max_step)
    return StateModel(propagate, 6, 3, additive_noise=False)


def azel_model():
    """MeasModel for azimuth/elevation with additive noise."""
    return MeasModel(lambda X, V, t: azel_values(X[:3]), 2, 2, angular=(True, True))


def orbit_model(force, step, representation="cart"):
    """StateModel for orbital motion; process noise is a Cartesian perturbation
    added at the end of each step.

    With ``representation='mee'`` the state is MEE; the noise is applied by a
    round trip through Cartesian coordinates.
    """
    if representation == "cart":
        f = cartesian_rates(force)
        return StateModel(lambda X, W, t0, t1: integrate_rk(f, X, t0, t1, step), 6, 6,
                          additive_noise=True)
    if representation != "mee":
        raise ParameterError(f"unknown representation {representation!r}")
    f = mee_state_rates(force)
    mu = force.mu

    def propagate(X, W, t0, t1):
        Y = integrate_rk(f, X, t0, t1, step)
        if W is None:
            return Y
        out = cart_to_mee(mee_to_cart(Y, mu) + W, mu)
        # keep L continuous with the propagated value
        out[5] = Y[5] + wrap_angle(out[5] - Y[5])
        return out
    return StateModel(propagate, 6, 6, additive_noise=False)


def orbit_meas_model(stn, start, kind="radar", representation="cart", mu=None):
    """MeasModel for radar (4 components) or RA/Dec, times relative to ``start``."""
    start = start if isinstance(start, Epoch) else Epoch(float(start))

    def cart(X):
        return X if representation == "cart" else mee_to_cart(X, mu)

    if kind == "radar":
        def h(X, V, t):
            C = cart(X)
            return radar_values(C[:3], C[3:], stn, start + t)
        return MeasModel(h, 4, 4, angular=(False, False, True, True))
    if kind == "radec":
        return MeasModel(lambda X, V, t: radec_values(cart(X)[:3], stn, start + t), 2, 2,
                         angular=(True, True))
    raise ParameterError(f"unknown sensor kind {kind!r}")
