"""Orbit state representations: Cartesian, classical and modified equinoctial."""
from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError, ParameterError

__all__ = [
    "MU_EARTH",
    "R_EARTH",
    "OrbitState",
    "cart_to_coe",
    "coe_to_cart",
    "coe_to_mee",
    "mee_to_coe",
    "mee_to_cart",
    "cart_to_mee",
    "mee_rates",
    "rtn_from_eci",
    "rtn_basis",
]

MU_EARTH = 3.986004418e14   # m^3/s^2
R_EARTH = 6378136.3         # m
TWO_PI = 2.0 * np.pi
_TOL = 1e-11

_REPS = ("CART", "COE", "MEE")


@dataclass(frozen=True)
class OrbitState:
    """Six orbital components tagged with their representation.

    CART: (x, y, z, vx, vy, vz) in m, m/s. COE: (a, e, i, argp, raan, nu).
    MEE: (p, f, g, h, k, L).
    """

    rep: str
    values: np.ndarray

    def __post_init__(self):
        if self.rep not in _REPS:
            raise ParameterError(f"unknown representation {self.rep!r}")
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape[0] != 6:
            raise ParameterError("orbit states have six components")
        object.__setattr__(self, "values", v)

    def __iter__(self):
        return iter(self.values)


def _values(s, rep):
    if isinstance(s, OrbitState):
        if s.rep != rep:
            raise ParameterError(f"expected {rep} state, got {s.rep}")
        return s.values
    return np.asarray(s, dtype=float)


def _coe_arrays(r, v, mu):
    # r, v: (3, N)
    h = np.cross(r, v, axis=0)
    hn = np.linalg.norm(h, axis=0)
    rn = np.linalg.norm(r, axis=0)
    if np.any(hn <= 1e-12 * rn * np.linalg.norm(v, axis=0)) or np.any(rn == 0):
        raise GeometryError("rectilinear or degenerate orbit (|r x v| = 0)")
    hhat = h / hn
    v2 = np.sum(v * v, axis=0)
    rv = np.sum(r * v, axis=0)
    ev = ((v2 - mu / rn) * r - rv * v) / mu
    e = np.linalg.norm(ev, axis=0)
    a = 1.0 / (2.0 / rn - v2 / mu)
    inc = np.arccos(np.clip(hhat[2], -1.0, 1.0))
    node = np.stack([-h[1], h[0], np.zeros_like(hn)])
    nn = np.linalg.norm(node, axis=0)
    eq = nn <= _TOL * hn
    circ = e <= _TOL
    # node direction; x axis stands in for equatorial orbits
    nhat = np.where(eq, np.array([[1.0], [0.0], [0.0]]), node / np.where(eq, 1.0, nn))
    raan = np.where(eq, 0.0, np.mod(np.arctan2(node[1], node[0]), TWO_PI))

    def ang(u, w):
        c = np.sum(u * w, axis=0)
        s = np.sum(np.cross(u, w, axis=0) * hhat, axis=0)
        return np.mod(np.arctan2(s, c), TWO_PI)

    argp = np.where(circ, 0.0, ang(nhat, ev))
    nu = np.where(circ, ang(nhat, r), ang(np.where(circ, nhat, ev), r))
    return np.stack([a, e, inc, argp, raan, nu])


def cart_to_coe(s, mu=MU_EARTH):
    """Classical elements from position and velocity.

    Angles land in [0, 2pi). For circular orbits the argument of periapsis is
    0 and ``nu`` is the argument of latitude; for equatorial orbits the node
    is taken on the x axis.
    """
    x = _values(s, "CART")
    flat = x.ndim == 1
    X = x.reshape(6, -1)
    out = _coe_arrays(X[:3], X[3:], mu)
    return OrbitState("COE", out[:, 0]) if flat else out


def _rot(argp, raan, inc):
    cO, sO = np.cos(raan), np.sin(raan)
    cw, sw = np.cos(argp), np.sin(argp)
    ci, si = np.cos(inc), np.sin(inc)
    # columns: perifocal P and Q axes in ECI
    P = np.stack([cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si])
    Q = np.stack([-cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si])
    return P, Q


def coe_to_cart(s, mu=MU_EARTH):
    """Position and velocity from classical elements."""
    c = _values(s, "COE")
    flat = c.ndim == 1
    a, e, inc, argp, raan, nu = c.reshape(6, -1)
    p = a * (1.0 - e * e)
    if np.any(p <= 0):
        raise GeometryError("semi-latus rectum must be positive")
    r = p / (1.0 + e * np.cos(nu))
    P, Q = _rot(argp, raan, inc)
    vs = np.sqrt(mu / p)
    pos = r * (np.cos(nu) * P + np.sin(nu) * Q)
    vel = vs * (-np.sin(nu) * P + (e + np.cos(nu)) * Q)
    out = np.concatenate([pos, vel])
    return OrbitState("CART", out[:, 0]) if flat else out


def coe_to_mee(s):
    """Modified equinoctial elements from classical elements.

    ``L = raan + argp + nu`` with each angle as given (not re-wrapped).
    """
    c = _values(s, "COE")
    flat = c.ndim == 1
    a, e, inc, argp, raan, nu = c.reshape(6, -1)
    if np.any(np.abs(np.abs(np.mod(inc + np.pi, TWO_PI) - np.pi) - np.pi) < 1e-12):
        raise GeometryError("inclination of 180 deg is singular for MEE")
    t = np.tan(inc / 2.0)
    lw = argp + raan
    out = np.stack([a * (1 - e * e), e * np.cos(lw), e * np.sin(lw),
                    t * np.cos(raan), t * np.sin(raan), raan + argp + nu])
    return OrbitState("MEE", out[:, 0]) if flat else out


def mee_to_coe(s):
    """Classical elements from MEE; angles in [0, 2pi)."""
    m = _values(s, "MEE")
    flat = m.ndim == 1
    p, f, g, h, k, L = m.reshape(6, -1)
    e = np.hypot(f, g)
    if np.any(e >= 1):
        raise GeometryError("only elliptic orbits are supported")
    a = p / (1 - e * e)
    inc = 2.0 * np.arctan(np.hypot(h, k))
    raan = np.mod(np.arctan2(k, h), TWO_PI)
    lw = np.arctan2(g, f)
    argp = np.mod(lw - raan, TWO_PI)
    nu = np.mod(L - lw, TWO_PI)
    out = np.stack([a, e, inc, argp, raan, nu])
    return OrbitState("COE", out[:, 0]) if flat else out


def mee_to_cart(s, mu=MU_EARTH):
    """Cartesian state from MEE (closed form, vectorized over columns)."""
    m = _values(s, "MEE")
    flat = m.ndim == 1
    p, f, g, h, k, L = m.reshape(6, -1)
    if np.any(p <= 0):
        raise GeometryError("p must be positive")
    cL, sL = np.cos(L), np.sin(L)
    a2 = h * h - k * k
    s2 = 1 + h * h + k * k
    q = 1 + f * cL + g * sL
    r = p / q
    hk = 2 * h * k
    pos = (r / s2) * np.stack([cL + a2 * cL + hk * sL, sL - a2 * sL + hk * cL,
                               2 * (h * sL - k * cL)])
    sm = np.sqrt(mu / p) / s2
    vel = -sm * np.stack([sL + a2 * sL - hk * cL + g - f * hk + a2 * g,
                          -cL + a2 * cL + hk * sL - f + g * hk + a2 * f,
                          -2 * (h * cL + k * sL + f * h + g * k)])
    out = np.concatenate([pos, vel])
    return OrbitState("CART", out[:, 0]) if flat else out


def cart_to_mee(s, mu=MU_EARTH):
    """MEE from Cartesian state, through the classical elements."""
    x = _values(s, "CART")
    if x.ndim == 1:
        return coe_to_mee(cart_to_coe(OrbitState("CART", x), mu))
    return coe_to_mee(cart_to_coe(x, mu))


def rtn_basis(r, v):
    """Radial, tangential and normal unit vectors, each shaped like ``r``."""
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    rn = np.linalg.norm(r, axis=0)
    h = np.cross(r, v, axis=0)
    hn = np.linalg.norm(h, axis=0)
    if np.any(rn == 0) or np.any(hn <= 1e-15 * rn * np.linalg.norm(v, axis=0)):
        raise GeometryError("RTN frame undefined for zero radius or r parallel to v")
    R = r / rn
    N = h / hn
    T = np.cross(N, R, axis=0)
    return R, T, N


def rtn_from_eci(r, v, a_eci):
    """Project an ECI vector onto the RTN frame of (r, v)."""
    R, T, N = rtn_basis(r, v)
    a = np.asarray(a_eci, dtype=float)
    return np.stack([np.sum(a * R, axis=0), np.sum(a * T, axis=0), np.sum(a * N, axis=0)])


def mee_rates(s, a_rtn, mu=MU_EARTH):
    """Time derivative of MEE under an RTN perturbing acceleration.

    Vectorized over columns when ``s`` is (6, N) and ``a_rtn`` is (3, N).
    """
    m = _values(s, "MEE")
    p, f, g, h, k, L = m
    ar, at, an = np.asarray(a_rtn, dtype=float)
    cL, sL = np.cos(L), np.sin(L)
    q = 1 + f * cL + g * sL
    if np.any(q <= 0) or np.any(p <= 0):
        raise GeometryError("MEE rates need p > 0 and q > 0")
    s2 = 1 + h * h + k * k
    sp = np.sqrt(p / mu)
    hk = h * sL - k * cL
    return np.stack([
        2 * p / q * sp * at,
        sp * (ar * sL + ((q + 1) * cL + f) * at / q - hk * g * an / q),
        sp * (-ar * cL + ((q + 1) * sL + g) * at / q + hk * f * an / q),
        sp * s2 * an * cL / (2 * q),
        sp * s2 * an * sL / (2 * q),
        np.sqrt(mu * p) * (q / p) ** 2 + sp * hk * an / q,
    ])
