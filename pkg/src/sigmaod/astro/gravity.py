"""Spherical-harmonic gravity: coefficient files and acceleration kernel."""
from dataclasses import dataclass, field
from importlib import resources
from math import exp, lgamma, log
import os

import numpy as np
from numba import njit

from ..errors import HarmonicsParseError, ParameterError

__all__ = [
    "HarmonicsModel",
    "load_harmonics",
    "write_harmonics",
    "gravity_accel",
    "normalization",
    "bundled_gravity_path",
    "point_mass_model",
]


def normalization(n, m):
    """Factor N with C_unnormalized = N * C_normalized."""
    d = 1.0 if m == 0 else 2.0
    return exp(0.5 * (log(d) + log(2 * n + 1) + lgamma(n - m + 1) - lgamma(n + m + 1)))


@dataclass(frozen=True, eq=False)
class HarmonicsModel:
    """Normalized Stokes coefficients ``C[n, m]``, ``S[n, m]`` through ``nmax``."""

    mu: float
    radius: float
    nmax: int
    C: np.ndarray
    S: np.ndarray
    _unnorm: tuple = field(default=None, repr=False)

    def __post_init__(self):
        N = np.array([[normalization(n, m) if m <= n else 0.0 for m in range(self.nmax + 1)]
                      for n in range(self.nmax + 1)])
        C = np.ascontiguousarray(self.C * N)
        S = np.ascontiguousarray(self.S * N)
        object.__setattr__(self, "_unnorm", (C, S))

    @property
    def unnormalized(self):
        return self._unnorm


def point_mass_model(mu, radius):
    one = np.ones((1, 1))
    return HarmonicsModel(mu, radius, 0, one, np.zeros((1, 1)))


def load_harmonics(path):
    """Read a coefficient file.

    Format: a header line ``mu <value> radius <value> nmax <N>``, then one
    ``n m Cnm Snm`` line per coefficient (normalized), in any order.
    ``#`` starts a comment. Every (n, m) with m <= n <= N must be present.
    """
    path = os.fspath(path)
    header = None
    seen = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise HarmonicsParseError(f"{path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if header is None:
                if len(tok) != 6 or tok[0::2] != ["mu", "radius", "nmax"]:
                    raise HarmonicsParseError(
                        f"{path}:{lineno}: expected 'mu <v> radius <v> nmax <N>' header")
                try:
                    header = (float(tok[1]), float(tok[3]), int(tok[5]))
                except ValueError as exc:
                    raise HarmonicsParseError(f"{path}:{lineno}: bad header value") from exc
                if header[2] < 0:
                    raise HarmonicsParseError(f"{path}:{lineno}: nmax must be >= 0")
                continue
            if len(tok) != 4:
                raise HarmonicsParseError(f"{path}:{lineno}: expected 'n m C S'")
            try:
                n, m = int(tok[0]), int(tok[1])
                c, s = float(tok[2].replace("D", "e")), float(tok[3].replace("D", "e"))
            except ValueError as exc:
                raise HarmonicsParseError(f"{path}:{lineno}: malformed number") from exc
            if not 0 <= m <= n:
                raise HarmonicsParseError(f"{path}:{lineno}: invalid index ({n}, {m})")
            if (n, m) in seen:
                raise HarmonicsParseError(f"{path}:{lineno}: duplicate ({n}, {m})")
            if n <= header[2]:
                seen[(n, m)] = (c, s)
    if header is None:
        raise HarmonicsParseError(f"{path}: missing header")
    mu, radius, nmax = header
    C = np.zeros((nmax + 1, nmax + 1))
    S = np.zeros((nmax + 1, nmax + 1))
    for n in range(nmax + 1):
        for m in range(n + 1):
            if (n, m) not in seen:
                raise HarmonicsParseError(f"{path}: missing coefficient ({n}, {m})")
            C[n, m], S[n, m] = seen[(n, m)]
    if C[0, 0] != 1.0:
        raise HarmonicsParseError(f"{path}: C(0,0) must be 1")
    return HarmonicsModel(mu, radius, nmax, C, S)


def write_harmonics(model, path, comment=None):
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"mu {float(model.mu)!r} radius {float(model.radius)!r} nmax {model.nmax}\n")
        for n in range(model.nmax + 1):
            for m in range(n + 1):
                fh.write(f"{n} {m} {float(model.C[n, m])!r} {float(model.S[n, m])!r}\n")


def bundled_gravity_path():
    """Path of the bundled synthetic degree-40 coefficient file."""
    return str(resources.files("sigmaod").joinpath("data").joinpath("synthetic_gravity_40.txt"))


@njit(cache=True)
def _accel_kernel(pos, C, S, radius, gm, N, M, out):
    npts = pos.shape[1]
    V = np.zeros((N + 2, N + 2))
    W = np.zeros((N + 2, N + 2))
    for p in range(npts):
        x = pos[0, p]
        y = pos[1, p]
        z = pos[2, p]
        r2 = x * x + y * y + z * z
        rho = radius * radius / r2
        x0 = radius * x / r2
        y0 = radius * y / r2
        z0 = radius * z / r2
        V[0, 0] = radius / np.sqrt(r2)
        W[0, 0] = 0.0
        V[1, 0] = z0 * V[0, 0]
        W[1, 0] = 0.0
        for n in range(2, N + 2):
            V[n, 0] = ((2 * n - 1) * z0 * V[n - 1, 0] - (n - 1) * rho * V[n - 2, 0]) / n
            W[n, 0] = 0.0
        for m in range(1, min(M + 1, N + 1) + 1):
            V[m, m] = (2 * m - 1) * (x0 * V[m - 1, m - 1] - y0 * W[m - 1, m - 1])
            W[m, m] = (2 * m - 1) * (x0 * W[m - 1, m - 1] + y0 * V[m - 1, m - 1])
            if m <= N:
                V[m + 1, m] = (2 * m + 1) * z0 * V[m, m]
                W[m + 1, m] = (2 * m + 1) * z0 * W[m, m]
            for n in range(m + 2, N + 2):
                V[n, m] = ((2 * n - 1) * z0 * V[n - 1, m]
                           - (n + m - 1) * rho * V[n - 2, m]) / (n - m)
                W[n, m] = ((2 * n - 1) * z0 * W[n - 1, m]
                           - (n + m - 1) * rho * W[n - 2, m]) / (n - m)
        ax = 0.0
        ay = 0.0
        az = 0.0
        # sum from the highest degree down to limit rounding
        for m in range(M, -1, -1):
            for n in range(N, m - 1, -1):
                if m == 0:
                    c = C[n, 0]
                    ax -= c * V[n + 1, 1]
                    ay -= c * W[n + 1, 1]
                    az -= (n + 1) * c * V[n + 1, 0]
                else:
                    c = C[n, m]
                    s = S[n, m]
                    fac = 0.5 * (n - m + 1) * (n - m + 2)
                    ax += (0.5 * (-c * V[n + 1, m + 1] - s * W[n + 1, m + 1])
                           + fac * (c * V[n + 1, m - 1] + s * W[n + 1, m - 1]))
                    ay += (0.5 * (-c * W[n + 1, m + 1] + s * V[n + 1, m + 1])
                           + fac * (-c * W[n + 1, m - 1] + s * V[n + 1, m - 1]))
                    az += (n - m + 1) * (-c * V[n + 1, m] - s * W[n + 1, m])
        k = gm / (radius * radius)
        out[0, p] = k * ax
        out[1, p] = k * ay
        out[2, p] = k * az


def gravity_accel(r_ecef, model, degree=None, order=None):
    """Acceleration from the truncated spherical-harmonic potential (ECEF).

    Parameters
    ----------
    r_ecef : array_like, shape (3,) or (3, N)
    model : HarmonicsModel
    degree, order : int, optional
        Truncation; default is the full model. ``order`` is capped at
        ``degree``.
    """
    degree = model.nmax if degree is None else int(degree)
    order = degree if order is None else min(int(order), degree)
    if degree > model.nmax or order < 0 or degree < 0:
        raise ParameterError(f"truncation ({degree}, {order}) exceeds model nmax {model.nmax}")
    r = np.asarray(r_ecef, dtype=float)
    flat = r.ndim == 1
    pos = np.ascontiguousarray(r.reshape(3, -1))
    rmin = np.sqrt(np.min(np.sum(pos * pos, axis=0))) if pos.shape[1] else np.inf
    if not rmin > 0.9 * model.radius:
        raise ParameterError("gravity evaluated below 0.9 reference radii")
    C, S = model.unnormalized
    out = np.empty_like(pos)
    _accel_kernel(pos, C, S, float(model.radius), float(model.mu), degree, order, out)
    return out[:, 0] if flat else out


# low-degree normalized Earth coefficients (rounded published values)
_LOW_DEGREE = {
    (2, 0): (-4.841651437908e-04, 0.0),
    (2, 1): (-2.066155090741e-10, 1.384413891380e-09),
    (2, 2): (2.439383573283e-06, -1.400273703859e-06),
    (3, 0): (9.571612070935e-07, 0.0),
    (3, 1): (2.030462010479e-06, 2.482004158569e-07),
    (3, 2): (9.047878948095e-07, -6.190054751776e-07),
    (3, 3): (7.213217571216e-07, 1.414349261929e-06),
    (4, 0): (5.399658666390e-07, 0.0),
    (4, 1): (-5.361573893889e-07, -4.735673465181e-07),
    (4, 2): (3.505016239626e-07, 6.624800262758e-07),
    (4, 3): (9.908567666723e-07, -2.009567235675e-07),
    (4, 4): (-1.885196330230e-07, 3.088038821492e-07),
}


def synthetic_model(nmax=40, seed=20100104, mu=3.986004415e14, radius=6378136.3):
    """Earth-like coefficient set: real terms through degree 4 and a seeded
    random tail following Kaula's rule (rms 1e-5 / n^2)."""
    rng = np.random.default_rng(seed)
    C = np.zeros((nmax + 1, nmax + 1))
    S = np.zeros((nmax + 1, nmax + 1))
    C[0, 0] = 1.0
    for n in range(2, nmax + 1):
        sig = 1e-5 / n ** 2
        for m in range(n + 1):
            c, s = rng.normal(0.0, sig, 2)
            if (n, m) in _LOW_DEGREE:
                c, s = _LOW_DEGREE[(n, m)]
            C[n, m] = c
            S[n, m] = 0.0 if m == 0 else s
    return HarmonicsModel(mu, radius, nmax, C, S)


if __name__ == "__main__":  # pragma: no cover
    import sys
    write_harmonics(synthetic_model(), sys.argv[1],
                    comment="synthetic degree-40 field: published values through degree 4,\n"
                            "Kaula-rule random tail (seed 20100104) above")
