"""Sigma-point generators: UT, HOUSE (delta and w modes) and CUT-4/CUT-6."""
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from math import comb

import numpy as np

from .errors import MomentFeasibilityError, ParameterError

__all__ = [
    "SigmaPointSet",
    "HouseParams",
    "HouseCoefficients",
    "house_coefficients",
    "reset_level",
    "ut_points",
    "house_points",
    "cut_points",
    "cut_rule",
    "gaussian_moment",
]


@dataclass(eq=False)
class SigmaPointSet:
    """Points (as columns) with their weights.

    Attributes
    ----------
    points : ndarray, shape (n, N)
    weights : ndarray, shape (N,)
    central_index : int or None
        Column located at the mean, if the generator produced one.
    reset : bool
        True when a w-mode reset fired.
    """

    points: np.ndarray
    weights: np.ndarray
    central_index: int | None = None
    reset: bool = False

    @property
    def dim(self):
        return self.points.shape[0]

    @property
    def size(self):
        return self.points.shape[1]

    def mean(self):
        return self.points @ self.weights


@dataclass(frozen=True)
class HouseParams:
    """HOUSE generator settings.

    ``mode='delta'`` floors small kurtosis so the central weight stays at least
    ``delta``. ``mode='w'`` allows a negative central weight and resets it to
    zero once it drops below ``w_threshold``; the other weights are then
    recomputed from minimally raised kurtoses (see ``reset_level``).
    ``floor=None`` means the mode default: on for delta, off for w.
    """

    mode: str = "delta"
    delta: float = 0.0
    w_threshold: float = -0.1
    floor: bool | None = None

    def __post_init__(self):
        if self.mode not in ("delta", "w"):
            raise ParameterError(f"unknown HOUSE mode {self.mode!r}")
        if not 0.0 <= self.delta < 1.0:
            raise ParameterError(f"delta must lie in [0, 1), got {self.delta}")
        if np.isnan(self.w_threshold):
            raise ParameterError("w_threshold is NaN")

    @property
    def use_floor(self):
        if self.floor is None:
            return self.mode == "delta"
        return bool(self.floor)


@dataclass(frozen=True)
class HouseCoefficients:
    alpha: np.ndarray
    beta: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    w_central: float
    raw_central: float
    kurt: np.ndarray
    reset: bool


def _weights(g, k):
    root = np.sqrt(4.0 * k - 3.0 * g * g)
    alpha = 0.5 * (g + root)
    beta = 0.5 * (root - g)
    return alpha, beta, 1.0 / (alpha * root), 1.0 / (beta * root)


def reset_level(spread):
    """Common excess kurtosis level ``e`` with ``sum 1/max(spread, e) = 1``.

    Only the components whose ``kurt - skew^2`` lies below ``e`` are raised,
    which is the smallest lift that brings the central weight to zero.
    Requires ``sum(1/spread) > 1``; the result never exceeds ``n``.
    """
    x = np.sort(np.asarray(spread, dtype=float))
    n = x.shape[0]
    # tail[k] = sum of 1/x over the components left untouched when k are raised
    tail = np.concatenate([np.cumsum((1.0 / x)[::-1])[::-1], [0.0]])
    for k in range(1, n + 1):
        rest = 1.0 - tail[k]
        if rest <= 0:
            continue
        e = k / rest
        if e >= x[k - 1] and (k == n or e <= x[k]):
            return e
    return float(n)


def house_coefficients(skew, kurt, params):
    """Offsets and weights of the HOUSE set in normalized coordinates.

    Parameters
    ----------
    skew, kurt : (n,) array_like
    params : HouseParams

    Returns
    -------
    HouseCoefficients
        ``kurt`` holds the values actually matched, after the δ floor or a
        w-mode reset.
    """
    g = np.asarray(skew, dtype=float)
    k = np.array(kurt, dtype=float)
    n = g.shape[0]
    if params.use_floor:
        thr = n / (1.0 - params.delta) + g * g
        k = np.where(k < thr, thr, k)
    spread = k - g * g
    if not np.all(spread > 0):
        i = int(np.flatnonzero(~(spread > 0))[0])
        raise MomentFeasibilityError(
            f"component {i}: kurt {k[i]} must exceed skew^2 {g[i] ** 2} for HOUSE points")
    alpha, beta, wp, wm = _weights(g, k)
    raw = 1.0 - float(np.sum(wp + wm))
    wc, reset = raw, False
    if params.mode == "w" and raw < params.w_threshold:
        # w-mode reset: lift the smallest excess kurtoses to a common level so
        # the 2n pair weights sum to one; mean, covariance and skew stay exact
        e = reset_level(spread)
        k = np.where(spread < e, e + g * g, k)
        alpha, beta, wp, wm = _weights(g, k)
        wc, reset = 0.0, True
    return HouseCoefficients(alpha, beta, wp, wm, wc, raw, k, reset)


def ut_points(mean, S, kappa_tuning=0.0):
    """Unscented-transform set: ``mean +/- sqrt(n + kappa) S[:, j]`` and the mean.

    The central point comes last (index ``2n``).
    """
    mean = np.asarray(mean, dtype=float).reshape(-1)
    n = mean.shape[0]
    lam = n + kappa_tuning
    if not lam > 0:
        raise ParameterError(f"n + kappa_tuning must be positive, got {lam}")
    D = np.sqrt(lam) * np.asarray(S, dtype=float)
    pts = np.concatenate([mean[:, None] + D, mean[:, None] - D, mean[:, None]], axis=1)
    w = np.full(2 * n + 1, 0.5 / lam)
    w[-1] = kappa_tuning / lam
    return SigmaPointSet(pts, w, central_index=2 * n)


def house_points(spec, params):
    """HOUSE sigma points matching mean, covariance, marginal skew and kurtosis.

    Points are ``mean + alpha_j S[:, j]``, ``mean - beta_j S[:, j]`` and the
    mean itself (last column), with ``S = spec.chol``.

    Parameters
    ----------
    spec : MomentSpec
    params : HouseParams

    Returns
    -------
    SigmaPointSet
    """
    c = house_coefficients(spec.skew, spec.kurt, params)
    S = spec.chol
    m = spec.mean[:, None]
    plus = m + S * c.alpha
    minus = m - S * c.beta
    pts = np.concatenate([plus, minus, m], axis=1)
    w = np.concatenate([c.w_plus, c.w_minus, [c.w_central]])
    return SigmaPointSet(pts, w, central_index=pts.shape[1] - 1, reset=c.reset)


# ----------------------------------------------------------------------------
# conjugate unscented transform

def gaussian_moment(exponents):
    """E[prod x_i^e_i] for a standard normal vector (product of double factorials)."""
    out = 1.0
    for e in exponents:
        if e % 2:
            return 0.0
        for j in range(e - 1, 0, -2):
            out *= j
    return out


def _family_points(n, k, radius):
    """All points with k nonzero coordinates equal to +/- radius."""
    pts = []
    signs = np.array(list(product((1.0, -1.0), repeat=k)))
    for idx in combinations(range(n), k):
        block = np.zeros((signs.shape[0], n))
        block[:, idx] = signs * radius
        pts.append(block)
    return np.concatenate(pts, axis=0).T


@dataclass(frozen=True)
class _Family:
    k: int          # number of nonzero coordinates (0 means the centre)
    rho: float      # squared radius
    weight: float   # per-point weight


def _cut4_families(n):
    # centre, principal axes (radius^2 = 1/t) and the 2^n conjugate diagonals
    t6 = 2.0 / (9.0 + np.sqrt(21.0))   # also matches the pure sixth moment
    t = min(t6, 2.0 / (n + 2))
    s = 1.0 - 2.0 * t
    w1, wn = t * t, s * s / 2.0 ** n
    w0 = 1.0 - 2 * n * w1 - 2.0 ** n * wn
    return [_Family(0, 0.0, w0), _Family(1, 1.0 / t, w1), _Family(n, 1.0 / s, wn)]


def _positive_roots(a, b, c):
    if abs(a) < 1e-300:
        return [-c / b] if b else []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    q = np.sqrt(disc)
    return [(-b + q) / (2 * a), (-b - q) / (2 * a)]


def _cut6_012n(n):
    # unknowns: inverse squared radii u (axes), v (pairs), s (diagonals)
    out = []
    for v in _positive_roots(3 * n + 12.0, -12.0, 1.0):
        s = 1.0 - 2.0 * v
        u = (1.0 - (n - 2) * v) / (8.0 - n)
        if min(u, v, s) <= 0:
            continue
        w1, w2, wn = (8.0 - n) * u ** 3, v ** 3 / 2.0, s ** 3 / 2.0 ** n
        w0 = 1.0 - 2 * n * w1 - 2 * n * (n - 1) * w2 - 2.0 ** n * wn
        out.append([_Family(0, 0.0, w0), _Family(1, 1 / u, w1), _Family(2, 1 / v, w2),
                    _Family(n, 1 / s, wn)])
    return out


def _cut6_013n(n):
    # families: centre, axes, triples, diagonals
    A = 2.0 / (n - 3)               # 8 w3 rho3^3
    B = 1.0 - A                     # 2^n wn rhon^3
    C = comb(n - 1, 2)
    P = 15.0 - C * A - B            # 2 w1 rho1^3
    if P <= 0 or B <= 0:
        return []
    # quadratic in a = 1/rho3 after eliminating b = 1/rhon and c = 1/rho1
    e = (C - n + 2) * A
    qa = e * e / P + C * A + ((n - 2) * A) ** 2 / B
    qb = -4.0 * e / P - 2.0 * (n - 2) * A / B
    qc = 4.0 / P + 1.0 / B - 1.0
    out = []
    for a in _positive_roots(qa, qb, qc):
        b = (1.0 - (n - 2) * A * a) / B
        c = (2.0 - e * a) / P
        if min(a, b, c) <= 0:
            continue
        w1, w3, wn = P * c ** 3 / 2.0, A * a ** 3 / 8.0, B * b ** 3 / 2.0 ** n
        w0 = 1.0 - 2 * n * w1 - 8 * comb(n, 3) * w3 - 2.0 ** n * wn
        out.append([_Family(0, 0.0, w0), _Family(1, 1 / c, w1), _Family(3, 1 / a, w3),
                    _Family(n, 1 / b, wn)])
    return out


def _cut6_two():
    # n = 2: diagonals fixed by the mixed moments, two axis radii from a
    # two-node rule that also matches the pure eighth moment
    rho2, w2 = 3.0, 1.0 / 36.0
    nodes = np.array([5.0 + np.sqrt(13.0), 5.0 - np.sqrt(13.0)])
    wa = (1.0 - nodes[1] / 3.0) / (nodes[0] - nodes[1])
    om = np.array([wa, 1.0 / 3.0 - wa]) / nodes
    w0 = 1.0 - 4.0 * om.sum() - 4.0 * w2
    return [[_Family(0, 0.0, w0), _Family(1, nodes[0], om[0]), _Family(1, nodes[1], om[1]),
             _Family(2, rho2, w2)]]


def _even_patterns(total, most, parts):
    # nonincreasing tuples of even parts summing to total
    if total == 0:
        yield ()
        return
    if parts == 0:
        return
    for p in range(min(total, most), 1, -1):
        if p % 2 == 0:
            for rest in _even_patterns(total - p, p, parts - 1):
                yield (p,) + rest


def _moment_residual(U, w, order):
    # worst error over even monomial patterns; the rules are fully symmetric,
    # so checking each pattern on the leading coordinates covers every monomial
    n = U.shape[0]
    worst = abs(w.sum() - 1.0)
    for deg in range(2, order + 1, 2):
        for pat in _even_patterns(deg, deg, n):
            val = w.copy()
            for i, e in enumerate(pat):
                val = val * U[i] ** e
            worst = max(worst, abs(val.sum() - gaussian_moment(pat)))
    # odd moments: one representative per coordinate
    worst = max(worst, float(np.abs(U @ w).max()))
    return worst


def _count(n, families):
    return sum(1 if f.k == 0 else comb(n, f.k) * 2 ** f.k for f in families)


def _assemble(n, families):
    cols, ws = [], []
    for f in families:
        if f.k == 0:
            P = np.zeros((n, 1))
        else:
            P = _family_points(n, f.k, np.sqrt(f.rho))
        cols.append(P)
        ws.append(np.full(P.shape[1], f.weight))
    return np.concatenate(cols, axis=1), np.concatenate(ws)


@lru_cache(maxsize=None)
def cut_rule(n, order):
    """Unit CUT rule for N(0, I_n): returns (points (n, N), weights (N,)).

    The rule is solved from the fully symmetric moment equations and checked
    against the analytic Gaussian moments before being cached. The centre is
    column 0.
    """
    if order not in (4, 6):
        raise ParameterError(f"unsupported CUT order {order}")
    if n < 2:
        raise ParameterError("CUT rules need n >= 2")
    if order == 4:
        candidates = [_cut4_families(n)]
    elif n == 2:
        candidates = _cut6_two()
    else:
        candidates = (_cut6_012n(n) if n <= 7 else []) + (_cut6_013n(n) if n >= 5 else [])
    good = [f for f in candidates if all(x.weight >= -1e-14 for x in f[1:])]
    if not good:
        raise ParameterError(f"no CUT-{order} rule with positive weights for n = {n}")
    # prefer a nonnegative central weight, then the fewest points
    good.sort(key=lambda f: (f[0].weight < -1e-14, _count(n, f)))
    U, w = _assemble(n, good[0])
    err = _moment_residual(U, w, order)
    if err > 1e-9:
        raise ParameterError(f"CUT-{order} rule for n = {n} misses moments by {err:.2e}")
    U.setflags(write=False)
    w.setflags(write=False)
    return U, w


def cut_points(mean, S, order):
    """CUT sigma points for N(mean, S S^T) matching Gaussian moments to ``order``."""
    mean = np.asarray(mean, dtype=float).reshape(-1)
    U, w = cut_rule(mean.shape[0], int(order))
    pts = mean[:, None] + np.asarray(S, dtype=float) @ U
    return SigmaPointSet(pts, w.copy(), central_index=0)
