"""Four-moment distribution summaries and Pearson-family sampling."""
from functools import lru_cache

import numpy as np
from scipy import optimize, stats

from .errors import MomentFeasibilityError, ParameterError
from .sqrt_linalg import tri_solve

__all__ = [
    "MomentSpec",
    "pearson_type",
    "pearson_standard",
    "pearson_sample",
    "weighted_central_moments",
    "standardized_moments",
    "FEASIBILITY_MARGIN",
]

FEASIBILITY_MARGIN = 1e-9


def _vec(x, n, name, default):
    if x is None:
        return np.full(n, float(default))
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        return np.full(n, float(a))
    a = a.reshape(-1)
    if a.shape[0] != n:
        raise ParameterError(f"{name} has length {a.shape[0]}, expected {n}")
    return a.copy()


class MomentSpec:
    """Mean, covariance (and its lower factor), per-marginal skewness and kurtosis.

    Exactly one of ``cov`` or ``chol`` is normally given; the other is
    derived. Missing skew/kurt default to the Gaussian values 0 and 3.

    Parameters
    ----------
    mean : array_like, shape (n,)
    cov : array_like, shape (n, n), optional
    chol : array_like, shape (n, n), optional
        Lower-triangular factor with positive diagonal.
    skew, kurt : array_like or float, optional
    check : bool
        Validate symmetry, definiteness and ``kurt >= skew**2 + 1``.
        Filter internals pass ``False``.
    """

    __slots__ = ("mean", "skew", "kurt", "_cov", "_chol")

    def __init__(self, mean, cov=None, chol=None, skew=None, kurt=None, check=True):
        self.mean = np.array(mean, dtype=float).reshape(-1)
        n = self.mean.shape[0]
        if cov is None and chol is None:
            raise ParameterError("MomentSpec needs cov or chol")
        self._cov = None if cov is None else np.asarray(cov, dtype=float)
        self._chol = None if chol is None else np.asarray(chol, dtype=float)
        self.skew = _vec(skew, n, "skew", 0.0)
        self.kurt = _vec(kurt, n, "kurt", 3.0)
        if check:
            self._validate()

    def _validate(self):
        n = self.dim
        if self._cov is not None:
            if self._cov.shape != (n, n):
                raise ParameterError(f"cov shape {self._cov.shape} does not match mean")
            if not np.allclose(self._cov, self._cov.T, rtol=1e-10, atol=0):
                raise ParameterError("cov is not symmetric")
        if self._chol is not None:
            if self._chol.shape != (n, n):
                raise ParameterError("chol shape does not match mean")
            if np.any(np.triu(self._chol, 1) != 0) or not np.all(np.diag(self._chol) > 0):
                raise ParameterError("chol must be lower triangular with positive diagonal")
        else:
            try:
                self._chol = np.linalg.cholesky(self._cov)
            except np.linalg.LinAlgError as exc:
                raise ParameterError("cov is not positive definite") from exc
        bad = self.kurt < self.skew ** 2 + 1 - 1e-12
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise MomentFeasibilityError(
                f"component {i}: kurt {self.kurt[i]} < skew^2 + 1 = {self.skew[i] ** 2 + 1}")

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def cov(self):
        if self._cov is None:
            self._cov = self._chol @ self._chol.T
        return self._cov

    @property
    def chol(self):
        if self._chol is None:
            self._chol = np.linalg.cholesky(self._cov)
        return self._chol

    @property
    def std(self):
        return np.sqrt(np.diag(self.cov))

    @property
    def is_gaussian(self):
        return bool(np.all(self.skew == 0) and np.all(self.kurt == 3))

    @classmethod
    def from_std(cls, mean, std, skew=None, kurt=None):
        """Independent marginals with the given standard deviations."""
        std = np.asarray(std, dtype=float).reshape(-1)
        mean = np.asarray(mean, dtype=float).reshape(-1)
        if mean.shape[0] == 1 and std.shape[0] > 1:
            mean = np.full(std.shape[0], mean[0])
        return cls(mean, chol=np.diag(std), skew=skew, kurt=kurt)

    def gaussian(self):
        """Same mean and covariance with Gaussian skew/kurt."""
        return MomentSpec(self.mean, cov=self._cov, chol=self._chol, check=False)

    def with_moments(self, skew, kurt):
        return MomentSpec(self.mean, cov=self._cov, chol=self._chol, skew=skew, kurt=kurt,
                          check=False)

    def __repr__(self):
        return (f"MomentSpec(dim={self.dim}, mean={self.mean!r}, skew={self.skew!r}, "
                f"kurt={self.kurt!r})")


# ----------------------------------------------------------------------------
# Pearson system

def _check_feasible(skew, kurt):
    if not np.isfinite(skew) or not np.isfinite(kurt):
        raise MomentFeasibilityError("skew and kurt must be finite")
    if kurt < skew * skew + 1 + FEASIBILITY_MARGIN:
        raise MomentFeasibilityError(
            f"kurt {kurt} below feasibility bound skew^2 + 1 = {skew * skew + 1}")


def pearson_type(skew, kurt, tol=1e-10):
    """Pearson type label for standardized (skew, kurt).

    Returns one of ``'normal'``, ``'I'``, ``'III'``, ``'IV'``, ``'V'``,
    ``'VI'``. Symmetric cases fold into I (kurt < 3) and IV (kurt > 3).
    """
    _check_feasible(skew, kurt)
    b1, b2 = skew * skew, kurt
    if abs(skew) < tol and abs(kurt - 3) < tol:
        return "normal"
    d = 2 * b2 - 3 * b1 - 6
    if abs(skew) < tol:
        return "I" if b2 < 3 else "IV"
    if abs(d) < tol:
        return "III"
    k = b1 * (b2 + 3) ** 2 / (4 * (4 * b2 - 3 * b1) * d)
    if k < 0:
        return "I"
    if abs(k - 1) < tol:
        return "V"
    return "IV" if k < 1 else "VI"


class _TypeIV:
    """Inverse-CDF sampler for standardized Pearson IV on a theta grid.

    With ``x = lam + a tan(theta)`` the density in theta is proportional to
    ``cos(theta)**r * exp(-nu theta)``, smooth and bounded on (-pi/2, pi/2).
    """

    def __init__(self, skew, kurt, grid=1 << 15):
        b1, b2 = skew * skew, kurt
        r = 6 * (b2 - b1 - 1) / (2 * b2 - 3 * b1 - 6)
        root = np.sqrt(16 * (r - 1) - b1 * (r - 2) ** 2)
        self.r = r
        self.nu = -r * (r - 2) * skew / root
        self.a = root / 4
        self.lam = -(r - 2) * skew / 4
        theta = np.linspace(-np.pi / 2, np.pi / 2, grid + 1)
        h = theta[1] - theta[0]
        logp = np.full_like(theta, -np.inf)
        inner = slice(1, -1)
        logp[inner] = r * np.log(np.cos(theta[inner])) - self.nu * theta[inner]
        logp -= logp[inner].max()
        p = np.exp(logp)
        cells = 0.5 * (p[1:] + p[:-1]) * h
        # density vanishes like distance**r at both ends
        cells[0] = p[1] * h / (r + 1)
        cells[-1] = p[-2] * h / (r + 1)
        cdf = np.concatenate([[0.0], np.cumsum(cells)])
        self.total = cdf[-1]
        self.cdf = cdf / cdf[-1]
        self.theta = theta
        self.h = h

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        th = np.interp(u, self.cdf, self.theta)
        c1, cm = self.cdf[1], self.cdf[-2]
        lo = u < c1
        hi = u > cm
        e = 1.0 / (self.r + 1)
        th[lo] = -np.pi / 2 + self.h * (u[lo] / c1) ** e
        th[hi] = np.pi / 2 - self.h * ((1 - u[hi]) / (1 - cm)) ** e
        return self.lam + self.a * np.tan(th)


def _standardize(dist):
    m, v = dist.stats(moments="mv")
    return float(m), float(np.sqrt(v))


def _beta_params(skew, kurt):
    b1, b2 = skew * skew, kurt
    r = 6 * (b2 - b1 - 1) / (6 + 3 * b1 - 2 * b2)
    t = (r + 2) * skew / np.sqrt((r + 2) ** 2 * b1 + 16 * (r + 1))
    return r / 2 * (1 - t), r / 2 * (1 + t)


def _betaprime_params(skew, kurt):
    # numeric solve; positive skew orientation, caller flips sign
    g = abs(skew)

    def resid(z):
        a, b = np.exp(z)
        s, k = stats.betaprime.stats(a, b, moments="sk")
        return [float(s) - g, float(k) + 3 - kurt]

    best = None
    for a0 in (2.0, 10.0, 50.0):
        for b0 in (6.0, 12.0, 40.0):
            sol = optimize.least_squares(resid, np.log([a0, b0]), xtol=1e-14, ftol=1e-14)
            if best is None or sol.cost < best.cost:
                best = sol
    if best.cost > 1e-16:
        raise MomentFeasibilityError(f"no type VI fit for skew={skew}, kurt={kurt}")
    return np.exp(best.x)


@lru_cache(maxsize=64)
def _sampler(skew, kurt):
    kind = pearson_type(skew, kurt)
    sgn = -1.0 if skew < 0 else 1.0
    if kind == "normal":
        return None
    if kind == "IV":
        return _TypeIV(skew, kurt).ppf
    if kind == "I":
        a, b = _beta_params(skew, kurt)
        dist = stats.beta(a, b)
        m, s = _standardize(dist)
        return lambda u: (dist.ppf(u) - m) / s
    if kind == "III":
        dist = stats.gamma(4.0 / (skew * skew))
    elif kind == "V":
        alpha = optimize.brentq(lambda x: 4 * np.sqrt(x - 2) / (x - 3) - abs(skew),
                                5.0 + 1e-9, 1e8)
        dist = stats.invgamma(alpha)
    else:
        a, b = _betaprime_params(skew, kurt)
        dist = stats.betaprime(a, b)
    m, s = _standardize(dist)
    # heavy tail on the right for the positive orientation; mirror for negative skew
    return lambda u: sgn * (dist.ppf(u if sgn > 0 else 1 - u) - m) / s


def pearson_standard(skew, kurt, count, rng):
    """Zero-mean, unit-variance Pearson variates with the given skew and kurt."""
    _check_feasible(float(skew), float(kurt))
    ppf = _sampler(float(skew), float(kurt))
    if ppf is None:
        return rng.standard_normal(count)
    return ppf(rng.random(count))


def pearson_sample(spec, count, seed):
    """Draw ``count`` samples with independent Pearson-standardized marginals.

    Each marginal is drawn standardized with its own (skew, kurt), then mapped
    through ``mean + chol @ z``.

    Parameters
    ----------
    spec : MomentSpec
    count : int
    seed : int or numpy.random.Generator

    Returns
    -------
    ndarray, shape (n, count)
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for s, k in zip(spec.skew, spec.kurt):
        _check_feasible(float(s), float(k))
    Z = np.empty((spec.dim, int(count)))
    for i in range(spec.dim):
        Z[i] = pearson_standard(spec.skew[i], spec.kurt[i], count, rng)
    return spec.mean[:, None] + spec.chol @ Z


# ----------------------------------------------------------------------------
# weighted point-set moments

def weighted_central_moments(points, mean):
    """Weighted covariance and deviations of a sigma-point set about ``mean``.

    Parameters
    ----------
    points : SigmaPointSet
        Anything with ``points`` (n, N) and ``weights`` (N,) attributes.
    mean : (n,) array_like

    Returns
    -------
    cov : (n, n) ndarray
    deviations : (n, N) ndarray
    """
    X = np.asarray(points.points, dtype=float)
    w = np.asarray(points.weights, dtype=float)
    dev = X - np.asarray(mean, dtype=float).reshape(-1, 1)
    return (dev * w) @ dev.T, dev


def standardized_moments(deviations, weights, S):
    """Per-marginal skewness and kurtosis of ``S^-1 deviations``.

    Returns
    -------
    skew, kurt : ndarray, shape (n,)
    """
    Xn = tri_solve(S, deviations, "lower")
    X2 = Xn * Xn
    w = np.asarray(weights, dtype=float)
    return (X2 * Xn) @ w, (X2 * X2) @ w
