"""Generic sigma-point LLMS filter with UKF, SRUKF, CUT and HOUSE instantiations."""
from dataclasses import dataclass, replace
from functools import lru_cache
import logging
import math
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve

from .errors import (DegenerateDeviationError, FilterError, IndefiniteDowndateError,
                     MeasurementCovarianceSingular, ParameterError, SigmaODError)
from .moments import MomentSpec, standardized_moments
from .sigma_points import HouseParams, cut_points, house_points, ut_points
from .sqrt_linalg import (chol_update, chol_update_multi, sqrt_from_weighted_deviations,
                          tri_solve)

__all__ = [
    "FilterEstimate",
    "FilterKind",
    "StateModel",
    "MeasModel",
    "predict",
    "update",
    "run_filter",
    "wrap_angle",
    "FILTER_NAMES",
]

log = logging.getLogger(__name__)

FILTER_NAMES = ("UKF", "SRUKF", "CUT4", "CUT6", "DELTA_HOUSE", "W_HOUSE")
_ALIASES = {
    "ukf": "UKF", "srukf": "SRUKF", "cut4": "CUT4", "cut-4": "CUT4", "cut6": "CUT6",
    "cut-6": "CUT6", "dhouse": "DELTA_HOUSE", "delta_house": "DELTA_HOUSE",
    "delta-house": "DELTA_HOUSE", "whouse": "W_HOUSE", "w_house": "W_HOUSE",
    "w-house": "W_HOUSE",
}


def wrap_angle(x):
    """Wrap angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - x, 2 * np.pi)


@dataclass(frozen=True)
class FilterKind:
    """Which filter to run and its generator parameters.

    Parameters
    ----------
    name : str
        One of ``FILTER_NAMES``.
    kappa : float
        UT tuning scalar (UKF, SRUKF).
    delta : float
        Floor parameter for DELTA_HOUSE.
    w_threshold : float
        Reset threshold for W_HOUSE; ``-inf`` disables resets.
    floor : bool or None
        Kurtosis floor override; ``None`` keeps the mode default.
    posterior_moments : {'updated', 'prior'}
        Deviations used to refresh skew/kurt after an update: the prior
        deviations corrected by the gain (``'updated'``), or the prior
        deviations as they are (``'prior'``).
    jitter : float
        Relative diagonal jitter for the single retry after an indefinite
        downdate, scaled by trace/n of the prior covariance.
    """

    name: str
    kappa: float = 0.0
    delta: float = 0.0
    w_threshold: float = -0.1
    floor: bool | None = None
    posterior_moments: str = "updated"
    jitter: float = 1e-12

    def __post_init__(self):
        if self.name not in FILTER_NAMES:
            raise ParameterError(f"unknown filter kind {self.name!r}")
        if self.posterior_moments not in ("updated", "prior"):
            raise ParameterError(f"unknown posterior_moments {self.posterior_moments!r}")
        if self.is_house:
            self.house_params  # validates delta / threshold

    @classmethod
    def parse(cls, label, **params):
        key = label.strip()
        name = _ALIASES.get(key.lower(), key.upper())
        return cls(name, **params)

    @classmethod
    def ukf(cls, kappa=0.0):
        return cls("UKF", kappa=kappa)

    @classmethod
    def srukf(cls, kappa=0.0):
        return cls("SRUKF", kappa=kappa)

    @classmethod
    def cut4(cls):
        return cls("CUT4")

    @classmethod
    def cut6(cls):
        return cls("CUT6")

    @classmethod
    def delta_house(cls, delta=0.0, floor=True, **kw):
        return cls("DELTA_HOUSE", delta=delta, floor=floor, **kw)

    @classmethod
    def w_house(cls, w_threshold=-0.1, floor=False, **kw):
        return cls("W_HOUSE", w_threshold=w_threshold, floor=floor, **kw)

    @property
    def sqrt_form(self):
        return self.name in ("SRUKF", "W_HOUSE")

    @property
    def is_house(self):
        return self.name in ("DELTA_HOUSE", "W_HOUSE")

    @property
    def house_params(self):
        if self.name == "DELTA_HOUSE":
            return HouseParams("delta", delta=self.delta, floor=self.floor)
        if self.name == "W_HOUSE":
            return HouseParams("w", w_threshold=self.w_threshold, floor=self.floor)
        return None

    @property
    def label(self):
        return self.name


@dataclass(eq=False)
class StateModel:
    """Discrete-time dynamics ``x1 = F(x0, w, t0, t1)`` applied to point columns.

    ``propagate(X, W, t0, t1)`` receives states as columns of ``X`` (n_x, N)
    and process noise as columns of ``W`` (n_w, N), or ``None`` when
    ``additive_noise`` is set; then the filter adds ``W`` itself and only
    propagates the distinct state columns.
    """

    propagate: Callable
    n_x: int
    n_w: int
    additive_noise: bool = False


@dataclass(eq=False)
class MeasModel:
    """Measurement function ``z = h(x, v, epoch)`` applied to point columns.

    ``angular`` flags components that are angles; their innovations and
    point deviations are wrapped to (-pi, pi].
    """

    measure: Callable
    n_z: int
    n_v: int
    angular: tuple = ()
    additive_noise: bool = True

    def __post_init__(self):
        mask = np.zeros(self.n_z, dtype=bool)
        if len(self.angular):
            mask[:] = np.asarray(self.angular, dtype=bool)
        self.angular = mask


@dataclass(eq=False)
class FilterEstimate:
    """An epoch-stamped MomentSpec.

    ``form`` is ``'full'`` or ``'sqrt'``. ``resets`` counts w-mode resets in
    the step that produced this estimate; ``innovation`` is set when it came
    out of a measurement update.
    """

    epoch: float
    spec: MomentSpec
    form: str = "full"
    innovation: np.ndarray | None = None
    resets: int = 0

    @property
    def mean(self):
        return self.spec.mean

    @property
    def cov(self):
        return self.spec.cov


# ----------------------------------------------------------------------------
# internals

def _augment(spec, noise):
    if noise is None:
        return spec.mean, spec.chol, spec.skew, spec.kurt
    return (np.concatenate([spec.mean, noise.mean]),
            _block_diag(spec.chol, noise.chol),
            np.concatenate([spec.skew, noise.skew]),
            np.concatenate([spec.kurt, noise.kurt]))


def _generate(kind, mean, chol, skew, kurt):
    if kind.name in ("UKF", "SRUKF"):
        return ut_points(mean, chol, kind.kappa)
    if kind.name == "CUT4":
        return cut_points(mean, chol, 4)
    if kind.name == "CUT6":
        return cut_points(mean, chol, 6)
    spec = MomentSpec(mean, chol=chol, skew=skew, kurt=kurt, check=False)
    return house_points(spec, kind.house_params)


def _block_diag(A, B):
    n, m = A.shape[0], B.shape[0]
    out = np.zeros((n + m, n + m))
    out[:n, :n] = A
    out[n:, n:] = B
    return out


def _collapse(X, central):
    """Columns to evaluate and the map back. Repeated columns (the noise-only
    points of an augmented set, or conjugate points differing only in their
    noise block) are evaluated once."""
    N = X.shape[1]
    if N > 4 * X.shape[0] + 8:
        _, cols, inv = np.unique(X, axis=1, return_index=True, return_inverse=True)
        if cols.size == N:
            return None, None
        return cols, inv.reshape(-1)
    c = 0 if central is None else central
    same = np.all(X == X[:, c:c + 1], axis=0)
    if same.sum() < 2:
        return None, None
    keep = ~same
    keep[c] = True
    cols = np.flatnonzero(keep)
    inv = np.searchsorted(cols, np.where(same, c, np.arange(N)))
    return cols, inv


def _finite(Y, what):
    if not np.all(np.isfinite(Y)):
        raise FloatingPointError(f"non-finite {what} sigma points")
    return Y


def _propagate(dyn, Xs, W, t0, t1, central=None):
    if not dyn.additive_noise:
        return _finite(np.asarray(dyn.propagate(Xs, W, t0, t1), dtype=float), "propagated")
    cols, inv = _collapse(Xs, central)
    if cols is not None:
        Y = np.asarray(dyn.propagate(Xs[:, cols], None, t0, t1), dtype=float)[:, inv]
    else:
        Y = np.asarray(dyn.propagate(Xs, None, t0, t1), dtype=float)
    _finite(Y, "propagated")
    return Y if W is None else Y + W


def _measure(mm, Xs, V, epoch, central=None):
    if not mm.additive_noise:
        return _finite(np.asarray(mm.measure(Xs, V, epoch), dtype=float), "measured")
    cols, inv = _collapse(Xs, central)
    if cols is not None:
        Z = np.asarray(mm.measure(Xs[:, cols], None, epoch), dtype=float)[:, inv]
    else:
        Z = np.asarray(mm.measure(Xs, None, epoch), dtype=float)
    _finite(Z, "measured")
    return Z if V is None else Z + V


@lru_cache(maxsize=64)
def _others(N, central):
    return np.array([j for j in range(N) if j != central])


def _sqrt_factor(dev, w, central):
    """Lower factor of sum_j w_j dev_j dev_j^T: QR over non-central columns, then
    a signed rank-one correction with the central column."""
    if central is None:
        wk, D = w, dev
    else:
        idx = _others(w.shape[0], central)
        wk, D = w[idx], dev[:, idx]
    if wk.min() < 0:
        raise ParameterError("square-root form needs nonnegative non-central weights")
    S = sqrt_from_weighted_deviations(D * np.sqrt(wk))
    if central is not None and w[central] != 0:
        S = chol_update(S, dev[:, central], w[central])
    return S


def _full_factor(P, what):
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteDowndateError(f"{what} covariance is not positive definite") from exc


def _gaussian_moments(n):
    return np.zeros(n), np.full(n, 3.0)


# ----------------------------------------------------------------------------
# public steps

def predict(est, kind, dyn, noise, t1):
    """Time update from ``est.epoch`` to ``t1``.

    Parameters
    ----------
    est : FilterEstimate
    kind : FilterKind
    dyn : StateModel
    noise : MomentSpec or None
        Process noise moments; ``None`` for noise-free dynamics.
    t1 : float

    Returns
    -------
    FilterEstimate
    """
    if t1 < est.epoch:
        raise ParameterError(f"cannot predict backwards from {est.epoch} to {t1}")
    spec = est.spec
    nx = spec.dim
    sp = _generate(kind, *_augment(spec, noise))
    X = sp.points
    W = X[nx:] if noise is not None else None
    X1 = _propagate(dyn, X[:nx], W, est.epoch, t1, sp.central_index)
    w = sp.weights
    m = X1 @ w
    dev = X1 - m[:, None]
    if kind.sqrt_form:
        S = _sqrt_factor(dev, w, sp.central_index)
        P = None
    else:
        P = (dev * w) @ dev.T
        P = 0.5 * (P + P.T)
        S = _full_factor(P, "predicted")
    if kind.is_house:
        skew, kurt = standardized_moments(dev, w, S)
    else:
        skew, kurt = _gaussian_moments(nx)
    out = MomentSpec(m, cov=P, chol=S, skew=skew, kurt=kurt, check=False)
    return FilterEstimate(t1, out, "sqrt" if kind.sqrt_form else "full", resets=int(sp.reset))


def update(est, kind, meas, mm, noise, _retry=True):
    """Measurement update.

    Parameters
    ----------
    est : FilterEstimate
        Prior at the measurement epoch.
    kind : FilterKind
    meas : (n_z,) array_like
    mm : MeasModel
    noise : MomentSpec or None
        Measurement noise moments.

    Returns
    -------
    posterior : FilterEstimate
    innovation : ndarray
        ``meas - z_m`` with angular components wrapped to (-pi, pi].
    """
    try:
        return _update(est, kind, np.asarray(meas, dtype=float).reshape(-1), mm, noise)
    except IndefiniteDowndateError as exc:
        if not _retry:
            raise
        spec = est.spec
        P = spec.cov
        eps = kind.jitter * np.trace(P) / spec.dim
        log.warning("%s: %s at epoch %s; retrying with jitter %.3e", kind.label, exc,
                    est.epoch, eps)
        Pj = P + eps * np.eye(spec.dim)
        try:
            S = np.linalg.cholesky(Pj)
        except np.linalg.LinAlgError:
            raise exc
        jit = MomentSpec(spec.mean, cov=Pj, chol=S, skew=spec.skew, kurt=spec.kurt,
                         check=False)
        return update(replace(est, spec=jit), kind, meas, mm, noise, _retry=False)


def _update(est, kind, meas, mm, noise):
    spec = est.spec
    nx = spec.dim
    sp = _generate(kind, *_augment(spec, noise))
    X = sp.points
    Xs = X[:nx]
    V = X[nx:] if noise is not None else None
    Z = _measure(mm, Xs, V, est.epoch, sp.central_index)
    w = sp.weights
    ang = mm.angular
    ref = Z[:, sp.central_index if sp.central_index is not None else 0].copy()
    dZ = Z - ref[:, None]
    if ang.any():
        dZ[ang] = wrap_angle(dZ[ang])
    shift = dZ @ w
    zm = ref + shift
    dz = dZ - shift[:, None]
    dx = Xs - (Xs @ w)[:, None]
    Pxz = (dx * w) @ dz.T
    innov = meas - zm
    if ang.any():
        innov[ang] = wrap_angle(innov[ang])
    if kind.sqrt_form:
        try:
            Sz = _sqrt_factor(dz, w, sp.central_index)
        except (DegenerateDeviationError, IndefiniteDowndateError) as exc:
            raise MeasurementCovarianceSingular(str(exc)) from exc
        K = tri_solve(Sz, tri_solve(Sz, Pxz.T, "lower"), "upper-transpose").T
        S = chol_update_multi(spec.chol, K @ Sz, -1.0)
        P = None
    else:
        Pz = (dz * w) @ dz.T
        Pz = 0.5 * (Pz + Pz.T)
        try:
            Lz = np.linalg.cholesky(Pz)
        except np.linalg.LinAlgError as exc:
            raise MeasurementCovarianceSingular("innovation covariance not positive definite") from exc
        K = cho_solve((Lz, True), Pxz.T).T
        P = spec.cov - K @ Pxz.T
        P = 0.5 * (P + P.T)
        S = _full_factor(P, "posterior")
    m = spec.mean + K @ innov
    if kind.is_house:
        dxp = dx - K @ dz if kind.posterior_moments == "updated" else dx
        skew, kurt = standardized_moments(dxp, w, S)
    else:
        skew, kurt = _gaussian_moments(nx)
    out = MomentSpec(m, cov=P, chol=S, skew=skew, kurt=kurt, check=False)
    form = "sqrt" if kind.sqrt_form else "full"
    return FilterEstimate(est.epoch, out, form, innovation=innov, resets=int(sp.reset)), innov


def run_filter(kind, init, dyn, mm, noises, timeline, max_step=math.inf):
    """Alternate predictions and updates along a timeline.

    Parameters
    ----------
    kind : FilterKind
    init : FilterEstimate
    dyn : StateModel
    mm : MeasModel
    noises : (MomentSpec or None, MomentSpec or None)
        Process and measurement noise.
    timeline : iterable of (epoch, measurement or None)
        Strictly increasing epochs, none before ``init.epoch``.
    max_step : float
        Longest single prediction; longer gaps are split into equal substeps,
        each with its own process-noise injection.

    Returns
    -------
    list of FilterEstimate
        One per timeline entry.
    """
    q, r = noises
    est = init
    if not kind.is_house:
        sk, ku = _gaussian_moments(init.spec.dim)
        est = replace(init, spec=init.spec.with_moments(sk, ku))
    est = replace(est, form="sqrt" if kind.sqrt_form else "full")
    out = []
    prev = None
    for t, z in timeline:
        t = float(t)
        if prev is not None and not t > prev:
            raise ParameterError(f"timeline not strictly increasing at {t}")
        prev = t
        try:
            resets = 0
            if t > est.epoch:
                t0 = est.epoch
                nsub = max(1, math.ceil((t - t0) / max_step - 1e-9))
                h = (t - t0) / nsub
                for i in range(1, nsub + 1):
                    ti = t if i == nsub else t0 + i * h
                    est = predict(est, kind, dyn, q, ti)
                    resets += est.resets
            elif t < est.epoch:
                raise ParameterError(f"timeline epoch {t} precedes estimate epoch {est.epoch}")
            if z is not None:
                est, _ = update(est, kind, z, mm, r)
                resets += est.resets
            est = replace(est, resets=resets)
        except SigmaODError as exc:
            raise FilterError(f"{kind.label} failed at epoch {t}: {exc}", epoch=t) from exc
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise FilterError(f"{kind.label} failed at epoch {t}: {exc}", epoch=t) from exc
        out.append(est)
    return out
