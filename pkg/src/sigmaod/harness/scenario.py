"""Truth and measurement synthesis."""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from ..astro.dynamics import ForceModel, cartesian_rates
from ..astro.elements import cart_to_mee
from ..astro.gravity import load_harmonics
from ..astro.integrate import integrate_rk
from ..errors import EmptyScenarioError
from ..filters import FilterEstimate, wrap_angle
from ..moments import MomentSpec, pearson_sample, standardized_moments
from ..sensors import (GroundStation, azel_model, azel_values, orbit_meas_model, orbit_model,
                       projectile_model, projectile_rates, radar_values, radec_values, visible)
from ..sigma_points import HouseParams, house_points

__all__ = ["Scenario", "synthesize", "track_labels", "filter_models", "initial_estimate",
           "cached_harmonics"]


@dataclass(eq=False)
class Scenario:
    """One truth/measurement realization.

    Attributes
    ----------
    times : (K,) measurement epochs, seconds past the scenario start
    truth : (6, K) true Cartesian state at those epochs
    z : (n_z, K) measurements
    tracks : (K,) track label (1-based) of every measurement epoch
    x0 : (6,) true initial state at t = 0
    """

    times: np.ndarray
    truth: np.ndarray
    z: np.ndarray
    tracks: np.ndarray
    x0: np.ndarray
    seed: int

    @property
    def n_tracks(self):
        return int(self.tracks.max()) if self.tracks.size else 0

    def track_bounds(self):
        """(first, last) epoch of each track."""
        return [(float(self.times[self.tracks == k][0]), float(self.times[self.tracks == k][-1]))
                for k in range(1, self.n_tracks + 1)]


def track_labels(indices):
    """Label runs of consecutive integers 1, 2, ... (a gap starts a new track)."""
    idx = np.asarray(indices)
    if idx.size == 0:
        return np.zeros(0, dtype=int)
    breaks = np.concatenate([[0], (np.diff(idx) != 1).astype(int)])
    return np.cumsum(breaks) + 1


@lru_cache(maxsize=8)
def cached_harmonics(path):
    return load_harmonics(path)


def _forces(cfg):
    model = cached_harmonics(cfg.gravity_path)
    truth = ForceModel(model, cfg.truth_degree, cfg.truth_order, cfg.truth_third_bodies, cfg.start)
    filt = ForceModel(model, cfg.filter_degree, cfg.filter_order, cfg.filter_third_bodies,
                      cfg.start)
    return truth, filt


def synthesize(cfg, seed):
    """Draw the truth trajectory and the measurement sequence for one trial.

    Random numbers are drawn in a fixed order from ``default_rng(seed)``:
    initial state, then process noise for every interval, then measurement
    noise for every epoch.
    """
    rng = np.random.default_rng(seed)
    nmax = int(math.floor(cfg.duration / cfg.interval + 1e-9))
    x = pearson_sample(cfg.initial, 1, rng)[:, 0]
    x0 = x.copy()
    W = pearson_sample(cfg.process, nmax, rng) if cfg.truth_process_noise else None
    V = pearson_sample(cfg.measurement, nmax, rng)
    times, truth, z, kept = [], [], [], []
    if cfg.is_orbit:
        force, _ = _forces(cfg)
        f = cartesian_rates(force)
        stn = GroundStation(cfg.station)
        for k in range(1, nmax + 1):
            t0, t1 = (k - 1) * cfg.interval, k * cfg.interval
            x = integrate_rk(f, x, t0, t1, cfg.truth_step)
            if W is not None:
                x = x + W[:, k - 1]
            ep = cfg.start + t1
            if not visible(x[:3].reshape(3, 1), stn, ep, cfg.min_elevation)[0]:
                continue
            if cfg.sensor == "radar":
                zk = radar_values(x[:3, None], x[3:, None], stn, ep)[:, 0] + V[:, k - 1]
                zk[2] = np.mod(zk[2], 2 * np.pi)
                zk[3] = np.clip(zk[3], -np.pi / 2, np.pi / 2)
            else:
                zk = radec_values(x[:3, None], stn, ep)[:, 0] + V[:, k - 1]
                zk[0] = np.mod(zk[0], 2 * np.pi)
                zk[1] = np.clip(zk[1], -np.pi / 2, np.pi / 2)
            times.append(t1)
            truth.append(x.copy())
            z.append(zk)
            kept.append(k)
    else:
        zero = np.zeros(3)
        for k in range(1, nmax + 1):
            t0, t1 = (k - 1) * cfg.interval, k * cfg.interval
            fk = W[:, k - 1] if W is not None else zero
            x = integrate_rk(lambda t, s: projectile_rates(s, fk, cfg.drag_b, cfg.gravity_g),
                             x, t0, t1, cfg.truth_step)
            if x[2] <= 0 and x[5] < 0:
                break   # back on the ground
            zk = azel_values(x[:3, None])[:, 0] + V[:, k - 1]
            zk[0] = wrap_angle(zk[0])
            zk[1] = np.clip(zk[1], -np.pi / 2, np.pi / 2)
            times.append(t1)
            truth.append(x.copy())
            z.append(zk)
            kept.append(k)
    if not times:
        raise EmptyScenarioError(f"no visible measurement epochs (seed {seed})")
    tracks = track_labels(kept) if cfg.is_orbit else np.ones(len(kept), dtype=int)
    return Scenario(np.array(times), np.array(truth).T, np.array(z).T, tracks, x0, int(seed))


def filter_models(cfg):
    """(StateModel, MeasModel) used by every filter in the scenario."""
    if not cfg.is_orbit:
        return projectile_model(cfg.drag_b, cfg.gravity_g, cfg.filter_step), azel_model()
    _, force = _forces(cfg)
    dyn = orbit_model(force, cfg.filter_step, cfg.representation)
    mm = orbit_meas_model(GroundStation(cfg.station), cfg.start, cfg.sensor, cfg.representation,
                          force.mu)
    return dyn, mm


def _mee_initial(spec, mu):
    # map the Cartesian four-moment prior into MEE through a HOUSE point set
    sp = house_points(spec, HouseParams("delta", floor=False))
    Y = cart_to_mee(sp.points, mu)
    Y[5] = Y[5, -1] + wrap_angle(Y[5] - Y[5, -1])
    m = Y @ sp.weights
    dev = Y - m[:, None]
    P = (dev * sp.weights) @ dev.T
    P = 0.5 * (P + P.T)
    S = np.linalg.cholesky(P)
    skew, kurt = standardized_moments(dev, sp.weights, S)
    return MomentSpec(m, cov=P, chol=S, skew=skew, kurt=kurt, check=False)


def initial_estimate(cfg):
    spec = cfg.initial
    if cfg.is_orbit and cfg.representation == "mee":
        spec = _mee_initial(spec, cached_harmonics(cfg.gravity_path).mu)
    return FilterEstimate(0.0, spec)
