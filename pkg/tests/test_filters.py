from dataclasses import replace

import numpy as np
import pytest

from sigmaod import filters as F
from sigmaod.errors import FilterError, IndefiniteDowndateError, ParameterError
from sigmaod.filters import (FILTER_NAMES, FilterEstimate, FilterKind, MeasModel, StateModel,
                             predict, run_filter, update, wrap_angle)
from sigmaod.moments import MomentSpec, pearson_sample
from sigmaod.sensors import projectile_model

from conftest import random_spd


@pytest.fixture(scope="module")
def linear_problem():
    rng = np.random.default_rng(1)
    n, nz = 4, 2
    A = np.eye(n) + 0.1 * rng.standard_normal((n, n))
    H = rng.standard_normal((nz, n))
    Q = np.diag(rng.uniform(0.1, 1, n))
    R = np.diag(rng.uniform(0.1, 1, nz))
    m0 = rng.standard_normal(n)
    truth, tl = m0.copy(), []
    for k in range(1, 41):
        truth = A @ truth + rng.multivariate_normal(np.zeros(n), Q)
        tl.append((float(k), H @ truth + rng.multivariate_normal(np.zeros(nz), R)))
    return A, H, Q, R, m0, tl


def kalman(A, H, Q, R, m, P, tl):
    # textbook linear Kalman filter, the oracle for every kind on a linear model
    out = []
    for _, z in tl:
        m = A @ m
        P = A @ P @ A.T + Q
        Sz = H @ P @ H.T + R
        K = np.linalg.solve(Sz, H @ P).T
        m = m + K @ (z - H @ m)
        P = P - K @ Sz @ K.T
        out.append((m, P))
    return out


@pytest.mark.parametrize("name", FILTER_NAMES)
@pytest.mark.parametrize("additive", [False, True])
def test_linear_model_matches_kalman(name, additive, linear_problem):
    A, H, Q, R, m0, tl = linear_problem
    n, nz = A.shape[0], H.shape[0]
    if additive:
        dyn = StateModel(lambda X, W, t0, t1: A @ X, n, n, additive_noise=True)
        mm = MeasModel(lambda X, V, t: H @ X, nz, nz)
    else:
        dyn = StateModel(lambda X, W, t0, t1: A @ X + W, n, n)
        mm = MeasModel(lambda X, V, t: H @ X + V, nz, nz, additive_noise=False)
    init = FilterEstimate(0.0, MomentSpec(m0, cov=np.eye(n)))
    out = run_filter(FilterKind.parse(name), init, dyn, mm,
                     (MomentSpec(np.zeros(n), cov=Q), MomentSpec(np.zeros(nz), cov=R)), tl)
    ref = kalman(A, H, Q, R, m0, np.eye(n), tl)
    for est, (m, P) in zip(out, ref):
        assert np.allclose(est.mean, m, rtol=0, atol=1e-10 * np.abs(m).max())
        assert np.allclose(est.cov, P, rtol=0, atol=1e-10 * np.abs(P).max())


def test_identity_predict_keeps_moments(rng):
    P = random_spd(rng, 3)
    spec = MomentSpec(rng.normal(size=3), cov=P, skew=[0.5, -0.2, 0.0], kurt=[6.0, 4.0, 8.0])
    dyn = StateModel(lambda X, W, t0, t1: X, 3, 0)
    for name in FILTER_NAMES:
        kind = FilterKind.parse(name, w_threshold=-np.inf) if name == "W_HOUSE" else \
            FilterKind.parse(name)
        out = predict(FilterEstimate(0.0, spec), kind, dyn, None, 1.0)
        assert out.epoch == 1.0
        assert np.allclose(out.mean, spec.mean, atol=1e-12)
        assert np.allclose(out.cov, P, rtol=1e-10, atol=1e-12)


def test_house_predict_skew_of_linear_sum():
    # y = a x + w with x, w independent: third cumulants add exactly
    a, sx, sw, gx, gw = 0.7, 2.0, 1.5, 1.2, -0.8
    dyn = StateModel(lambda X, W, t0, t1: a * X + W, 1, 1)
    est = FilterEstimate(0.0, MomentSpec([1.0], cov=[[sx ** 2]], skew=gx, kurt=9.0))
    noise = MomentSpec([0.0], cov=[[sw ** 2]], skew=gw, kurt=7.0)
    var = a * a * sx * sx + sw * sw
    skew = (a ** 3 * gx * sx ** 3 + gw * sw ** 3) / var ** 1.5
    for kind in (FilterKind.delta_house(), FilterKind.w_house(w_threshold=-np.inf)):
        out = predict(est, kind, dyn, noise, 1.0)
        assert out.mean[0] == pytest.approx(a, rel=1e-12)
        assert out.cov[0, 0] == pytest.approx(var, rel=1e-12)
        assert out.spec.skew[0] == pytest.approx(skew, rel=1e-10)


def _scalar_measure():
    return MeasModel(lambda X, V, t: X[:1], 1, 1)


@pytest.mark.parametrize("name", FILTER_NAMES)
def test_zero_innovation_keeps_mean(name):
    spec = MomentSpec([2.0, -1.0], cov=[[1.0, 0.3], [0.3, 2.0]])
    est = FilterEstimate(0.0, spec)
    post, innov = update(est, FilterKind.parse(name), [2.0], _scalar_measure(),
                         MomentSpec([0.0], cov=[[0.5]]))
    assert abs(innov[0]) < 1e-12
    assert np.allclose(post.mean, spec.mean, atol=1e-12)
    assert post.cov[0, 0] == pytest.approx(1.0 - 1.0 / 1.5, rel=1e-10)


@pytest.mark.parametrize("name", FILTER_NAMES)
def test_uninformative_measurement(name):
    spec = MomentSpec([2.0, -1.0], cov=[[1.0, 0.3], [0.3, 2.0]])
    post, _ = update(FilterEstimate(0.0, spec), FilterKind.parse(name), [50.0],
                     _scalar_measure(), MomentSpec([0.0], cov=[[1e14]]))
    assert np.allclose(post.mean, spec.mean, atol=1e-11)
    assert np.allclose(post.cov, spec.cov, atol=1e-11)


def test_wrap_angle():
    x = np.array([0.0, np.pi, -np.pi, 3 * np.pi, 2 * np.pi - 0.1, -2 * np.pi + 0.1])
    assert np.allclose(wrap_angle(x), [0.0, np.pi, np.pi, np.pi, -0.1, 0.1])


@pytest.mark.parametrize("name", FILTER_NAMES)
def test_angular_innovation_wraps(name):
    # bearing of a point near the negative x axis: predicted near -pi, measured near +pi
    mm = MeasModel(lambda X, V, t: np.arctan2(X[1:2], X[:1]), 1, 1, angular=(True,))
    spec = MomentSpec([-10.0, -0.05], cov=np.diag([0.01, 0.01]))
    meas = np.pi - 0.001
    post, innov = update(FilterEstimate(0.0, spec), FilterKind.parse(name), [meas], mm,
                         MomentSpec([0.0], cov=[[1e-4]]))
    pred = np.arctan2(-0.05, -10.0)
    assert innov[0] == pytest.approx(wrap_angle(meas - pred), abs=1e-5)
    assert abs(innov[0]) < 0.01
    assert post.mean[1] > spec.mean[1] and np.all(np.isfinite(post.cov))


def test_jitter_retry(monkeypatch):
    calls = []
    real = F._update

    def flaky(est, *a):
        calls.append(est.spec.cov.copy())
        if len(calls) == 1:
            raise IndefiniteDowndateError("forced")
        return real(est, *a)

    monkeypatch.setattr(F, "_update", flaky)
    spec = MomentSpec([0.0, 0.0], cov=np.diag([4.0, 2.0]))
    kind = FilterKind("UKF", jitter=1e-6)
    update(FilterEstimate(0.0, spec), kind, [0.1], _scalar_measure(), MomentSpec([0.0], cov=[[1.0]]))
    assert len(calls) == 2
    assert np.allclose(calls[1] - calls[0], 3e-6 * np.eye(2), atol=1e-18)

    calls.clear()
    monkeypatch.setattr(F, "_update", lambda *a: (_ for _ in ()).throw(
        IndefiniteDowndateError("always")))
    with pytest.raises(IndefiniteDowndateError):
        update(FilterEstimate(0.0, spec), kind, [0.1], _scalar_measure(),
               MomentSpec([0.0], cov=[[1.0]]))


def test_run_filter_substeps_match_manual(linear_problem):
    A, H, Q, R, m0, _ = linear_problem
    n = A.shape[0]
    # continuous-ish model: one unit step is A, so a half step needs its own propagation
    dyn = StateModel(lambda X, W, t0, t1: X + (t1 - t0) * X * 0.1 + W, n, n)
    mm = MeasModel(lambda X, V, t: H @ X, H.shape[0], H.shape[0])
    q = MomentSpec(np.zeros(n), cov=Q)
    r = MomentSpec(np.zeros(H.shape[0]), cov=R)
    kind = FilterKind.cut4()
    init = FilterEstimate(0.0, MomentSpec(m0, cov=np.eye(n)))
    out = run_filter(kind, init, dyn, mm, (q, r), [(1.5, None)], max_step=0.5)
    est = init
    for t in (0.5, 1.0, 1.5):
        est = predict(est, kind, dyn, q, t)
    assert np.array_equal(out[0].mean, est.mean) and np.array_equal(out[0].cov, est.cov)


def test_run_filter_errors(linear_problem):
    A, H, Q, R, m0, _ = linear_problem
    n = A.shape[0]
    dyn = StateModel(lambda X, W, t0, t1: A @ X + W, n, n)
    mm = MeasModel(lambda X, V, t: H @ X, H.shape[0], H.shape[0])
    noises = (MomentSpec(np.zeros(n), cov=Q), MomentSpec(np.zeros(H.shape[0]), cov=R))
    init = FilterEstimate(1.0, MomentSpec(m0, cov=np.eye(n)))
    with pytest.raises(ParameterError):
        run_filter(FilterKind.ukf(), init, dyn, mm, noises, [(2.0, None), (2.0, None)])
    with pytest.raises(FilterError) as info:
        run_filter(FilterKind.ukf(), init, dyn, mm, noises, [(0.5, None)])
    assert info.value.epoch == 0.5
    bad = StateModel(lambda X, W, t0, t1: np.full_like(X, np.nan), n, n)
    with pytest.raises(FilterError):
        run_filter(FilterKind.ukf(), init, bad, mm, noises, [(2.0, None)])
    with pytest.raises(ParameterError):
        predict(init, FilterKind.ukf(), dyn, noises[0], 0.0)


def test_filter_kind_parse():
    assert FilterKind.parse("dhouse").name == "DELTA_HOUSE"
    assert FilterKind.parse("cut-6").name == "CUT6"
    assert FilterKind.parse("W_House").sqrt_form
    with pytest.raises(ParameterError):
        FilterKind.parse("ekf")
    with pytest.raises(ParameterError):
        FilterKind("UKF", posterior_moments="other")
    with pytest.raises(ParameterError):
        FilterKind.delta_house(delta=1.5)


def test_sqrt_form_rejects_negative_weights():
    spec = MomentSpec(np.zeros(4), cov=np.eye(4))
    dyn = StateModel(lambda X, W, t0, t1: X, 4, 0)
    # kappa = -2 gives a negative central weight, which the square-root form only
    # handles through the central downdate, so this must still work
    out = predict(FilterEstimate(0.0, spec), FilterKind.srukf(kappa=-2.0), dyn, None, 1.0)
    assert np.allclose(out.cov, np.eye(4))


@pytest.mark.parametrize("name", ["UKF", "CUT6", "DELTA_HOUSE", "W_HOUSE"])
def test_projectile_prediction_against_monte_carlo(name):
    # one 0.2 s step of the drag model from a skewed prior; the kurtosis is kept
    # moderate so the sample covariance of the drag terms is a sharp reference
    spec = MomentSpec.from_std([1000, 1000, 0, 500, 0, 500], [250, 250, 250, 100, 100, 100],
                               skew=0.5, kurt=6.0)
    noise = MomentSpec.from_std(np.zeros(3), [0.01] * 3, skew=1.0, kurt=30.0)
    dyn = projectile_model(max_step=0.1)
    N = 200000
    X = pearson_sample(spec, N, 21)
    W = pearson_sample(noise, N, 22)
    Y = dyn.propagate(X, W, 0.0, 0.2)
    mc_mean, mc_cov = Y.mean(axis=1), np.cov(Y)
    out = predict(FilterEstimate(0.0, spec), FilterKind.parse(name), dyn, noise, 0.2)
    se = np.sqrt(np.diag(mc_cov) / N)
    assert np.all(np.abs(out.mean - mc_mean) < 6 * se)
    sd = np.sqrt(np.diag(mc_cov))
    assert np.allclose(np.diag(out.cov) / np.diag(mc_cov), 1.0, atol=0.03)
    assert np.allclose(out.cov / np.outer(sd, sd), mc_cov / np.outer(sd, sd), atol=0.025)
