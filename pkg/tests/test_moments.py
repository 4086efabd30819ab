import numpy as np
import pytest
from scipy import integrate, stats

from sigmaod.errors import MomentFeasibilityError, ParameterError
from sigmaod.moments import (MomentSpec, _sampler, _TypeIV, pearson_sample, pearson_standard,
                             pearson_type, standardized_moments, weighted_central_moments)
from sigmaod.sigma_points import HouseParams, SigmaPointSet, house_points, ut_points
from sigmaod.sqrt_linalg import sqrt_from_weighted_deviations

from conftest import random_spd


def sample_moments(x):
    m = x.mean()
    c = x - m
    v = np.mean(c * c)
    return m, v, np.mean(c ** 3) / v ** 1.5, np.mean(c ** 4) / v ** 2


# ----------------------------------------------------------------------------
# MomentSpec

def test_spec_defaults_and_factor(rng):
    P = random_spd(rng, 3)
    s = MomentSpec(np.zeros(3), cov=P)
    assert s.is_gaussian
    assert np.allclose(s.chol @ s.chol.T, P, rtol=1e-12)
    t = MomentSpec.from_std([1.0, 2.0], [3.0, 4.0], skew=0.5, kurt=5.0)
    assert np.allclose(t.cov, np.diag([9.0, 16.0]))
    assert np.array_equal(t.skew, [0.5, 0.5])


def test_spec_rejects_bad_inputs():
    with pytest.raises(MomentFeasibilityError):
        MomentSpec([0.0], cov=[[1.0]], skew=2.0, kurt=4.0)
    with pytest.raises(ParameterError):
        MomentSpec([0.0, 0.0], cov=[[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(ParameterError):
        MomentSpec([0.0, 0.0], cov=[[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ParameterError):
        MomentSpec([0.0], cov=None)


# ----------------------------------------------------------------------------
# Pearson classification and sampling

@pytest.mark.parametrize("skew,kurt,kind", [
    (0.0, 3.0, "normal"), (0.0, 2.0, "I"), (0.0, 5.0, "IV"), (1.0, 3.0, "I"),
    (1.0, 4.5, "III"), (1.0, 30.0, "IV"), (-1.0, 30.0, "IV"), (-1.6, 10.0, "IV"),
    (2.0, 12.0, "VI"),
])
def test_pearson_type(skew, kurt, kind):
    assert pearson_type(skew, kurt) == kind


def test_pearson_type_v_boundary():
    # type V sits on kappa = 1: b1 (b2+3)^2 = 4 (4 b2 - 3 b1)(2 b2 - 3 b1 - 6)
    from scipy.optimize import brentq
    b1 = 1.0
    f = lambda b2: b1 * (b2 + 3) ** 2 - 4 * (4 * b2 - 3 * b1) * (2 * b2 - 3 * b1 - 6)
    b2 = brentq(f, 4.6, 20.0)
    assert pearson_type(1.0, b2) == "V"


def test_infeasible_pair():
    with pytest.raises(MomentFeasibilityError):
        pearson_standard(2.0, 4.0, 10, np.random.default_rng(0))
    with pytest.raises(MomentFeasibilityError):
        pearson_sample(MomentSpec([0.0], cov=[[1.0]], skew=2.0, kurt=4.0, check=False), 5, 0)


def _type_iv_density_moments(skew, kurt):
    # oracle: integrate the x-space Pearson IV density directly
    d = _TypeIV(skew, kurt, grid=16)
    m = (d.r + 2) / 2
    logf = lambda x: (-m * np.log1p(((x - d.lam) / d.a) ** 2)
                      - d.nu * np.arctan((x - d.lam) / d.a))
    f = lambda x: np.exp(logf(x))
    mom = [integrate.quad(lambda x, k=k: x ** k * f(x), -np.inf, np.inf, limit=400)[0]
           for k in range(5)]
    mu = mom[1] / mom[0]
    c = [integrate.quad(lambda x, k=k: (x - mu) ** k * f(x), -np.inf, np.inf, limit=400)[0]
         / mom[0] for k in (2, 3, 4)]
    return mu, c[0], c[1] / c[0] ** 1.5, c[2] / c[0] ** 2


@pytest.mark.parametrize("skew,kurt", [(1.0, 30.0), (-1.0, 30.0), (-1.6, 10.0), (0.5, 6.0)])
def test_type_iv_parameters_match_moments(skew, kurt):
    mu, var, s, k = _type_iv_density_moments(skew, kurt)
    assert abs(mu) < 1e-7
    assert var == pytest.approx(1.0, rel=1e-7)
    assert s == pytest.approx(skew, rel=1e-6)
    assert k == pytest.approx(kurt, rel=1e-6)


@pytest.mark.parametrize("skew,kurt", [(1.0, 30.0), (-1.6, 10.0)])
def test_type_iv_inverse_cdf(skew, kurt):
    # the sampler's quantiles against a quadrature CDF of the x-space density
    d = _TypeIV(skew, kurt)
    m = (d.r + 2) / 2
    f = lambda x: np.exp(-m * np.log1p(((x - d.lam) / d.a) ** 2)
                         - d.nu * np.arctan((x - d.lam) / d.a))
    total = integrate.quad(f, -np.inf, np.inf, limit=400)[0]
    for u in (0.001, 0.05, 0.3, 0.5, 0.7, 0.95, 0.999):
        x = float(d.ppf(np.array([u]))[0])
        cdf = integrate.quad(f, -np.inf, x, limit=400)[0] / total
        assert cdf == pytest.approx(u, abs=2e-6)


@pytest.mark.parametrize("skew,kurt", [(0.0, 2.0), (0.8, 2.5), (1.0, 4.5), (-1.0, 4.5),
                                       (2.0, 12.0), (-2.0, 12.0)])
def test_other_types_standardized(skew, kurt):
    # ppf integrated over u gives the sampler's exact moments
    ppf = _sampler(float(skew), float(kurt))
    quad = lambda g: integrate.quad(g, 0, 1, limit=500, epsabs=1e-11)[0]
    m1 = quad(lambda u: ppf(np.array([u]))[0])
    m2 = quad(lambda u: ppf(np.array([u]))[0] ** 2)
    m3 = quad(lambda u: ppf(np.array([u]))[0] ** 3)
    m4 = quad(lambda u: ppf(np.array([u]))[0] ** 4)
    assert abs(m1) < 1e-6
    assert m2 == pytest.approx(1.0, rel=1e-5)
    assert m3 == pytest.approx(skew, abs=2e-4)
    assert m4 == pytest.approx(kurt, rel=1e-3)


def test_gaussian_branch():
    x = pearson_sample(MomentSpec([0.0], cov=[[1.0]]), 10 ** 6, 7)[0]
    se = 1.0 / np.sqrt(x.size)
    assert abs(x.mean()) < 5 * se
    assert abs(x.var() - 1.0) < 5 * np.sqrt(2.0) * se


def test_projectile_process_noise_skewness():
    spec = MomentSpec.from_std([0.0], [0.01], skew=1.0, kurt=30.0)
    _, v, s, _ = sample_moments(pearson_sample(spec, 10 ** 6, 11)[0])
    assert abs(s - 1.0) < 0.15
    assert v == pytest.approx(1e-4, rel=0.05)


def test_sampling_is_reproducible():
    spec = MomentSpec.from_std([1.0, 2.0], [0.5, 2.0], skew=[-1.0, 0.3], kurt=[30.0, 4.0])
    a = pearson_sample(spec, 1000, 3)
    b = pearson_sample(spec, 1000, 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, pearson_sample(spec, 1000, 4))


def test_correlated_affine_transform(rng):
    P = random_spd(rng, 3, cond=10)
    spec = MomentSpec([1.0, -2.0, 3.0], cov=P, skew=[0.5, 0.0, -0.5], kurt=[5.0, 3.0, 6.0])
    X = pearson_sample(spec, 400000, 5)
    assert np.allclose(X.mean(axis=1), spec.mean, atol=5 * np.sqrt(np.diag(P).max() / 4e5))
    assert np.allclose(np.cov(X), P, rtol=0.03, atol=0.03 * np.abs(P).max())


def test_zero_skew_sample_skewness_vanishes():
    x = pearson_standard(0.0, 5.0, 10 ** 6, np.random.default_rng(9))
    # skewness standard error for kurtosis 5 is about sqrt(C/n), C of order tens
    assert abs(sample_moments(x)[2]) < 0.05


# ----------------------------------------------------------------------------
# weighted point-set moments

def test_weighted_central_moments_trivial():
    sp = SigmaPointSet(np.array([[1.0, -1.0], [0.0, 0.0]]), np.array([0.5, 0.5]))
    cov, dev = weighted_central_moments(sp, np.zeros(2))
    assert np.array_equal(cov, np.diag([1.0, 0.0]))
    assert np.array_equal(dev, sp.points)
    one = SigmaPointSet(np.array([[2.0], [3.0]]), np.array([1.0]))
    assert np.array_equal(weighted_central_moments(one, [2.0, 3.0])[0], np.zeros((2, 2)))


def test_house_gaussian_covariance():
    spec = MomentSpec([0.5], cov=[[2.0]])
    sp = house_points(spec, HouseParams())
    cov, _ = weighted_central_moments(sp, spec.mean)
    assert cov[0, 0] == pytest.approx(2.0, rel=1e-12)


def test_standardized_moments_symmetric_set(rng):
    P = random_spd(rng, 3)
    sp = ut_points(np.ones(3), np.linalg.cholesky(P), 1.0)
    cov, dev = weighted_central_moments(sp, np.ones(3))
    skew, _ = standardized_moments(dev, sp.weights, np.linalg.cholesky(cov))
    assert np.all(np.abs(skew) < 1e-15)


def test_standardized_moments_ut_kurtosis():
    sp = ut_points(np.zeros(1), np.eye(1), 2.0)
    cov, dev = weighted_central_moments(sp, np.zeros(1))
    _, kurt = standardized_moments(dev, sp.weights, np.linalg.cholesky(cov))
    assert kurt[0] == pytest.approx(3.0, abs=1e-12)


def test_house_round_trip_moments(rng):
    n = 6
    P = random_spd(rng, n)
    spec = MomentSpec(rng.normal(size=n), cov=P, skew=-1.6, kurt=10.0)
    sp = house_points(spec, HouseParams(mode="w", w_threshold=-np.inf))
    cov, dev = weighted_central_moments(sp, spec.mean)
    wk = np.delete(sp.weights, sp.central_index)
    S = sqrt_from_weighted_deviations(np.delete(dev, sp.central_index, axis=1) * np.sqrt(wk))
    from sigmaod.sqrt_linalg import chol_update
    S = chol_update(S, dev[:, sp.central_index], sp.weights[sp.central_index])
    skew, kurt = standardized_moments(dev, sp.weights, S)
    assert np.allclose(skew, -1.6, atol=1e-10)
    assert np.allclose(kurt, 10.0, atol=1e-10)
    assert np.allclose(cov, P, rtol=1e-10, atol=1e-10 * np.abs(P).max())
