import math

import numpy as np
import pytest

import zicount as zc
from zicount import (
    CountDataset,
    DesignSpec,
    Family,
    FitOptions,
    ModelSpec,
    SimPlan,
    ZiType,
)
from zicount.exceptions import DataError, SeparationWarning
from zicount.fit import _truncated_mean_to_lambda

FAST = FitOptions(compute_vcov=False)


def _iid(family=Family.POISSON, zi=ZiType.NONE, **kw):
    return ModelSpec(family, zi, DesignSpec(), **kw)


def _simulate_iid(spec, params, n, seed):
    return zc.simulate(SimPlan(spec, tuple(params), n, seed))


@pytest.mark.parametrize("zi", [ZiType.A, ZiType.B, ZiType.C, ZiType.D])
def test_iid_two_parameter_fit_hits_sample_moments(zi):
    gen = _iid(zi=ZiType.D)
    data = _simulate_iid(gen, (math.log(2.0), 1.1), 400, seed=23)
    ybar = float(np.mean(data.y))
    p0 = float(np.mean(data.y == 0))
    fit = zc.fit_mle(_iid(zi=zi), data, FAST)
    assert float(np.mean(fit.fitted_mu)) == pytest.approx(ybar, abs=1e-6)
    assert float(np.mean(fit.fitted_pit0)) == pytest.approx(p0, abs=1e-6)


def test_trajan_poisson_saturated_reproduces_cell_means(trajan, trajan_cells):
    spec = ModelSpec(Family.POISSON, ZiType.NONE, DesignSpec(saturated_on="cell"))
    fit = zc.fit_mle(spec, trajan, FAST)
    rows = zc.fitted_vs_observed(fit, trajan, "cell")
    for row in rows:
        assert row.mean_fit == pytest.approx(row.mean_obs, abs=1e-8)


def test_trajan_type_a_overall_zero_proportion(trajan):
    spec = ModelSpec(Family.POISSON, ZiType.A, DesignSpec(saturated_on="cell"))
    fit = zc.fit_mle(spec, trajan, FAST)
    assert float(np.mean(fit.fitted_pit0)) == pytest.approx(0.237, abs=2e-3)


def test_trajan_type_d_reproduces_cell_means_and_zero_prop(trajan, trajan_cells):
    spec = ModelSpec(Family.POISSON, ZiType.D, DesignSpec(saturated_on="cell"))
    fit = zc.fit_mle(spec, trajan, FAST)
    rows = zc.fitted_vs_observed(fit, trajan, "cell")
    for row in rows:
        assert row.mean_fit == pytest.approx(row.mean_obs, rel=1e-6)
    assert float(np.mean(fit.fitted_pit0)) == pytest.approx(
        trajan_cells.zero_prop, abs=1e-6)


def test_truncated_mean_inversion():
    assert _truncated_mean_to_lambda(1.5819767068693264) == pytest.approx(
        1.0, abs=1e-6)
    with pytest.warns(SeparationWarning):
        assert _truncated_mean_to_lambda(1.0) == pytest.approx(0.0, abs=1e-6)


def test_twopart_matches_mle_loglik(trajan):
    twopart = zc.fit_type_a_twopart(trajan, "cell")
    spec = ModelSpec(Family.POISSON, ZiType.A, DesignSpec(saturated_on="cell"))
    mle = zc.fit_mle(spec, trajan, FAST)
    assert twopart.loglik_value == pytest.approx(mle.loglik_value, abs=1e-6)
    assert twopart.param_names == mle.param_names
    assert np.allclose(twopart.params, mle.params, atol=1e-4)


def test_twopart_fitted_means_formula(trajan, trajan_cells):
    fit = zc.fit_type_a_twopart(trajan, "cell")
    rows = zc.fitted_vs_observed(fit, trajan, "cell")
    p0 = trajan_cells.zero_prop
    for row, cell in zip(rows, trajan_cells.cells):
        assert row.mean_fit == pytest.approx((1.0 - p0) * cell.trunc_mean, abs=1e-6)


def test_twopart_no_zeros_clamps_gamma():
    data = CountDataset(np.array([1, 2, 3, 2, 4, 5] * 4),
                        {"g": np.array(["u", "v"] * 12)}, cell_column="g")
    with pytest.warns(SeparationWarning):
        fit = zc.fit_type_a_twopart(data, "g")
    expected = math.log(0.5 / 24) - math.log1p(-0.5 / 24)
    assert fit.params[-1] == pytest.approx(expected, abs=1e-9)


def test_twopart_empty_positive_cell_errors():
    data = CountDataset(np.array([0, 0, 0, 1, 2, 3]),
                        {"g": np.array(["u", "u", "u", "v", "v", "v"])},
                        cell_column="g")
    with pytest.raises(DataError, match="no positive"):
        zc.fit_type_a_twopart(data, "g")


def test_vcov_one_parameter_shape_and_sign():
    data = _simulate_iid(_iid(), (math.log(3.0),), 500, seed=2)
    fit = zc.fit_mle(_iid(), data)
    assert fit.vcov.shape == (1, 1)
    assert fit.vcov[0, 0] > 0
    direct = zc.vcov_numeric(fit, data)
    assert np.allclose(direct, fit.vcov)


def test_vcov_iid_poisson_monte_carlo():
    # var(mu_hat) should approach mu/n; single large sample, delta method
    n, lam = 4000, 3.0
    data = _simulate_iid(_iid(), (math.log(lam),), n, seed=5)
    fit = zc.fit_mle(_iid(), data)
    lam_hat = math.exp(fit.params[0])
    var_mu = lam_hat**2 * fit.vcov[0, 0]
    assert n * var_mu / lam == pytest.approx(1.0, abs=0.2)


def test_vcov_agrees_with_sampling_covariance():
    # Monte-Carlo oracle: empirical covariance of the MLE across replicates
    spec = _iid(zi=ZiType.D)
    true = (math.log(2.0), 1.0)
    estimates, vcovs = [], []
    for rep in range(30):
        data = _simulate_iid(spec, true, 4000, seed=100 + rep)
        fit = zc.fit_mle(spec, data)
        estimates.append(fit.params)
        vcovs.append(fit.vcov)
    emp = np.cov(np.array(estimates).T)
    avg = np.mean(np.array(vcovs), axis=0)
    assert np.allclose(np.diag(avg), np.diag(emp), rtol=0.5)


def test_type_d_natural_parameters_near_orthogonal_for_small_pit0():
    # with a large mean the zero probability is tiny and the (eta, gamma)
    # information matrix is nearly diagonal
    spec = _iid(zi=ZiType.D)
    data = _simulate_iid(spec, (math.log(8.0), 1.0), 20000, seed=77)
    fit = zc.fit_mle(spec, data)
    corr = fit.vcov[0, 1] / math.sqrt(fit.vcov[0, 0] * fit.vcov[1, 1])
    assert abs(corr) < 0.2


@pytest.mark.parametrize("zi", [ZiType.B, ZiType.C, ZiType.D])
def test_nesting_against_plain_poisson(zi):
    # equidispersed data: the alteration should not lose likelihood
    data = _simulate_iid(_iid(), (math.log(2.5),), 300, seed=9)
    base = zc.fit_mle(_iid(), data, FAST)
    alt = zc.fit_mle(_iid(zi=zi), data, FAST)
    assert alt.loglik_value >= base.loglik_value - 1e-8


def test_row_permutation_invariance(trajan):
    spec = ModelSpec(Family.POISSON, ZiType.D, DesignSpec(saturated_on="cell"))
    fit = zc.fit_mle(spec, trajan, FAST)
    rng = np.random.default_rng(13)
    order = rng.permutation(trajan.n)
    shuffled = CountDataset(trajan.y[order],
                            {k: v[order] for k, v in trajan.covariates.items()},
                            cell_column="cell")
    fit2 = zc.fit_mle(spec, shuffled, FAST)
    by_name = dict(zip(fit2.param_names, fit2.params))
    for name, value in zip(fit.param_names, fit.params):
        assert by_name[name] == pytest.approx(value, abs=1e-8)


def test_all_zero_dataset_rejected():
    data = CountDataset(np.zeros(20, dtype=int), {})
    with pytest.raises(DataError, match="all counts are zero"):
        zc.fit_mle(_iid(zi=ZiType.A), data)


def test_separation_warning_and_missing_vcov():
    y = np.array([0] * 10 + [3, 2, 4, 1, 5, 2, 3, 4, 2, 3])
    cells = np.array(["z"] * 10 + ["p"] * 10)
    data = CountDataset(y, {"g": cells}, cell_column="g")
    spec = ModelSpec(Family.POISSON, ZiType.A, DesignSpec(saturated_on="g"))
    with pytest.warns(SeparationWarning):
        fit = zc.fit_mle(spec, data)
    # the all-zero cell leaves its rate on a flat boundary: no covariance
    assert fit.converged
    assert fit.vcov is None
    assert "covariance" in fit.message


def test_aic_definition():
    data = _simulate_iid(_iid(zi=ZiType.D), (0.7, 0.9), 200, seed=31)
    fit = zc.fit_mle(_iid(zi=ZiType.D), data, FAST)
    assert fit.aic == pytest.approx(2 * fit.n_params - 2 * fit.loglik_value)


def test_fitted_mu_identity():
    data = _simulate_iid(_iid(zi=ZiType.B), (0.7, -0.4), 200, seed=37)
    fit = zc.fit_mle(_iid(zi=ZiType.B), data, FAST)
    lam = np.exp(np.full(data.n, fit.params[0]))
    rho = zc.renormalizer(fit.fitted_pi0, fit.fitted_pit0)
    assert np.allclose(fit.fitted_mu, rho * lam, atol=1e-12)


def test_phi_estimators_near_truth_on_nb_data():
    spec = _iid(Family.NBQUAD, phi_mode="free")
    data = _simulate_iid(spec, (math.log(3.0), math.log(0.6)), 20000, seed=41)
    phi_mom = zc.nb_phi_moment(data.y)
    phi_zero = zc.nb_phi_zero_frequency(data.y)
    phi_mle = zc.nb_phi_mle(data.y)
    for est in (phi_mom, phi_zero, phi_mle):
        assert est == pytest.approx(0.6, rel=0.15)
