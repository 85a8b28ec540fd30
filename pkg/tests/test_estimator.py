import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special
from sklearn.base import clone

from helpers import random_correlation
from mvvol import ModelParams, MultivariateGarch, ParamMapping, SimulationConfig, lr_test, simulate
from mvvol.estimator import _central_gradient, numerical_hessian
from mvvol.exceptions import InputError, InvalidParams, NotNested
from mvvol.volcore import FilterState, negative_log_likelihood

FOUR_ASSET_TIES = {"lambda0": [[0, 1]], "lambda1": [[0, 1, 2, 3]], "lambda2": [[0, 1], [2, 3]]}


def t_fisher(lam0, v):
    """Per-observation information for (lambda0, v) of a unit-variance t scaled
    by sqrt(lambda0), from the (scale, dof) information of the Student t."""
    s = np.sqrt(lam0 * (v - 2) / v)
    i_ss = 2 * v / ((v + 3) * s * s)
    i_sv = -2 / (s * (v + 1) * (v + 3))
    i_vv = (0.25 * (special.polygamma(1, v / 2) - special.polygamma(1, (v + 1) / 2))
            - (v + 5) / (2 * v * (v + 1) * (v + 3)))
    info = np.array([[i_ss, i_sv], [i_sv, i_vv]])
    J = np.array([[s / (2 * lam0), s / (v * (v - 2))], [0.0, 1.0]])
    return J.T @ info @ J


class TestMapping:
    def test_counts(self):
        m = ParamMapping(4, np.eye(4))
        assert m.n_free == 4 * 3 + 3
        assert m.names[:2] == ["lambda0[1]", "lambda0[2]"]

    def test_tie_reduces_dimension(self):
        base = ParamMapping(2, np.eye(2))
        tied = ParamMapping(2, np.eye(2), ties={"lambda0": [[0, 1]]})
        assert tied.n_free == base.n_free - 1
        assert "lambda0[1,2]" in tied.names

    def test_tied_four_asset_count(self):
        m = ParamMapping(4, np.eye(4), ties=FOUR_ASSET_TIES)
        assert m.n_free == 9
        assert m.count_by_family() == {"lambda0": 3, "lambda1": 1, "lambda2": 2,
                                       "theta1": 1, "theta2": 1, "dof": 1}

    def test_leverage_df_two(self):
        restricted = ParamMapping(4, np.eye(4), ties=FOUR_ASSET_TIES)
        full = ParamMapping(4, np.eye(4), ties=FOUR_ASSET_TIES, leverage=True,
                            fixed={"lambda3": [0.0, 0.0, None, None]})
        assert full.n_free - restricted.n_free == 2

    def test_igarch_has_no_coordinate(self):
        m = ParamMapping(2, np.eye(2), igarch=[True, False])
        assert m.count_by_family()["lambda3"] == 1
        p = m.decode(np.zeros(m.n_free))
        assert p.lambda1[0] + p.lambda2[0] + p.lambda3[0] == pytest.approx(1.0)

    def test_k1_theta_fixed(self):
        m = ParamMapping(1, np.ones((1, 1)))
        assert m.names == ["lambda0[1]", "lambda1[1]", "lambda2[1]", "dof"]

    @pytest.mark.parametrize("kwargs", [
        {"ties": {"lambda0": [[0, 5]]}},
        {"ties": {"lambda0": [[0, 1], [1, 2]]}},
        {"ties": {"lambda3": [[0, 1]]}},
        {"fixed": {"lambda3": 0.0}},
        {"fixed": {"lambda1": [0.5]}},
    ])
    def test_bad_configuration(self, kwargs):
        with pytest.raises(InputError):
            ParamMapping(3, np.eye(3), **kwargs)

    def test_non_finite(self):
        m = ParamMapping(2, np.eye(2))
        with pytest.raises(InvalidParams):
            m.decode(np.full(m.n_free, np.nan))

    def test_fuzz_decode_valid(self):
        rng = np.random.default_rng(0)
        configs = [ParamMapping(3, random_correlation(3, rng)),
                   ParamMapping(3, random_correlation(3, rng), leverage=True, diagonal=True),
                   ParamMapping(3, random_correlation(3, rng), igarch=[True, False, True],
                                ties={"lambda1": [[0, 1, 2]]})]
        for m in configs:
            for _ in range(33_334):
                m.decode_values(rng.normal(0, 8, m.n_free))
            # full validation through ModelParams on a subsample
            for _ in range(300):
                m.decode(rng.normal(0, 8, m.n_free))

    def test_extreme_coordinates(self):
        m = ParamMapping(2, np.eye(2), leverage=True)
        for x in (np.full(m.n_free, 800.0), np.full(m.n_free, -800.0)):
            m.decode(x)


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), leverage=st.booleans(), diagonal=st.booleans())
def test_round_trip(seed, leverage, diagonal):
    rng = np.random.default_rng(seed)
    k = 3
    rbar = random_correlation(k, rng)
    m = ParamMapping(k, rbar, leverage=leverage, diagonal=diagonal)
    tot = rng.uniform(0.05, 0.99, k)
    w = rng.dirichlet(np.ones(3 if leverage else 2), size=k) * tot[:, None]
    if diagonal:
        ang = rng.uniform(0.05, 1.5, k)
        rad = np.sqrt(rng.uniform(0.01, 0.98, k))
        th1, th2 = rad * np.cos(ang), rad * np.sin(ang)
    else:
        th1, th2 = rng.dirichlet([1, 1, 1])[:2]
    p = ModelParams(lambda0=rng.uniform(0.01, 5, k), lambda1=w[:, 0], lambda2=w[:, 1],
                    lambda3=w[:, 2] if leverage else None, theta1=th1, theta2=th2,
                    dof=rng.uniform(2.5, 50), rbar=rbar)
    q = m.decode(m.encode(p))
    for name in ("lambda0", "lambda1", "lambda2", "lambda3", "theta1", "theta2", "dof"):
        a, b = getattr(p, name), getattr(q, name)
        if a is None:
            assert b is None
        else:
            np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12)


def test_encode_rejects_untied_values():
    m = ParamMapping(2, np.eye(2), ties={"lambda0": [[0, 1]]})
    p = ModelParams(lambda0=[0.1, 0.2], lambda1=[0.8] * 2, lambda2=[0.1] * 2, theta1=0.1,
                    theta2=0.8, dof=6, rbar=np.eye(2))
    with pytest.raises(InvalidParams):
        m.encode(p)


def test_numerical_derivatives():
    def f(x):
        return np.sin(x[0]) * x[1] ** 3 + np.exp(0.3 * x[0] * x[1])

    x = np.array([0.4, -1.2])
    g = np.array([np.cos(x[0]) * x[1] ** 3 + 0.3 * x[1] * np.exp(0.3 * x[0] * x[1]),
                  3 * np.sin(x[0]) * x[1] ** 2 + 0.3 * x[0] * np.exp(0.3 * x[0] * x[1])])
    np.testing.assert_allclose(_central_gradient(f, x), g, rtol=1e-8)
    e = np.exp(0.3 * x[0] * x[1])
    H = np.array([
        [-np.sin(x[0]) * x[1] ** 3 + 0.09 * x[1] ** 2 * e,
         3 * np.cos(x[0]) * x[1] ** 2 + 0.3 * e + 0.09 * x[0] * x[1] * e],
        [0, 6 * np.sin(x[0]) * x[1] + 0.09 * x[0] ** 2 * e]])
    H[1, 0] = H[0, 1]
    np.testing.assert_allclose(numerical_hessian(f, x), H, rtol=1e-5, atol=1e-6)


@pytest.fixture(scope="module")
def sim2():
    p = ModelParams(lambda0=[0.05, 0.05], lambda1=[0.90, 0.90], lambda2=[0.05, 0.05],
                    theta1=0.02, theta2=0.95, dof=8.0, rbar=[[1.0, 0.4], [0.4, 1.0]])
    return p, simulate(SimulationConfig(p, T=3000, seed=7)).returns


@pytest.fixture(scope="module")
def fit2(sim2):
    return MultivariateGarch().fit(sim2[1])


class TestFit:
    def test_recovery(self, sim2, fit2):
        p = fit2.params_
        truth = sim2[0]
        for name in ("lambda0", "lambda1", "lambda2", "theta1", "theta2"):
            assert np.all(np.abs(np.asarray(getattr(p, name)) - getattr(truth, name)) < 0.08)
        assert abs(p.dof - 8) < 3
        assert fit2.result_.converged

    def test_optimum_beats_start(self, sim2, fit2):
        e = sim2[1]
        r = fit2.result_
        start = r.mapping.decode(MultivariateGarch()._starts(r.mapping, e)[0])
        init = FilterState(d2=e.var(axis=0, ddof=1), r=r.params.rbar)
        assert -r.lmax <= negative_log_likelihood(start, e, init)

    def test_gradient_small_at_optimum(self, sim2, fit2):
        e = sim2[1]
        r = fit2.result_
        init = FilterState(d2=e.var(axis=0, ddof=1), r=r.params.rbar)
        g = _central_gradient(lambda x: negative_log_likelihood(r.mapping.decode(x), e, init),
                              r.x)
        # the relative-change stop leaves a gradient small against |NLL|
        assert np.max(np.abs(g)) < 1e-5 * abs(r.lmax)

    def test_result_fields(self, fit2):
        r = fit2.result_
        assert r.n_free == 9 and len(r.std_errors) == 9
        assert r.n_scored == r.n_obs - 4
        assert r.residuals_std.shape == (3000, 2)
        assert set(r.estimates()) == set(r.names)
        assert r.hessian_pd

    def test_sklearn_api(self, sim2, fit2):
        e = sim2[1]
        est = clone(fit2)
        assert not hasattr(est, "result_")
        assert est.get_params()["leverage"] is False
        np.testing.assert_allclose(fit2.transform(e), fit2.result_.residuals_std, atol=1e-12)
        assert fit2.score(e) == pytest.approx(fit2.lmax_)
        with pytest.raises(InputError):
            fit2.transform(e[:, :1])

    def test_summary(self, fit2):
        text = fit2.summary()
        assert "L_max" in text and "theta2" in text and "(" in text

    def test_nested_ordering(self, sim2, fit2):
        e = sim2[1]
        restricted = MultivariateGarch(ties={"lambda1": [[0, 1]], "lambda2": [[0, 1]]},
                                       start=fit2.params_).fit(e)
        assert restricted.lmax_ <= fit2.lmax_
        lr = lr_test(fit2.result_, restricted.result_)
        assert lr.df == 2 and 0 <= lr.pvalue <= 1
        with pytest.raises(NotNested):
            lr_test(restricted.result_, fit2.result_)

    def test_identical_models(self, fit2):
        lr = lr_test(fit2.result_, fit2.result_)
        assert lr.statistic == 0 and lr.pvalue == 1

    def test_tied_standard_errors_shared(self, sim2):
        est = MultivariateGarch(ties={"lambda1": [[0, 1]]}).fit(sim2[1])
        r = est.result_
        assert r.std_error_of("lambda1", 0) == r.std_error_of("lambda1", 1)
        assert r.params.lambda1[0] == r.params.lambda1[1]

    def test_suggest_ties(self, fit2):
        for a, b, va, vb in fit2.suggest_ties():
            assert a.split("[")[0] == b.split("[")[0]


def test_igarch_fit_reports_no_se_for_tied_entry():
    p = ModelParams(lambda0=[0.05, 0.05], lambda1=[0.85, 0.85], lambda2=[0.05, 0.05],
                    lambda3=[0.1, 0.05], igarch=[True, False], theta1=0.02, theta2=0.9,
                    dof=8, rbar=[[1, 0.3], [0.3, 1]])
    e = simulate(SimulationConfig(p, T=1500, seed=2)).returns
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = MultivariateGarch(igarch=[True, False]).fit(e)
    r = est.result_
    lam = r.params
    assert lam.lambda1[0] + lam.lambda2[0] + lam.lambda3[0] == pytest.approx(1.0)
    assert "lambda3[1]" not in r.names
    assert r.std_error_of("lambda3", 0) is None


def test_std_errors_match_fisher_information():
    lam0, v, T = 0.5, 6.0, 10_000
    rng = np.random.default_rng(31)
    e = np.sqrt(lam0 * (v - 2) / v) * rng.standard_t(v, size=T)
    est = MultivariateGarch(fixed={"lambda1": 0.0, "lambda2": 0.0}).fit(e)
    r = est.result_
    n = r.n_scored
    cov = np.linalg.inv(n * t_fisher(lam0, v))
    assert r.std_errors["lambda0[1]"] == pytest.approx(np.sqrt(cov[0, 0]), rel=0.15)
    assert r.std_errors["dof"] == pytest.approx(np.sqrt(cov[1, 1]), rel=0.15)
    # dof known: only the scale is estimated
    est = MultivariateGarch(fixed={"lambda1": 0.0, "lambda2": 0.0}, dof=v).fit(e)
    se = np.sqrt(2 * (v + 3) / v) * lam0 / np.sqrt(n)
    assert est.result_.std_errors["lambda0[1]"] == pytest.approx(se, rel=0.15)


def test_short_sample_warns():
    e = np.random.default_rng(1).standard_normal((60, 2))
    with pytest.warns(UserWarning, match="observations"):
        MultivariateGarch(compute_std_errors=False).fit(e)
