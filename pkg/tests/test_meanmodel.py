import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mvvol.exceptions import SingularDesign, SingularGamma0, TooShort
from mvvol.meanmodel import (VAR, fit_var, ljung_box, multivariate_ljung_box,
                             portmanteau_terms, select_var_order)


def hosking_bruteforce(x, m):
    """Direct evaluation with explicit autocovariances and inverses."""
    x = x - x.mean(axis=0)
    T = x.shape[0]
    g0inv = np.linalg.inv(x.T @ x / T)
    q = 0.0
    for l in range(1, m + 1):
        gl = x[l:].T @ x[:-l] / T
        q += np.trace(gl.T @ g0inv @ gl @ g0inv) / (T - l)
    return T * T * q


def box_ljung(x, m):
    x = x - x.mean()
    T = x.size
    c0 = x @ x
    rho = [x[l:] @ x[:-l] / c0 for l in range(1, m + 1)]
    return T * (T + 2) * sum(r * r / (T - l) for l, r in enumerate(rho, start=1))


class TestLjungBox:
    def test_matches_bruteforce(self, rng):
        x = rng.standard_normal((300, 3))
        x[1:] += 0.3 * x[:-1]
        q = multivariate_ljung_box(x, 5)
        assert q.statistic == pytest.approx(hosking_bruteforce(x, 5), rel=1e-12)
        assert q.df == 45
        assert q.pvalue == pytest.approx(stats.chi2.sf(q.statistic, 45))

    def test_univariate_box_ljung(self, rng):
        x = rng.standard_normal(400)
        q, p = ljung_box(x, 12)
        assert q == pytest.approx(box_ljung(x, 12), rel=1e-12)
        assert p == pytest.approx(stats.chi2.sf(q, 12))

    def test_k1_relation_to_box_ljung(self, rng):
        # the T^2 form is T / (T + 2) times the T(T+2) univariate form
        x = rng.standard_normal(250)
        T = x.size
        q = multivariate_ljung_box(x, 7).statistic
        assert q == pytest.approx(T / (T + 2) * box_ljung(x, 7), rel=1e-10)

    def test_df_adjust(self, rng):
        x = rng.standard_normal((100, 2))
        assert multivariate_ljung_box(x, 3, df_adjust=4).df == 8

    def test_singular_gamma0(self, rng):
        x = rng.standard_normal(50)
        with pytest.raises(SingularGamma0):
            multivariate_ljung_box(np.column_stack([x, 2 * x]), 2)

    def test_too_short(self):
        with pytest.raises(TooShort):
            multivariate_ljung_box(np.zeros((5, 1)), 5)

    def test_null_distribution(self):
        # empirical 95th percentile under iid Gaussian data vs chi-square(45)
        rng = np.random.default_rng(404)
        qs = [multivariate_ljung_box(rng.standard_normal((2000, 3)), 5).statistic
              for _ in range(500)]
        ref = stats.chi2.ppf(0.95, 45)
        assert abs(np.quantile(qs, 0.95) / ref - 1) < 0.10

    def test_nondecreasing_in_lag(self, rng):
        terms = portmanteau_terms(rng.standard_normal((200, 2)), 15)
        assert np.all(terms >= 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 4))
def test_linear_invariance(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((120, k))
    a = rng.standard_normal((k, k)) + 3 * np.eye(k)
    q1 = multivariate_ljung_box(x, 4).statistic
    q2 = multivariate_ljung_box(x @ a.T, 4).statistic
    assert abs(q1 - q2) < 1e-8 * max(1.0, q1)


class TestVar:
    def test_p0_demeans(self, rng):
        x = rng.standard_normal((50, 2)) + 3.0
        v = fit_var(x, 0)
        np.testing.assert_allclose(v.residuals, x - x.mean(axis=0), atol=1e-12)

    def test_ar1_recovery(self):
        rng = np.random.default_rng(9)
        e = rng.standard_normal(5000)
        x = np.empty(5000)
        x[0] = e[0]
        for t in range(1, 5000):
            x[t] = 0.5 * x[t - 1] + e[t]
        v = fit_var(x, 1)
        assert abs(v.phi[0][0, 0] - 0.5) < 0.05

    def test_exact_var1(self):
        a = np.array([[0.5, 0.1], [-0.2, 0.3]])
        c = np.array([1.0, -0.5])
        x = np.empty((40, 2))
        x[0] = [1.0, 2.0]
        x[1] = [0.3, -1.0]  # second start breaks collinearity with the fixed point
        for t in range(2, 40):
            x[t] = c + a @ x[t - 1]
        v = fit_var(x[1:], 1)
        np.testing.assert_allclose(v.phi[0], a, atol=1e-10)
        np.testing.assert_allclose(v.phi0, c, atol=1e-10)

    def test_residuals_orthogonal_to_regressors(self, rng):
        x = rng.standard_normal((300, 3))
        v = fit_var(x, 2)
        X = np.hstack([np.ones((298, 1)), x[1:-1], x[:-2]])
        assert np.max(np.abs(X.T @ v.residuals)) < 1e-8

    def test_fitted_mean_reconstructs(self, rng):
        x = rng.standard_normal((100, 2))
        v = fit_var(x, 3)
        np.testing.assert_allclose(v.fitted_mean(x) + v.residuals, x[3:], atol=1e-12)

    def test_singular_design(self):
        x = np.column_stack([np.arange(30.0), np.arange(30.0)])
        with pytest.raises(SingularDesign):
            fit_var(x, 1)

    def test_aic_picks_true_order(self):
        rng = np.random.default_rng(12)
        x = np.zeros((3000, 2))
        e = rng.standard_normal((3000, 2))
        for t in range(2, 3000):
            x[t] = 0.4 * x[t - 1] - 0.3 * x[t - 2] + e[t]
        assert select_var_order(x, 5)[0] == 2

    def test_transformer(self, rng):
        x = rng.standard_normal((80, 2))
        model = VAR(p=1)
        out = model.fit_transform(x)
        np.testing.assert_allclose(out, fit_var(x, 1).residuals, atol=1e-12)
        assert model.get_params() == {"p": 1}
