"""VAR(p) conditional mean and portmanteau statistics."""

from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_panel
from .exceptions import InputError, SingularDesign, SingularGamma0, TooShort


@dataclass(frozen=True)
class PortmanteauResult:
    lag: int
    statistic: float
    df: int
    pvalue: float


def ljung_box(x, lag):
    """Univariate Box-Ljung ``Q = T(T+2) sum_l rho_l^2 / (T - l)`` and its p-value."""
    x = np.asarray(x, dtype=float).ravel()
    T = x.size
    if T <= lag:
        raise TooShort(f"need more than {lag} observations")
    xc = x - x.mean()
    denom = xc @ xc
    if denom <= 0:
        raise SingularGamma0("series has zero variance")
    rho = np.array([xc[l:] @ xc[:-l] for l in range(1, lag + 1)]) / denom
    q = T * (T + 2) * np.sum(rho**2 / (T - np.arange(1, lag + 1)))
    return float(q), float(stats.chi2.sf(q, lag))


def _whiten(x):
    xc = x - x.mean(axis=0)
    T = xc.shape[0]
    g0 = xc.T @ xc / T
    try:
        chol = np.linalg.cholesky(g0)
    except np.linalg.LinAlgError:
        raise SingularGamma0("lag-0 autocovariance is singular") from None
    # pivot ratio 1e-7 ~ condition number 1e14
    if np.min(np.diag(chol)) <= 1e-7 * np.max(np.diag(chol)):
        raise SingularGamma0("lag-0 autocovariance is singular")
    # rows z_t = L^{-1} x_t, so Gamma_0(z) = I
    return np.linalg.solve(chol, xc.T).T


def portmanteau_terms(x, max_lag):
    """Per-lag terms ``T^2 / (T - l) * tr(G_l' G_0^-1 G_l G_0^-1)``, l = 1..max_lag."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    T = x.shape[0]
    if T <= max_lag:
        raise TooShort(f"need more than {max_lag} observations")
    z = _whiten(x)
    out = np.empty(max_lag)
    for l in range(1, max_lag + 1):
        g = z[l:].T @ z[:-l] / T
        out[l - 1] = T * T / (T - l) * np.sum(g * g)
    return out


def multivariate_ljung_box(series, m, df_adjust=0):
    """Multivariate portmanteau statistic on lags 1..m.

    ``Q(m) = T^2 sum_{l=1}^m (T - l)^{-1} tr(G_l' G_0^{-1} G_l G_0^{-1})`` with
    ``G_l`` the lag-l sample autocovariance (divisor T) of the demeaned
    series.  The p-value uses chi-square with ``k^2 m - df_adjust`` degrees of
    freedom.

    Note that for k = 1 this is ``T / (T + 2)`` times the univariate
    Box-Ljung statistic.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    q = float(np.sum(portmanteau_terms(x, m)))
    df = x.shape[1] ** 2 * m - int(df_adjust)
    if df <= 0:
        raise InputError("df_adjust leaves no degrees of freedom")
    return PortmanteauResult(lag=int(m), statistic=q, df=df, pvalue=float(stats.chi2.sf(q, df)))


@dataclass
class VarModel:
    """Fitted VAR(p): ``r_t = phi0 + sum_i phi[i] r_{t-i} + e_t``."""

    p: int
    phi0: np.ndarray
    phi: list
    residuals: np.ndarray
    sigma: np.ndarray

    def fitted_mean(self, x):
        """Conditional means for rows p..T-1 of ``x``."""
        x = np.asarray(x, dtype=float)
        mu = np.tile(self.phi0, (x.shape[0] - self.p, 1))
        for i, a in enumerate(self.phi, start=1):
            mu += x[self.p - i: x.shape[0] - i] @ a.T
        return mu


def _design(x, p, start):
    T = x.shape[0]
    cols = [np.ones((T - start, 1))]
    for i in range(1, p + 1):
        cols.append(x[start - i: T - i])
    return np.hstack(cols)


def fit_var(panel, p, start=None):
    """Least-squares VAR(p) with intercept, equation by equation.

    ``start`` (default ``p``) is the first row used as a regressand, which
    lets several orders be fitted on a common sample.
    """
    x = check_panel(panel)
    T, k = x.shape
    p = int(p)
    if p < 0:
        raise InputError("lag order must be non-negative")
    start = p if start is None else int(start)
    if start < p:
        raise InputError("start must be at least p")
    if T - start <= k * p + 1:
        raise TooShort(f"VAR({p}) needs more than {k * p + 1} usable rows")
    y = x[start:]
    X = _design(x, p, start)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesign(f"design matrix has rank {rank} < {X.shape[1]}")
    resid = y - X @ coef
    phi0 = coef[0]
    phi = [coef[1 + (i - 1) * k: 1 + i * k].T.copy() for i in range(1, p + 1)]
    sigma = resid.T @ resid / resid.shape[0]
    return VarModel(p=p, phi0=phi0, phi=phi, residuals=resid, sigma=sigma)


def select_var_order(panel, max_p):
    """AIC over p = 0..max_p on the common sample starting at row ``max_p``.

    Returns ``(best_p, aic)`` with ``aic[p] = log det Sigma_p + 2 p k^2 / n``.
    """
    x = check_panel(panel)
    k = x.shape[1]
    n = x.shape[0] - max_p
    aic = np.empty(max_p + 1)
    for p in range(max_p + 1):
        fitted = fit_var(x, p, start=max_p)
        sign, logdet = np.linalg.slogdet(fitted.sigma)
        if sign <= 0:
            raise SingularDesign("residual covariance is singular")
        aic[p] = logdet + 2.0 * p * k * k / n
    return int(np.argmin(aic)), aic


class VAR(TransformerMixin, BaseEstimator):
    """VAR(p) mean filter; ``transform`` returns the innovations.

    Parameters
    ----------
    p : int, default 0
        Lag order.  ``p = 0`` is plain demeaning.
    """

    def __init__(self, p=0):
        self.p = p

    def fit(self, X, y=None):
        self.model_ = fit_var(X, self.p)
        self.n_features_in_ = self.model_.phi0.shape[0]
        return self

    def transform(self, X):
        """Residuals ``r_t - mu_t`` for rows p..T-1 of ``X``."""
        check_is_fitted(self, "model_")
        x = check_panel(X)
        if x.shape[1] != self.n_features_in_:
            raise InputError(f"expected {self.n_features_in_} columns, got {x.shape[1]}")
        if x.shape[0] <= self.p:
            raise TooShort("not enough rows for the lag order")
        return x[self.p:] - self.model_.fitted_mean(x)
