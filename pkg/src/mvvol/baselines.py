"""Reference correlation models and the rolling-window covariance estimator.

``dcc_t_step`` drives R_t with the correlation of the last m standardized
innovations; ``dcc_e_step`` drives a pseudo-covariance Q_t with the latest
innovation outer product and normalizes it.  ``DCCT`` and ``DCCE`` are
two-step estimators: univariate GARCH(1,1)-t per series, then a Gaussian
quasi-likelihood for the correlation weights on the standardized
innovations.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.signal import lfilter
from scipy.special import expit, logit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_panel
from .estimator import CAP, MultivariateGarch
from .exceptions import InputError, InvalidParams, WindowTooLong
from .matcore import as_symmetric, check_correlation, normalize_to_correlation, sample_correlation
from .volcore import psi_matrix, run_filter


@dataclass(frozen=True)
class DccTParams:
    lambda1: float
    lambda2: float
    R: np.ndarray
    m: int

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda1 + self.lambda2 >= 1:
            raise InvalidParams("need lambda1, lambda2 >= 0 and lambda1 + lambda2 < 1")
        object.__setattr__(self, "R", check_correlation(self.R))
        if self.m < 1:
            raise InvalidParams("m must be positive")


@dataclass(frozen=True)
class DccEParams:
    alpha1: float
    alpha2: float
    qbar: np.ndarray

    def __post_init__(self):
        s = self.alpha1 + self.alpha2
        if self.alpha1 < 0 or self.alpha2 < 0 or not 0 < s < 1:
            raise InvalidParams("need alpha1, alpha2 >= 0 and 0 < alpha1 + alpha2 < 1")
        object.__setattr__(self, "qbar", as_symmetric(self.qbar))


def dcc_t_step(r_prev, psi, params):
    """``(1 - l1 - l2) R + l1 Psi + l2 R_prev``."""
    a, b = params.lambda1, params.lambda2
    out = (1 - a - b) * params.R + a * np.asarray(psi) + b * np.asarray(r_prev)
    np.fill_diagonal(out, 1.0)
    return out


def dcc_e_step(q_prev, u_prev, params):
    """One Q_t update; returns ``(q_t, r_t)``."""
    u = np.asarray(u_prev, dtype=float)
    q = ((1 - params.alpha1 - params.alpha2) * params.qbar
         + params.alpha1 * np.outer(u, u) + params.alpha2 * np.asarray(q_prev))
    q = 0.5 * (q + q.T)
    return q, normalize_to_correlation(q)


def dcc_t_path(u, params, r0=None):
    """Correlation path over standardized innovations ``u`` (T x k).

    R_t equals ``r0`` (default R) until m innovations are available.
    """
    u = check_panel(u)
    T = u.shape[0]
    r = params.R if r0 is None else np.asarray(r0, dtype=float)
    out = np.empty((T, u.shape[1], u.shape[1]))
    for t in range(T):
        if t >= params.m:
            r = dcc_t_step(r, psi_matrix(u[t - params.m:t]), params)
        out[t] = r
    return out


def dcc_e_path(u, params, q0=None):
    """Correlation path with ``Q_0 = q0`` (default Qbar); R_t uses u_{t-1}."""
    u = check_panel(u)
    q = params.qbar if q0 is None else np.asarray(q0, dtype=float)
    out = np.empty((u.shape[0], u.shape[1], u.shape[1]))
    out[0] = normalize_to_correlation(q)
    for t in range(1, u.shape[0]):
        q, out[t] = dcc_e_step(q, u[t - 1], params)
    return out


def rolling_covariance(returns, window=69):
    """Sample covariance (divisor ``window - 1``, demeaned inside each window)
    of rows ``t - window + 1 .. t`` for every ``t >= window - 1``.

    Returns an array of shape ``(T - window + 1, k, k)``.
    """
    x = check_panel(returns)
    T, k = x.shape
    window = int(window)
    if window < 2:
        raise InputError("window must be at least 2")
    if T < window:
        raise WindowTooLong(f"window {window} exceeds the {T} available rows")
    views = np.lib.stride_tricks.sliding_window_view(x, window, axis=0)  # (n, k, w)
    xc = views - views.mean(axis=2, keepdims=True)
    cov = np.einsum("niw,njw->nij", xc, xc) / (window - 1)
    return 0.5 * (cov + np.swapaxes(cov, 1, 2))


def rolling_correlation(cov):
    """Correlations and standard deviations from a stack of covariances."""
    cov = np.asarray(cov, dtype=float)
    sd = np.sqrt(np.einsum("nii->ni", cov))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / (sd[:, :, None] * sd[:, None, :])
    return corr, sd


# --------------------------------------------------------------------------
# two-step estimators


def _linear_recursion(c, drive, b, start):
    """x_t = c + drive_t + b x_{t-1} along axis 0, x_{-1} = start."""
    zi = b * start
    y, _ = lfilter([1.0], [1.0, -b], c + drive, axis=0, zi=zi[None])
    return y


def _gaussian_corr_nll(r, u):
    """-sum_t [log det R_t + u_t' R_t^-1 u_t] / 2 over the rows of r."""
    try:
        chol = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        return np.inf
    z = np.linalg.solve(chol, u[:, :, None])[:, :, 0]
    logdet = 2 * np.sum(np.log(np.einsum("tii->ti", chol)), axis=1)
    return 0.5 * float(np.sum(logdet + np.sum(z * z, axis=1)))


def _psi_stack(u, m):
    """Psi_{t-1} for t = m..T-1 as a (T - m, k, k) array."""
    outer = u[:, :, None] * u[:, None, :]
    c = np.cumsum(outer, axis=0)
    c = np.concatenate([np.zeros((1,) + outer.shape[1:]), c])
    T = u.shape[0]
    s = c[m:T] - c[:T - m]
    d = np.sqrt(np.einsum("tii->ti", s))
    with np.errstate(invalid="ignore", divide="ignore"):
        psi = s / (d[:, :, None] * d[:, None, :])
    psi = np.nan_to_num(psi)
    idx = np.arange(u.shape[1])
    psi[:, idx, idx] = 1.0
    return psi


def _weights(x):
    a = CAP * expit(x[0])
    return a, (CAP - a) * expit(x[1])


def _weights_inv(a, b):
    return np.array([logit(a / CAP), logit(b / (CAP - a))])


class _TwoStep(BaseEstimator):
    def _univariate(self, e):
        d = np.empty_like(e)
        fits = []
        for i in range(e.shape[1]):
            g = MultivariateGarch(dof=self.dof, compute_std_errors=False).fit(e[:, [i]])
            fits.append(g.params_)
            d[:, i] = g.path_.d[:, 0]
        return fits, d

    def fit(self, X, y=None):
        e = check_panel(X, min_rows=10)
        self.garch_, d = self._univariate(e)
        u = e / d
        self.u_ = u
        x0 = _weights_inv(*self._start)
        res = optimize.minimize(lambda x: self._nll(x, u), x0, method="L-BFGS-B",
                                options={"ftol": 1e-10, "gtol": 1e-6})
        self.weights_ = _weights(res.x)
        self.converged_ = bool(res.success)
        self.corr_nll_ = float(res.fun)
        self.n_features_in_ = e.shape[1]
        return self

    def transform(self, X):
        """Correlation path of ``X`` (uses the fitted variance models)."""
        check_is_fitted(self, "weights_")
        e = check_panel(X)
        d = np.empty_like(e)
        for i, p in enumerate(self.garch_):
            d[:, i] = run_filter(p, e[:, [i]])[0].d[:, 0]
        return self.correlation_path(e / d)


class DCCT(_TwoStep):
    """Two-step DCC_T(m): GARCH(1,1)-t variances, then (lambda1, lambda2) by
    Gaussian quasi-likelihood with R fixed at the sample correlation."""

    _start = (0.02, 0.90)

    def __init__(self, m=None, dof=None):
        self.m = m
        self.dof = dof

    def _m(self, k):
        return k + 2 if self.m is None else int(self.m)

    def _path(self, x, u):
        m = self._m(u.shape[1])
        a, b = _weights(x)
        R = self.R_
        psi = _psi_stack(u, m)
        rs = _linear_recursion((1 - a - b) * R, a * psi, b, R)
        return np.concatenate([np.broadcast_to(R, (m,) + R.shape), rs])

    def _nll(self, x, u):
        m = self._m(u.shape[1])
        return _gaussian_corr_nll(self._path(x, u)[m:], u[m:])

    def fit(self, X, y=None):
        e = check_panel(X, min_rows=10)
        self.R_ = sample_correlation(e)
        return super().fit(X)

    @property
    def params_(self):
        check_is_fitted(self, "weights_")
        return DccTParams(*self.weights_, R=self.R_, m=self._m(self.R_.shape[0]))

    def correlation_path(self, u):
        return self._path(_weights_inv(*self.weights_), check_panel(u))


class DCCE(_TwoStep):
    """Two-step DCC_E: GARCH(1,1)-t variances, then (alpha1, alpha2) by
    Gaussian quasi-likelihood with Qbar the sample covariance of u."""

    _start = (0.02, 0.95)

    def __init__(self, dof=None):
        self.dof = dof

    def _path(self, x, u):
        a, b = _weights(x)
        qbar = self.qbar_
        outer = u[:-1, :, None] * u[:-1, None, :]
        q = _linear_recursion((1 - a - b) * qbar, a * outer, b, qbar)
        q = np.concatenate([qbar[None], q])
        d = np.sqrt(np.einsum("tii->ti", q))
        return q / (d[:, :, None] * d[:, None, :])

    def _nll(self, x, u):
        return _gaussian_corr_nll(self._path(x, u)[1:], u[1:])

    def _univariate(self, e):
        fits, d = super()._univariate(e)
        u = e / d
        self.qbar_ = np.cov(u, rowvar=False)
        return fits, d

    @property
    def params_(self):
        check_is_fitted(self, "weights_")
        return DccEParams(*self.weights_, qbar=self.qbar_)

    def correlation_path(self, u):
        return self._path(_weights_inv(*self.weights_), check_panel(u))
