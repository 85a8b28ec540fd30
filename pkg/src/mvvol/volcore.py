"""The proposed model's filter.

Variances follow per-asset GARCH(1,1) recursions (optionally with a leverage
term for negative shocks), correlations follow

    R_t = (1 - theta1 - theta2) Rbar + theta1 Psi_{t-1} + theta2 R_{t-1}

where Psi_{t-1} is the uncentered correlation of the last ``m`` standardized
innovations, and innovations are multivariate Student-t with unit component
variance.  Public functions here are thin numpy wrappers; the time loop runs
in :mod:`mvvol._kernels`.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .exceptions import FilterBlowup, InvalidParams, NotPositiveDefinite, ZeroNormColumn
from .matcore import check_correlation

_SUM_TOL = 1e-12


def _vec(x, k, name):
    a = np.array(x, dtype=float).reshape(-1)
    if a.size == 1 and k != 1:
        a = np.full(k, float(a[0]))
    if a.shape != (k,):
        raise InvalidParams(f"{name} must have {k} entries")
    return a


@dataclass(frozen=True)
class ModelParams:
    """All parameters of the model.

    Parameters
    ----------
    lambda0, lambda1, lambda2 : array_like, shape (k,)
        Diagonals of the constant, GARCH and ARCH coefficient matrices.
    lambda3 : array_like or None
        Diagonal of the leverage matrix; ``None`` disables leverage.
    theta1, theta2 : float or array_like
        Correlation weights on Psi_{t-1} and R_{t-1}.  Length-k arrays select
        the diagonal-theta variant.
    dof : float
        Student-t degrees of freedom, > 2, shared by all assets.
    rbar : array_like, shape (k, k)
        Fixed long-run correlation matrix.
    m : int, optional
        Psi window length, default ``k + 2``.
    igarch : array_like of bool, optional
        Assets whose leverage coefficient is tied to ``1 - lambda1 - lambda2``.
        The stored ``lambda3`` already reflects the tie.
    """

    lambda0: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    theta1: object
    theta2: object
    dof: float
    rbar: np.ndarray
    lambda3: np.ndarray = None
    m: int = None
    igarch: np.ndarray = None
    k: int = field(init=False)

    def __post_init__(self):
        rbar = check_correlation(self.rbar)
        k = rbar.shape[0]
        s = object.__setattr__
        s(self, "k", k)
        s(self, "rbar", rbar)
        for name in ("lambda0", "lambda1", "lambda2"):
            s(self, name, _vec(getattr(self, name), k, name))
        igarch = self.igarch
        if igarch is not None:
            igarch = np.array(igarch, dtype=bool).reshape(-1)
            if igarch.size == 1 and k != 1:
                igarch = np.full(k, bool(igarch[0]))
            if igarch.shape != (k,):
                raise InvalidParams(f"igarch must have {k} entries")
            if igarch.any() and self.lambda3 is None:
                s(self, "lambda3", np.zeros(k))
            s(self, "igarch", igarch)
        if self.lambda3 is not None:
            lam3 = _vec(self.lambda3, k, "lambda3")
            if igarch is not None:
                lam3 = np.where(igarch, 1.0 - self.lambda1 - self.lambda2, lam3)
            s(self, "lambda3", lam3)
        diagonal = np.ndim(self.theta1) > 0 or np.ndim(self.theta2) > 0
        if diagonal:
            s(self, "theta1", _vec(self.theta1, k, "theta1"))
            s(self, "theta2", _vec(self.theta2, k, "theta2"))
        else:
            s(self, "theta1", float(self.theta1))
            s(self, "theta2", float(self.theta2))
        s(self, "dof", float(self.dof))
        s(self, "m", k + 2 if self.m is None else int(self.m))
        self._validate()

    def _validate(self):
        lams = [self.lambda0, self.lambda1, self.lambda2]
        if self.lambda3 is not None:
            lams.append(self.lambda3)
        for a in lams:
            if not np.all(np.isfinite(a)) or np.any(a < 0):
                raise InvalidParams("variance coefficients must be finite and non-negative")
        if np.any(self.lambda0 <= 0):
            raise InvalidParams("lambda0 entries must be positive")
        if self.lambda3 is None:
            if np.any(self.lambda1 + self.lambda2 >= 1):
                raise InvalidParams("need lambda1 + lambda2 < 1 for every asset")
        else:
            tot = self.lambda1 + self.lambda2 + self.lambda3
            if np.any(tot <= 0) or np.any(tot > 1 + _SUM_TOL):
                raise InvalidParams("need 0 < lambda1 + lambda2 + lambda3 <= 1 for every asset")
        t1, t2 = np.asarray(self.theta1), np.asarray(self.theta2)
        if not (np.all(np.isfinite(t1)) and np.all(np.isfinite(t2))):
            raise InvalidParams("theta must be finite")
        if np.any(t1 < 0) or np.any(t2 < 0):
            raise InvalidParams("theta must be non-negative")
        if self.diagonal:
            if np.any(t1**2 + t2**2 >= 1):
                raise InvalidParams("need theta1_i^2 + theta2_i^2 < 1")
        elif t1 + t2 >= 1:
            raise InvalidParams("need theta1 + theta2 < 1")
        if not (np.isfinite(self.dof) and self.dof > 2):
            raise InvalidParams("degrees of freedom must exceed 2")
        if self.m < 1:
            raise InvalidParams("psi window m must be at least 1")

    @property
    def leverage(self):
        return self.lambda3 is not None

    @property
    def diagonal(self):
        return np.ndim(self.theta1) > 0

    def replace(self, **changes):
        return replace(self, **changes)

    def kernel_args(self):
        k = self.k
        lam3 = self.lambda3 if self.lambda3 is not None else np.zeros(k)
        th1 = np.atleast_1d(np.asarray(self.theta1, dtype=float))
        th2 = np.atleast_1d(np.asarray(self.theta2, dtype=float))
        return (self.lambda0, self.lambda1, self.lambda2, lam3, th1, th2,
                self.diagonal, self.rbar, self.m, self.dof)

    def unconditional_variance(self):
        """``lambda0 / (1 - persistence)``; 1.0 for integrated assets.

        The leverage term counts half, as for symmetric innovations.
        """
        pers = self.lambda1 + self.lambda2
        if self.lambda3 is not None:
            pers = pers + 0.5 * self.lambda3
        out = np.ones(self.k)
        ok = pers < 1 - 1e-8
        out[ok] = self.lambda0[ok] / (1.0 - pers[ok])
        return out


@dataclass(frozen=True)
class FilterState:
    """Filter state before the first row is processed.

    ``d2`` is the conditional variance of the first row, ``r`` the previous
    correlation matrix and ``ubuf`` the most recent standardized innovations
    (oldest first, at most m rows kept by the caller).
    """

    d2: np.ndarray
    r: np.ndarray
    ubuf: np.ndarray = None

    @classmethod
    def default(cls, params, e):
        """Sample variances, R_0 = Rbar, empty buffer (first m rows are burn-in)."""
        e = np.asarray(e, dtype=float)
        return cls(d2=e.var(axis=0, ddof=1), r=params.rbar, ubuf=None)


@dataclass
class VolatilityPath:
    """Per-row conditional standard deviations, correlations and covariances."""

    d: np.ndarray
    r: np.ndarray
    first_scored: int = 0

    @property
    def sigma(self):
        return self.d[:, :, None] * self.r * self.d[:, None, :]

    @property
    def T(self):
        return self.d.shape[0]


def _run(params, e, init, store):
    e = np.ascontiguousarray(e, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    if e.shape[1] != params.k:
        raise InvalidParams(f"expected {params.k} columns, got {e.shape[1]}")
    if init is None:
        init = FilterState.default(params, e)
    ubuf = np.zeros((0, params.k)) if init.ubuf is None else np.asarray(init.ubuf, float)
    T, k = e.shape
    sig = np.empty((T, k) if store else (0, k))
    rr = np.empty((T, k, k) if store else (0, k, k))
    nll, status, first = _kernels.filter_path(
        e, *params.kernel_args(), np.asarray(init.d2, float), np.asarray(init.r, float),
        np.ascontiguousarray(ubuf), store, sig, rr)
    return nll, status, first, sig, rr


_STATUS = {
    _kernels.VARIANCE_BLOWUP: "conditional variance overflowed",
    _kernels.CORR_NOT_PD: "correlation matrix lost positive definiteness",
}


def run_filter(params, e, init=None):
    """Filter ``e`` and return ``(VolatilityPath, nll)``."""
    nll, status, first, sig, rr = _run(params, e, init, True)
    if status:
        raise FilterBlowup(_STATUS[status])
    return VolatilityPath(d=np.sqrt(sig), r=rr, first_scored=first), nll


def negative_log_likelihood(params, e, init=None):
    """Negative log-likelihood of residuals ``e`` (T x k).

    Rows before the psi buffer holds ``m`` innovations are not scored.
    Raises ``FilterBlowup`` when the recursion leaves the valid region.
    """
    nll, status, first, _, _ = _run(params, e, init, False)
    if status:
        raise FilterBlowup(_STATUS[status])
    if first < 0:
        raise InvalidParams("series too short: no row has a full psi window")
    return float(nll)


def penalized_nll(params, e, init=None, penalty=1e10):
    """NLL for optimizers: a large finite value instead of an exception."""
    nll, status, first, _, _ = _run(params, e, init, False)
    if status or not np.isfinite(nll):
        return penalty
    return float(nll)


# --------------------------------------------------------------------------
# single-step building blocks


def psi_matrix(u_history):
    """Uncentered correlation of the rows of ``u_history`` (m x k)."""
    u = np.asarray(u_history, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    s = u.T @ u
    n = np.diag(s)
    if np.any(n <= 0):
        raise ZeroNormColumn(f"columns {np.flatnonzero(n <= 0).tolist()} are all zero")
    out = s / np.sqrt(np.outer(n, n))
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def variance_step(d2_prev, e_prev, params):
    """Next conditional variances from the previous variances and innovations."""
    d2_prev = np.asarray(d2_prev, dtype=float)
    e_prev = np.asarray(e_prev, dtype=float)
    out = params.lambda0 + params.lambda1 * d2_prev + params.lambda2 * e_prev**2
    if params.lambda3 is not None:
        out = out + params.lambda3 * np.where(e_prev < 0, e_prev**2, 0.0)
    return out


def correlation_step(r_prev, psi, params):
    """Scalar-theta correlation update; dispatches to the diagonal form if needed."""
    if params.diagonal:
        return correlation_step_diag_theta(r_prev, psi, params.theta1, params.theta2, params.rbar)
    a, b = params.theta1, params.theta2
    out = (1.0 - a - b) * params.rbar + a * np.asarray(psi) + b * np.asarray(r_prev)
    np.fill_diagonal(out, 1.0)
    return out


def correlation_step_diag_theta(r_prev, psi, theta1, theta2, rbar):
    """Correlation update with per-asset weights.

    ``R_t = C Rbar C + A Psi A + B R_prev B`` with ``A = diag(theta1)``,
    ``B = diag(theta2)`` and ``C = sqrt(I - A^2 - B^2)``.  The diagonal is 1
    because ``c_i^2 + a_i^2 + b_i^2 = 1``; the symmetric placement of ``C``
    keeps the result symmetric and positive definite.
    """
    a = np.asarray(theta1, dtype=float)
    b = np.asarray(theta2, dtype=float)
    c = np.sqrt(1.0 - a**2 - b**2)
    out = (np.outer(c, c) * np.asarray(rbar) + np.outer(a, a) * np.asarray(psi)
           + np.outer(b, b) * np.asarray(r_prev))
    np.fill_diagonal(out, 1.0)
    return out


def assemble_sigma(d, r):
    """``D R D`` for a vector of standard deviations ``d``."""
    d = np.asarray(d, dtype=float)
    return d[:, None] * np.asarray(r, dtype=float) * d[None, :]


def mvt_log_density(eps, v, k=None):
    """Log density of the unit-variance multivariate Student-t.

    ``eps`` is a k-vector or an n x k array (one row per point).
    """
    eps = np.asarray(eps, dtype=float)
    if k is None:
        k = eps.shape[-1] if eps.ndim else 1
    q = np.sum(np.atleast_1d(eps) ** 2, axis=-1) if eps.ndim else eps**2
    const = gammaln(0.5 * (v + k)) - gammaln(0.5 * v) - 0.5 * k * np.log(np.pi * (v - 2.0))
    return const - 0.5 * (v + k) * np.log1p(q / (v - 2.0))


def standardized_residuals(path, e):
    """``Sigma_t^{-1/2} e_t`` with the symmetric inverse square root, per row."""
    e = np.asarray(e, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    sigma = path.sigma
    if sigma.shape[0] != e.shape[0]:
        raise InvalidParams("path and residuals have different lengths")
    w, v = np.linalg.eigh(sigma)
    bad = w[:, 0] <= 1e-12 * w[:, -1]
    if np.any(bad):
        raise NotPositiveDefinite(f"Sigma_t not positive definite at rows {np.flatnonzero(bad)[:5].tolist()}")
    coef = np.einsum("tji,tj->ti", v, e) / np.sqrt(w)
    return np.einsum("tij,tj->ti", v, coef)
