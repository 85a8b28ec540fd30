"""Joint constrained maximum likelihood for the proposed model.

Constraints are realized by a smooth reparametrization (``ParamMapping``):
the optimizer works on an unconstrained vector and every decoded point is a
valid ``ModelParams``.

* ``lambda0 = exp(x)``
* ``lambda1``, ``lambda2``, ``lambda3`` are stick-broken from ``(0, cap)``
  in that order, each as ``bound * logistic(x)`` where ``bound`` is what the
  earlier (and any fixed later) coefficients of the same asset leave over
* scalar thetas are stick-broken the same way; diagonal thetas stick-break
  their squares
* ``dof = 2 + exp(x)``

Equal-value tie groups share one coordinate; fixed entries and IGARCH-tied
leverage coefficients contribute none.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import expit, logit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_panel
from .exceptions import (
    FilterBlowupAtOptimum,
    HessianNotPD,
    InputError,
    InvalidParams,
    NotNested,
)
from .matcore import sample_correlation
from .volcore import (
    FilterState,
    ModelParams,
    penalized_nll,
    run_filter,
    standardized_residuals,
)

CAP = 1.0 - 1e-6
PENALTY = 1e10
ASSET_FAMILIES = ("lambda0", "lambda1", "lambda2", "lambda3")
DEFAULT_START = {
    "lambda1": 0.85, "lambda2": 0.05, "lambda3": 0.02,
    "theta1": 0.02, "theta2": 0.90, "dof": 8.0,
}


@dataclass
class _Group:
    family: str
    members: tuple  # asset indices; () for scalar families

    @property
    def name(self):
        if not self.members:
            return self.family
        return f"{self.family}[{','.join(str(i + 1) for i in self.members)}]"


class ParamMapping:
    """Bijection between free optimizer coordinates and ``ModelParams``.

    Parameters
    ----------
    k : int
        Number of assets.
    rbar : array_like
        Fixed long-run correlation matrix passed through to ``ModelParams``.
    leverage : bool
        Include the leverage coefficients.
    diagonal : bool
        Per-asset theta vectors instead of scalars.
    ties : dict, optional
        ``family -> list of asset-index groups`` sharing one value, e.g.
        ``{"lambda1": [[0, 1, 2, 3]]}``.  Indices are 0-based.
    igarch : sequence of bool, optional
        Assets whose leverage coefficient is ``1 - lambda1 - lambda2``.
    fixed : dict, optional
        ``family -> value`` (scalar or per-asset list with ``None`` for free
        entries) held fixed during estimation.
    """

    def __init__(self, k, rbar, m=None, leverage=False, diagonal=False, ties=None,
                 igarch=None, fixed=None):
        self.k = int(k)
        self.rbar = np.asarray(rbar, dtype=float)
        self.m = m
        self.igarch = None if igarch is None else np.array(igarch, dtype=bool).reshape(-1)
        if self.igarch is not None:
            if self.igarch.size == 1:
                self.igarch = np.full(self.k, bool(self.igarch[0]))
            if self.igarch.shape != (self.k,):
                raise InputError(f"igarch needs {self.k} flags")
            leverage = leverage or bool(self.igarch.any())
        self.leverage = bool(leverage)
        self.diagonal = bool(diagonal) and self.k > 1
        fixed = dict(fixed or {})
        if self.k == 1:
            # a 1x1 correlation is identically 1: thetas are not identified
            fixed.setdefault("theta1", 0.0)
            fixed.setdefault("theta2", 0.0)
        self.fixed = self._normalize_fixed(fixed)
        self.groups = self._build_groups(ties or {})

    # -- construction -----------------------------------------------------

    def asset_families(self):
        fams = ["lambda0", "lambda1", "lambda2"]
        if self.leverage:
            fams.append("lambda3")
        if self.diagonal:
            fams += ["theta1", "theta2"]
        return fams

    def families(self):
        fams = ["lambda0", "lambda1", "lambda2"]
        if self.leverage:
            fams.append("lambda3")
        return fams + ["theta1", "theta2", "dof"]

    def _normalize_fixed(self, fixed):
        out = {}
        per_asset = set(self.asset_families())
        for fam, val in fixed.items():
            if fam not in self.families():
                raise InputError(f"cannot fix unknown or disabled family {fam!r}")
            if fam in per_asset:
                vals = [val] * self.k if np.ndim(val) == 0 else list(val)
                if len(vals) != self.k:
                    raise InputError(f"fixed {fam} needs {self.k} entries")
                out[fam] = [None if v is None else float(v) for v in vals]
            else:
                if np.ndim(val) != 0:
                    raise InputError(f"{fam} is a scalar in this configuration")
                out[fam] = float(val)
        return out

    def _is_fixed(self, fam, i=None):
        if fam not in self.fixed:
            return False
        if i is None:
            return True
        v = self.fixed[fam]
        return v[i] is not None if isinstance(v, list) else True

    def _fixed_value(self, fam, i=None):
        v = self.fixed[fam]
        return v[i] if isinstance(v, list) else v

    def _build_groups(self, ties):
        per_asset = self.asset_families()
        for fam in ties:
            if fam not in per_asset:
                raise InputError(f"ties on {fam!r} are not available in this configuration")
        groups = []
        for fam in per_asset:
            free = [i for i in range(self.k) if not self._is_fixed(fam, i)]
            if fam == "lambda3" and self.igarch is not None:
                free = [i for i in free if not self.igarch[i]]
            seen = set()
            for g in ties.get(fam, []):
                g = tuple(sorted(int(i) for i in g))
                if not g:
                    continue
                if any(i < 0 or i >= self.k for i in g):
                    raise InputError(f"tie {g} in {fam} refers to a missing asset")
                if seen.intersection(g):
                    raise InputError(f"asset appears in two {fam} tie groups")
                if any(i not in free for i in g):
                    raise InputError(f"tie {g} in {fam} includes a fixed or IGARCH-tied entry")
                seen.update(g)
                groups.append(_Group(fam, g))
            groups += [_Group(fam, (i,)) for i in free if i not in seen]
        for fam in ("theta1", "theta2", "dof"):
            if fam in per_asset or self._is_fixed(fam):
                continue
            groups.append(_Group(fam, ()))
        order = {f: n for n, f in enumerate(self.families())}
        groups.sort(key=lambda g: (order[g.family], g.members))
        return groups

    @property
    def n_free(self):
        return len(self.groups)

    @property
    def names(self):
        return [g.name for g in self.groups]

    def count_by_family(self):
        out = {f: 0 for f in self.families()}
        for g in self.groups:
            out[g.family] += 1
        return out

    # -- bounds -----------------------------------------------------------

    def _lambda_bound(self, fam, i, values):
        """Upper bound for lambda1/2/3 of asset i given earlier values."""
        chain = ["lambda1", "lambda2"] + (["lambda3"] if self.leverage else [])
        pos = chain.index(fam)
        used = sum(values[f][i] for f in chain[:pos])
        for f in chain[pos + 1:]:
            if f == "lambda3" and self.igarch is not None and self.igarch[i]:
                continue
            if self._is_fixed(f, i):
                used += self._fixed_value(f, i)
        return CAP - used

    def _theta_bound(self, fam, i, values):
        sq = self.diagonal
        other = "theta2" if fam == "theta1" else "theta1"
        used = 0.0
        if fam == "theta2":
            v = values["theta1"][i] if sq else values["theta1"]
            used = v * v if sq else v
        elif self._is_fixed(other, i if sq else None):
            v = self._fixed_value(other, i if sq else None)
            used = v * v if sq else v
        return CAP - used

    # -- decode / encode --------------------------------------------------

    def _empty_values(self):
        vals = {}
        for fam in self.families():
            if fam in self.asset_families():
                arr = np.full(self.k, np.nan)
                if fam in self.fixed:
                    for i in range(self.k):
                        if self._is_fixed(fam, i):
                            arr[i] = self._fixed_value(fam, i)
                vals[fam] = arr
            else:
                vals[fam] = self.fixed.get(fam, np.nan)
        return vals

    def decode_values(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_free,):
            raise InvalidParams(f"expected {self.n_free} coordinates, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidParams("non-finite free coordinate")
        vals = self._empty_values()
        for g, xi in zip(self.groups, x):
            fam = g.family
            if fam == "lambda0":
                vals[fam][list(g.members)] = math.exp(min(max(xi, -700.0), 700.0))
            elif fam == "dof":
                # floor keeps v strictly above 2 in floating point
                vals[fam] = 2.0 + math.exp(min(max(xi, -30.0), 700.0))
            elif fam.startswith("lambda"):
                bound = min(self._lambda_bound(fam, i, vals) for i in g.members)
                # clipping keeps the coefficient sum strictly positive
                vals[fam][list(g.members)] = bound * expit(min(max(xi, -700.0), 700.0))
            elif self.diagonal:
                bound = min(self._theta_bound(fam, i, vals) for i in g.members)
                vals[fam][list(g.members)] = math.sqrt(bound * expit(xi))
            else:
                vals[fam] = self._theta_bound(fam, None, vals) * expit(xi)
        return vals

    def decode(self, x):
        """Free coordinates -> ``ModelParams``."""
        v = self.decode_values(x)
        return ModelParams(
            lambda0=v["lambda0"], lambda1=v["lambda1"], lambda2=v["lambda2"],
            lambda3=v.get("lambda3") if self.leverage else None,
            theta1=v["theta1"], theta2=v["theta2"], dof=v["dof"],
            rbar=self.rbar, m=self.m, igarch=self.igarch)

    def group_values(self, x):
        """Model-coordinate value of each free group (for the delta method)."""
        v = self.decode_values(x)
        out = np.empty(self.n_free)
        for n, g in enumerate(self.groups):
            out[n] = v[g.family][g.members[0]] if g.members else v[g.family]
        return out

    def encode(self, params, clip=False):
        """``ModelParams`` (or a ``family -> value`` dict) -> free coordinates.

        With ``clip`` values outside the admissible interval are pulled
        inside (used for start values); otherwise they raise.
        """
        src = _as_value_dict(params, self.k)
        vals = self._empty_values()
        x = np.empty(self.n_free)
        for n, g in enumerate(self.groups):
            fam = g.family
            if fam not in src or src[fam] is None:
                raise InvalidParams(f"no value for {g.name}")
            raw = np.atleast_1d(np.asarray(src[fam], dtype=float))
            if g.members:
                if raw.size == 1:
                    raw = np.full(self.k, raw[0])
                member_vals = raw[list(g.members)]
                if not clip and np.ptp(member_vals) > 1e-9 * max(1.0, np.max(np.abs(member_vals))):
                    raise InvalidParams(f"tied entries of {g.name} differ")
                val = float(member_vals[0]) if not clip else float(np.mean(member_vals))
            else:
                val = float(raw[0])
            if fam == "lambda0":
                if clip:
                    val = max(val, 1e-8)
                if not val > 0:
                    raise InvalidParams(f"{g.name} must be positive")
                x[n] = math.log(val)
                vals[fam][list(g.members)] = val
                continue
            if fam == "dof":
                if clip:
                    val = min(max(val, 2.1), 1e6)
                if not val > 2:
                    raise InvalidParams("dof must exceed 2")
                x[n] = math.log(val - 2.0)
                vals[fam] = val
                continue
            if fam.startswith("lambda"):
                bound = min(self._lambda_bound(fam, i, vals) for i in g.members)
                target = val
            elif self.diagonal:
                bound = min(self._theta_bound(fam, i, vals) for i in g.members)
                target = val * val
            else:
                bound = self._theta_bound(fam, None, vals)
                target = val
            if bound <= 0:
                raise InvalidParams(f"no room left for {g.name}")
            frac = target / bound
            if clip:
                frac = min(max(frac, 1e-6), 0.999)
            if not 0 < frac < 1:
                raise InvalidParams(f"{g.name} = {val} outside the open interval (0, {bound})")
            x[n] = logit(frac)
            # store what decode will reproduce, so later bounds match exactly
            dec = bound * expit(x[n])
            if fam.startswith("lambda"):
                vals[fam][list(g.members)] = dec
            elif self.diagonal:
                vals[fam][list(g.members)] = math.sqrt(dec)
            else:
                vals[fam] = dec
        return x

    def default_start(self, e):
        var = np.asarray(e, dtype=float).var(axis=0, ddof=1)
        start = {"lambda0": 0.05 * var}
        for fam in self.families():
            if fam in DEFAULT_START:
                val = DEFAULT_START[fam]
                if self.diagonal and fam.startswith("theta"):
                    val = math.sqrt(val)
                start[fam] = val
        return start


def _as_value_dict(params, k):
    if isinstance(params, ModelParams):
        d = {"lambda0": params.lambda0, "lambda1": params.lambda1, "lambda2": params.lambda2,
             "theta1": params.theta1, "theta2": params.theta2, "dof": params.dof}
        if params.lambda3 is not None:
            d["lambda3"] = params.lambda3
        return d
    return dict(params)


# --------------------------------------------------------------------------
# numerical derivatives


def _central_gradient(f, x, rel_step=1e-5):
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def numerical_hessian(f, x, rel_step=1e-4):
    """Central-difference Hessian with step ``rel_step * max(1, |x_i|)``."""
    n = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    f0 = f(x)
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                 + f(x - ei - ej)) / (4 * h[i] * h[j])
    return H


def _jacobian(g, x, rel_step=1e-6):
    n = x.size
    g0 = g(x)
    J = np.empty((g0.size, n))
    for i in range(n):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (g(xp) - g(xm)) / (2 * h)
    return J


# --------------------------------------------------------------------------
# results


@dataclass
class FitResult:
    """Outcome of a joint fit.

    ``std_errors`` maps each free group name (e.g. ``"lambda2[3,4]"``) to its
    asymptotic standard error; it is ``None`` when the Hessian is not
    positive definite.  Fixed and IGARCH-tied entries have no entry.
    """

    params: ModelParams
    lmax: float
    n_iterations: int
    converged: bool
    x: np.ndarray
    names: list
    n_obs: int
    n_scored: int
    param_count: dict
    std_errors: dict = None
    cov: np.ndarray = None
    residuals_std: np.ndarray = None
    message: str = ""
    hessian_pd: bool = None
    mapping: ParamMapping = field(default=None, repr=False)

    @property
    def n_free(self):
        return len(self.names)

    def estimates(self):
        """Free-group name -> estimate."""
        return dict(zip(self.names, self.mapping.group_values(self.x)))

    def std_error_of(self, family, asset=None):
        """Standard error of one model entry, looked up through its tie group."""
        if self.std_errors is None:
            return None
        for g in self.mapping.groups:
            if g.family == family and (not g.members or asset in g.members):
                return self.std_errors.get(g.name)
        return None


@dataclass(frozen=True)
class LrTestResult:
    statistic: float
    df: int
    pvalue: float


def lr_test(full, restricted):
    """Likelihood-ratio test of a restricted fit nested in a fuller one."""
    df = full.n_free - restricted.n_free
    if full.n_obs != restricted.n_obs or full.n_scored != restricted.n_scored:
        raise NotNested("fits use different data spans or burn-in")
    stat = max(0.0, 2.0 * (full.lmax - restricted.lmax))
    if df == 0 and stat <= 1e-8 * max(1.0, abs(full.lmax)):
        # the same model fitted twice
        return LrTestResult(statistic=0.0, df=0, pvalue=1.0)
    if df <= 0:
        raise NotNested("the full model must have more free parameters")
    return LrTestResult(statistic=stat, df=df, pvalue=float(stats.chi2.sf(stat, df)))


def std_errors(result, e):
    """Inverse-Hessian standard errors in model coordinates.

    The Hessian of the negative log-likelihood is taken numerically in free
    coordinates and mapped through the decode Jacobian (delta method).
    Returns ``(se_dict, cov)``; raises ``HessianNotPD``.
    """
    mapping = result.mapping
    e = check_panel(e)
    init = FilterState.default(result.params, e)

    def f(x):
        try:
            return penalized_nll(mapping.decode(x), e, init, PENALTY)
        except InvalidParams:
            return PENALTY

    H = numerical_hessian(f, result.x)
    H = 0.5 * (H + H.T)
    try:
        w = np.linalg.eigvalsh(H)
    except np.linalg.LinAlgError:
        raise HessianNotPD("Hessian could not be factorized") from None
    if not np.all(np.isfinite(w)) or w[0] <= 1e-10 * max(1.0, w[-1]):
        raise HessianNotPD(f"Hessian is not positive definite (min eigenvalue {w[0]:.3g})")
    cov_x = np.linalg.inv(H)
    J = _jacobian(mapping.group_values, result.x)
    cov = J @ cov_x @ J.T
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return dict(zip(mapping.names, se)), cov


# --------------------------------------------------------------------------
# estimator


class MultivariateGarch(BaseEstimator):
    """Diagonal GARCH variances with hybrid dynamic correlations and
    multivariate Student-t innovations, fitted jointly by maximum likelihood.

    ``fit`` expects mean-corrected residuals (put a :class:`mvvol.VAR` in
    front in a pipeline when a mean model is needed).

    Parameters
    ----------
    leverage : bool, default False
        Add the negative-shock term to the variance recursion.
    igarch : sequence of bool, optional
        Per-asset flags tying ``lambda3 = 1 - lambda1 - lambda2``.
    ties : dict, optional
        Equality constraints, ``family -> list of 0-based asset groups``.
    fixed : dict, optional
        Parameters held fixed, ``family -> value``.
    correlation : {"scalar", "diagonal"}
        Scalar thetas or per-asset diagonal theta matrices.
    m : int, optional
        Psi window, default ``k + 2``.
    dof : float, optional
        Fix the degrees of freedom instead of estimating them.
    start : dict, ModelParams, "default" or list of these, optional
        Start point(s); the best optimum over all starts is kept.
    max_iter, gtol, ftol : optimizer settings
        Stop when the max-norm of the gradient falls below ``gtol`` or the
        relative NLL change below ``ftol``.
    compute_std_errors : bool, default True
    """

    def __init__(self, leverage=False, igarch=None, ties=None, fixed=None,
                 correlation="scalar", m=None, dof=None, start=None, max_iter=2000,
                 gtol=1e-5, ftol=1e-9, compute_std_errors=True):
        self.leverage = leverage
        self.igarch = igarch
        self.ties = ties
        self.fixed = fixed
        self.correlation = correlation
        self.m = m
        self.dof = dof
        self.start = start
        self.max_iter = max_iter
        self.gtol = gtol
        self.ftol = ftol
        self.compute_std_errors = compute_std_errors

    def _mapping(self, k, rbar):
        if self.correlation not in ("scalar", "diagonal"):
            raise InputError("correlation must be 'scalar' or 'diagonal'")
        fixed = dict(self.fixed or {})
        if self.dof is not None:
            fixed["dof"] = float(self.dof)
        return ParamMapping(k, rbar, m=self.m, leverage=self.leverage,
                            diagonal=self.correlation == "diagonal", ties=self.ties,
                            igarch=self.igarch, fixed=fixed)

    def _starts(self, mapping, e):
        starts = self.start
        if starts is None or isinstance(starts, (dict, ModelParams, str)):
            starts = [starts]
        out = []
        default = mapping.default_start(e)
        for s in starts:
            if s is None or (isinstance(s, str) and s == "default"):
                s = default
            s = {**default, **_as_value_dict(s, mapping.k)}
            out.append(mapping.encode(s, clip=True))
        return out

    def fit(self, X, y=None):
        e = check_panel(X, min_rows=3)
        T, k = e.shape
        rbar = sample_correlation(e) if k > 1 else np.ones((1, 1))
        mapping = self._mapping(k, rbar)
        m = k + 2 if self.m is None else int(self.m)
        if T <= m + 1:
            raise InputError(f"need more than {m + 1} observations")
        if T < 10 * mapping.n_free:
            warnings.warn(f"only {T} observations for {mapping.n_free} free parameters",
                          stacklevel=2)
        init = FilterState(d2=e.var(axis=0, ddof=1), r=rbar)

        def f(x):
            try:
                return penalized_nll(mapping.decode(x), e, init, PENALTY)
            except InvalidParams:
                return PENALTY

        def grad(x):
            return _central_gradient(f, x)

        best = None
        for x0 in self._starts(mapping, e):
            if mapping.n_free == 0:
                res = optimize.OptimizeResult(x=x0, fun=f(x0), nit=0, success=True,
                                              message="no free parameters")
            else:
                res = optimize.minimize(
                    f, x0, jac=grad, method="L-BFGS-B",
                    options={"maxiter": self.max_iter, "gtol": self.gtol,
                             "ftol": self.ftol, "maxfun": 20 * self.max_iter})
            if best is None or res.fun < best.fun:
                best = res
        if best.fun >= PENALTY:
            raise FilterBlowupAtOptimum("optimizer ended in the penalized region")
        params = mapping.decode(best.x)
        path, nll = run_filter(params, e, init)
        result = FitResult(
            params=params, lmax=-nll, n_iterations=int(best.nit),
            converged=bool(best.success), x=np.asarray(best.x), names=mapping.names,
            n_obs=T, n_scored=T - path.first_scored, param_count=mapping.count_by_family(),
            message=str(best.message), mapping=mapping)
        if not result.converged:
            warnings.warn(f"optimizer did not converge: {result.message}", stacklevel=2)
        if self.compute_std_errors and mapping.n_free:
            try:
                result.std_errors, result.cov = std_errors(result, e)
                result.hessian_pd = True
            except HessianNotPD as exc:
                warnings.warn(f"standard errors withheld: {exc}", stacklevel=2)
                result.hessian_pd = False
        result.residuals_std = standardized_residuals(path, e)
        self.result_ = result
        self.params_ = params
        self.path_ = path
        self.lmax_ = result.lmax
        self.n_features_in_ = k
        return self

    def _check(self, X):
        check_is_fitted(self, "result_")
        e = check_panel(X)
        if e.shape[1] != self.n_features_in_:
            raise InputError(f"expected {self.n_features_in_} columns, got {e.shape[1]}")
        return e

    def filter(self, X):
        """Volatility path of ``X`` under the fitted parameters."""
        e = self._check(X)
        return run_filter(self.params_, e)[0]

    def transform(self, X):
        """Standardized residuals ``Sigma_t^{-1/2} e_t``."""
        e = self._check(X)
        return standardized_residuals(run_filter(self.params_, e)[0], e)

    def fit_transform(self, X, y=None):
        return self.fit(X).result_.residuals_std

    def score(self, X, y=None):
        """Log-likelihood of ``X`` under the fitted parameters."""
        e = self._check(X)
        return -run_filter(self.params_, e)[1]

    def suggest_ties(self):
        """Pairs of same-family estimates closer than one joint standard error.

        Only a suggestion: ties are never applied automatically.
        """
        check_is_fitted(self, "result_")
        r = self.result_
        if r.cov is None:
            return []
        est = r.mapping.group_values(r.x)
        out = []
        for a in range(r.n_free):
            for b in range(a):
                ga, gb = r.mapping.groups[a], r.mapping.groups[b]
                if ga.family != gb.family or not ga.members:
                    continue
                v = r.cov[a, a] + r.cov[b, b] - 2 * r.cov[a, b]
                if v > 0 and abs(est[a] - est[b]) < math.sqrt(v):
                    out.append((gb.name, ga.name, float(est[b]), float(est[a])))
        return out

    def summary(self):
        """Parameter table: ``estimate(std.err)`` per asset, then dof and thetas."""
        check_is_fitted(self, "result_")
        return format_summary(self.result_)


def format_summary(result, assets=None):
    p = result.params
    k = p.k
    assets = assets or [f"x{i + 1}" for i in range(k)]
    fams = ["lambda0", "lambda1", "lambda2"] + (["lambda3"] if p.leverage else [])
    if p.diagonal:
        fams += ["theta1", "theta2"]

    def cell(fam, i=None):
        val = getattr(p, fam)
        val = val[i] if i is not None else val
        se = result.std_error_of(fam, i)
        return f"{val:.4f}" + (f"({se:.4f})" if se is not None else "")

    width = 18
    lines = [f"L_max = {result.lmax:.2f}   free parameters = {result.n_free}   "
             f"converged = {result.converged}"]
    lines.append("asset".ljust(10) + "".join(f.ljust(width) for f in fams))
    for i in range(k):
        lines.append(assets[i].ljust(10) + "".join(cell(f, i).ljust(width) for f in fams))
    lines.append(f"dof     {cell('dof')}")
    if not p.diagonal:
        lines.append(f"theta1  {cell('theta1')}")
        lines.append(f"theta2  {cell('theta2')}")
    counts = ", ".join(f"{f}: {n}" for f, n in result.param_count.items() if n)
    lines.append(f"free parameters by family: {counts}")
    return "\n".join(lines)
