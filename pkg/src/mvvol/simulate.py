"""Synthetic return panels from the supported models."""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._validation import check_seed
from .data import ReturnPanel
from .exceptions import ExplosiveParameters, InputError
from .matcore import normalize_to_correlation, sym_sqrt
from .volcore import FilterState, ModelParams, VolatilityPath

KINDS = ("proposed", "dcc_t", "dcc_e")


def sample_mvt(v, k, rng=None, size=None):
    """Unit-variance multivariate Student-t draws.

    ``z * sqrt((v - 2) / v) / sqrt(w)`` with ``z`` standard normal and
    ``w ~ chi2(v) / v``; ``v = inf`` gives standard normal draws.  Returns a
    k-vector, or an array of shape ``(size, k)``.
    """
    rng = check_seed(rng)
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, k))
    if np.isfinite(v):
        if v <= 2:
            raise InputError("degrees of freedom must exceed 2")
        w = rng.chisquare(v, n) / v
        z *= np.sqrt((v - 2.0) / v) / np.sqrt(w)[:, None]
    return z[0] if size is None else z


@dataclass
class SimulationConfig:
    """What to simulate.

    ``params`` carries the variance recursion, dof and (for ``"proposed"`` and
    ``"dcc_t"``) the correlation recursion; for ``"dcc_t"`` theta plays the
    role of the lambda weights and ``rbar`` of R.  ``"dcc_e"`` additionally
    needs ``dcc_e`` (a :class:`mvvol.baselines.DccEParams`).

    ``shocks`` maps an output row index to a standardized innovation vector
    that replaces the random draw there.  ``var_phi0`` / ``var_phi`` add a
    VAR mean.
    """

    params: ModelParams
    T: int
    kind: str = "proposed"
    burn_in: int = 500
    seed: object = None
    dcc_e: object = None
    var_phi0: np.ndarray = None
    var_phi: list = field(default_factory=list)
    shocks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"kind must be one of {KINDS}")
        if self.T < 1:
            raise InputError("T must be at least 1")
        if self.burn_in < self.params.m:
            raise InputError(f"burn_in must be at least m = {self.params.m}")
        if self.kind == "dcc_e" and self.dcc_e is None:
            raise InputError("dcc_e parameters are required for kind 'dcc_e'")


@dataclass
class SimulationResult:
    """Simulated returns plus everything needed to check them.

    ``init_state`` is the filter state at the first emitted row, so
    ``run_filter(params, innovations, init_state)`` retraces ``path``.
    """

    panel: ReturnPanel
    innovations: np.ndarray
    eps: np.ndarray
    path: VolatilityPath
    init_state: FilterState

    @property
    def returns(self):
        return self.panel.values


def _draws(cfg, k, n, rng):
    eps = sample_mvt(cfg.params.dof, k, rng, size=n)
    for t, shock in cfg.shocks.items():
        row = cfg.burn_in + int(t)
        if not 0 <= row < n:
            raise InputError(f"shock index {t} outside the sample")
        eps[row] = np.asarray(shock, dtype=float)
    return eps


def _simulate_dcc_e(cfg, eps):
    p, de = cfg.params, cfg.dcc_e
    n, k = eps.shape
    d2 = p.unconditional_variance()
    q = np.array(de.qbar, dtype=float)
    sig = np.empty((n, k))
    rr = np.empty((n, k, k))
    e = np.empty((n, k))
    u_prev = None
    for t in range(n):
        if t > 0:
            d2 = p.lambda0 + p.lambda1 * d2 + p.lambda2 * e[t - 1] ** 2
            q = ((1 - de.alpha1 - de.alpha2) * de.qbar + de.alpha1 * np.outer(u_prev, u_prev)
                 + de.alpha2 * q)
        if np.any(~np.isfinite(d2)) or np.any(d2 > _kernels.SIGMA_MAX):
            raise ExplosiveParameters(f"variance exploded at step {t}")
        r = normalize_to_correlation(q)
        sd = np.sqrt(d2)
        e[t] = sym_sqrt(sd[:, None] * r * sd[None, :]) @ eps[t]
        u_prev = e[t] / sd
        sig[t] = d2
        rr[t] = r
    return sig, rr, e


def simulate(config):
    """Run the configured model forward; the first ``burn_in`` steps are dropped.

    The recursion starts from the unconditional variances and ``R = Rbar``.
    """
    cfg = config
    p = cfg.params
    k = p.k
    n = cfg.burn_in + cfg.T
    rng = check_seed(cfg.seed)
    eps = _draws(cfg, k, n, rng)
    if cfg.kind == "dcc_e":
        sig, rr, e = _simulate_dcc_e(cfg, eps)
        u = e / np.sqrt(sig)
    else:
        sig = np.empty((n, k))
        rr = np.empty((n, k, k))
        e = np.empty((n, k))
        u = np.empty((n, k))
        args = p.kernel_args()[:-1]  # simulate_path takes no dof
        status, t = _kernels.simulate_path(eps, *args, p.unconditional_variance(),
                                           sig, rr, e, u)
        if status:
            raise ExplosiveParameters(f"simulation broke down at step {t} (status {status})")
    b = cfg.burn_in
    ret = e[b:].copy()
    if cfg.var_phi0 is not None or cfg.var_phi:
        ret = _add_var_mean(ret, cfg, k)
    init = FilterState(d2=sig[b].copy(), r=rr[b - 1].copy(), ubuf=u[b - p.m:b].copy())
    path = VolatilityPath(d=np.sqrt(sig[b:]), r=rr[b:], first_scored=0)
    return SimulationResult(panel=ReturnPanel.from_array(ret), innovations=e[b:].copy(),
                            eps=eps[b:].copy(), path=path, init_state=init)


def _add_var_mean(e, cfg, k):
    phi0 = np.zeros(k) if cfg.var_phi0 is None else np.asarray(cfg.var_phi0, dtype=float)
    phi = [np.asarray(a, dtype=float) for a in cfg.var_phi]
    p = len(phi)
    r = np.zeros((e.shape[0] + p, k))
    for t in range(e.shape[0]):
        mu = phi0.copy()
        for i, a in enumerate(phi, start=1):
            mu += a @ r[p + t - i]
        r[p + t] = mu + e[t]
    return r[p:]


def simulate_many(config, n, seed=None):
    """``n`` independent runs with seeds spawned from one master seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    out = []
    for child in children:
        cfg = SimulationConfig(**{**config.__dict__, "seed": np.random.default_rng(child)})
        out.append(simulate(cfg))
    return out
