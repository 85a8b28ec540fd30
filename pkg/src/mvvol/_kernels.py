"""Compiled recursions shared by the likelihood filter and the simulator.

Both paths call the same step helpers in the same order, which is what makes
a simulated volatility path reproducible bit for bit by the filter.

Status codes: 0 ok, 1 variance overflow / non-finite, 2 correlation matrix
not positive definite.
"""

import math

import numpy as np
from numba import njit

SIGMA_MAX = 1e12
CHOL_TOL = 1e-12
OK, VARIANCE_BLOWUP, CORR_NOT_PD = 0, 1, 2


@njit(cache=True)
def variance_update(d2, e, row, lam0, lam1, lam2, lam3):
    """In place: d2 <- next variances given the innovations in ``e[row]``."""
    k = d2.shape[0]
    for i in range(k):
        x = e[row, i]
        s = lam0[i] + lam1[i] * d2[i] + lam2[i] * x * x
        if x < 0.0:
            s += lam3[i] * x * x
        d2[i] = s


@njit(cache=True)
def psi_window(u, start, stop, out):
    """Uncentered correlation of rows start..stop-1 of ``u``.

    A column with zero norm gets zero off-diagonal entries; returns False in
    that case so callers can tell.
    """
    k = u.shape[1]
    for i in range(k):
        for j in range(i + 1):
            s = 0.0
            for v in range(start, stop):
                s += u[v, i] * u[v, j]
            out[i, j] = s
    ok = True
    for i in range(k):
        if out[i, i] <= 0.0:
            ok = False
    for i in range(k):
        for j in range(i):
            den = out[i, i] * out[j, j]
            if den > 0.0:
                c = out[i, j] / math.sqrt(den)
            else:
                c = 0.0
            out[i, j] = c
            out[j, i] = c
    for i in range(k):
        out[i, i] = 1.0
    return ok


@njit(cache=True)
def corr_update(rbar, psi, r_prev, th1, th2, diagonal, out):
    """Scalar: (1-a-b) Rbar + a Psi + b R_prev.

    Diagonal: C Rbar C + A Psi A + B R_prev B with C = sqrt(I - A^2 - B^2).
    """
    k = rbar.shape[0]
    if not diagonal:
        a = th1[0]
        b = th2[0]
        c = 1.0 - a - b
        for i in range(k):
            for j in range(k):
                out[i, j] = c * rbar[i, j] + a * psi[i, j] + b * r_prev[i, j]
    else:
        for i in range(k):
            ci = math.sqrt(max(1.0 - th1[i] * th1[i] - th2[i] * th2[i], 0.0))
            for j in range(k):
                cj = math.sqrt(max(1.0 - th1[j] * th1[j] - th2[j] * th2[j], 0.0))
                out[i, j] = (ci * cj * rbar[i, j] + th1[i] * th1[j] * psi[i, j]
                             + th2[i] * th2[j] * r_prev[i, j])
    for i in range(k):
        out[i, i] = 1.0


@njit(cache=True)
def _copy(src, dst):
    k = src.shape[0]
    for i in range(k):
        for j in range(k):
            dst[i, j] = src[i, j]


@njit(cache=True)
def cholesky(a, out):
    """Lower Cholesky factor; False if a pivot falls below CHOL_TOL."""
    k = a.shape[0]
    for j in range(k):
        s = a[j, j]
        for p in range(j):
            s -= out[j, p] * out[j, p]
        if not s > CHOL_TOL:
            return False
        d = math.sqrt(s)
        out[j, j] = d
        for i in range(j + 1, k):
            s = a[i, j]
            for p in range(j):
                s -= out[i, p] * out[j, p]
            out[i, j] = s / d
        for i in range(j):
            out[i, j] = 0.0
    return True


@njit(cache=True)
def _quad_logdet(chol, u, work):
    """(u' R^-1 u, log det R) from the Cholesky factor of R."""
    k = u.shape[0]
    q = 0.0
    ld = 0.0
    for i in range(k):
        s = u[i]
        for p in range(i):
            s -= chol[i, p] * work[p]
        work[i] = s / chol[i, i]
        q += work[i] * work[i]
        ld += 2.0 * math.log(chol[i, i])
    return q, ld


@njit(cache=True)
def filter_path(e, lam0, lam1, lam2, lam3, th1, th2, diagonal, rbar, m, dof,
                d2_init, r_init, ubuf, store, sig_out, r_out):
    """Run the variance / correlation recursion over ``e`` and return
    ``(nll, status, first_scored_row)``.

    Rows are scored once at least ``m`` standardized innovations precede them
    (counting ``ubuf``); before that R_t stays at ``r_init``.
    """
    T, k = e.shape
    nb = ubuf.shape[0]
    U = np.empty((nb + T, k))
    for v in range(nb):
        for i in range(k):
            U[v, i] = ubuf[v, i]
    d2 = d2_init.copy()
    r_prev = r_init.copy()
    r = r_init.copy()
    psi = np.empty((k, k))
    chol = np.zeros((k, k))
    work = np.empty(k)
    u = np.empty(k)
    const = (math.lgamma(0.5 * (dof + k)) - math.lgamma(0.5 * dof)
             - 0.5 * k * math.log(math.pi * (dof - 2.0)))
    nll = 0.0
    first = -1
    for t in range(T):
        if t > 0:
            variance_update(d2, e, t - 1, lam0, lam1, lam2, lam3)
        for i in range(k):
            if not (d2[i] > 0.0 and d2[i] <= SIGMA_MAX):
                return math.inf, VARIANCE_BLOWUP, first
        for i in range(k):
            u[i] = e[t, i] / math.sqrt(d2[i])
            U[nb + t, i] = u[i]
        scored = nb + t >= m
        if scored:
            psi_window(U, nb + t - m, nb + t, psi)
            corr_update(rbar, psi, r_prev, th1, th2, diagonal, r)
            if first < 0:
                first = t
        else:
            _copy(r_init, r)
        if not cholesky(r, chol):
            return math.inf, CORR_NOT_PD, first
        if scored:
            q, ld = _quad_logdet(chol, u, work)
            lds = 0.0
            for i in range(k):
                lds += math.log(d2[i])
            nll -= const - 0.5 * (dof + k) * math.log1p(q / (dof - 2.0)) - 0.5 * (lds + ld)
        if store:
            for i in range(k):
                sig_out[t, i] = d2[i]
                for j in range(k):
                    r_out[t, i, j] = r[i, j]
        _copy(r, r_prev)
    return nll, OK, first


@njit(cache=True)
def simulate_path(eps, lam0, lam1, lam2, lam3, th1, th2, diagonal, rbar, m,
                  d2_start, sig_out, r_out, e_out, u_out):
    """Generate innovations ``e_t = Sigma_t^{1/2} eps_t`` forward in time."""
    N, k = eps.shape
    d2 = d2_start.copy()
    r_prev = rbar.copy()
    r = rbar.copy()
    psi = np.empty((k, k))
    sigma = np.empty((k, k))
    for t in range(N):
        if t > 0:
            variance_update(d2, e_out, t - 1, lam0, lam1, lam2, lam3)
        for i in range(k):
            if not (d2[i] > 0.0 and d2[i] <= SIGMA_MAX):
                return VARIANCE_BLOWUP, t
        if t >= m:
            psi_window(u_out, t - m, t, psi)
            corr_update(rbar, psi, r_prev, th1, th2, diagonal, r)
        else:
            _copy(rbar, r)
        sd = np.sqrt(d2)
        for i in range(k):
            for j in range(k):
                sigma[i, j] = sd[i] * r[i, j] * sd[j]
        w, v = np.linalg.eigh(sigma)
        if w[0] <= 0.0:
            return CORR_NOT_PD, t
        root = (v * np.sqrt(w)) @ v.T
        for i in range(k):
            s = 0.0
            for j in range(k):
                s += 0.5 * (root[i, j] + root[j, i]) * eps[t, j]
            e_out[t, i] = s
            u_out[t, i] = s / math.sqrt(d2[i])
        for i in range(k):
            sig_out[t, i] = d2[i]
            for j in range(k):
                r_out[t, i, j] = r[i, j]
        _copy(r, r_prev)
    return OK, N
