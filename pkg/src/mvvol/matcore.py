"""Dense symmetric-matrix primitives.

Matrices are plain ``numpy.ndarray`` objects.  ``as_symmetric`` and
``check_correlation`` validate the symmetric / correlation contracts at the
boundaries where user input enters.
"""

import numpy as np

from .exceptions import (
    DegenerateColumn,
    InputError,
    NonPositiveDiagonal,
    NotPositiveDefinite,
)

PD_TOL = 1e-10
_ROOT_TOL = 1e-12


def as_symmetric(a, atol=1e-12):
    """Return ``a`` as a float array with exactly symmetric storage.

    Asymmetry larger than ``atol`` (relative to the largest entry) is an
    error; smaller asymmetry is averaged away.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if np.max(np.abs(a - a.T), initial=0.0) > atol * scale:
        raise InputError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def check_correlation(r, pd_tol=PD_TOL):
    """Validate a correlation matrix and return it as a symmetric array."""
    r = as_symmetric(r)
    if np.max(np.abs(np.diag(r) - 1.0), initial=0.0) >= 1e-12:
        raise InputError("correlation matrix must have a unit diagonal")
    if np.any(np.abs(r) > 1.0 + 1e-12):
        raise InputError("correlation entries must lie in [-1, 1]")
    if r.shape[0] and np.linalg.eigvalsh(r)[0] < -pd_tol:
        raise InputError("correlation matrix has a negative eigenvalue")
    return r


def _eigh_checked(a):
    a = as_symmetric(a)
    w, v = np.linalg.eigh(a)
    if w[-1] <= 0 or w[0] <= _ROOT_TOL * w[-1]:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (eigenvalues {w[0]:.3g} .. {w[-1]:.3g})"
        )
    return w, v


def sym_sqrt(a):
    """Symmetric square root ``S`` of a positive definite ``a`` (``S @ S == a``).

    Uses the symmetric eigendecomposition; a Cholesky factor is a square root
    too but not a symmetric one.
    """
    w, v = _eigh_checked(a)
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def sym_inv_sqrt(a, ridge=0.0):
    """Symmetric inverse square root of ``a``.

    Parameters
    ----------
    a : array_like, shape (k, k)
        Positive definite matrix.
    ridge : float, default 0
        If positive, ``ridge * I`` is added before factorizing.  Off by
        default: near-singular input raises instead of being regularized.
    """
    a = as_symmetric(a)
    if ridge:
        a = a + ridge * np.eye(a.shape[0])
    w, v = _eigh_checked(a)
    s = (v / np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def is_positive_definite(a, tol=PD_TOL):
    """True iff the smallest eigenvalue exceeds ``tol * max(1, largest)``."""
    a = np.asarray(a, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (a + a.T))
    return bool(w[0] > tol * max(1.0, w[-1]))


def normalize_to_correlation(q):
    """Scale a symmetric matrix to unit diagonal: ``q_ij / sqrt(q_ii q_jj)``."""
    q = as_symmetric(q)
    d = np.diag(q)
    if np.any(d <= 0):
        raise NonPositiveDiagonal("all diagonal entries must be strictly positive")
    s = np.sqrt(d)
    r = q / np.outer(s, s)
    np.fill_diagonal(r, 1.0)
    return r


def sample_correlation(x):
    """Pearson correlation of the columns of ``x`` (divisor ``T - 1``)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise DegenerateColumn("need at least two rows")
    xc = x - x.mean(axis=0)
    c = xc.T @ xc / (x.shape[0] - 1)
    d = np.diag(c)
    if np.any(d <= 0):
        bad = np.flatnonzero(d <= 0).tolist()
        raise DegenerateColumn(f"columns {bad} have zero sample variance")
    r = c / np.sqrt(np.outer(d, d))
    r = np.clip(0.5 * (r + r.T), -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r
