"""Shared generators for the test suite."""

import numpy as np

from mvvol import ModelParams


def random_correlation(k, rng, spread=0.6):
    """Random well-conditioned correlation matrix."""
    a = rng.standard_normal((k, k + 3))
    c = a @ a.T + spread * k * np.eye(k)
    d = np.sqrt(np.diag(c))
    r = c / np.outer(d, d)
    np.fill_diagonal(r, 1.0)
    return r


def random_params(k, rng, leverage=False, m=None):
    """Valid parameters away from the boundary."""
    lam1 = rng.uniform(0.6, 0.85, k)
    lam2 = rng.uniform(0.02, 0.08, k)
    lam3 = rng.uniform(0.0, 0.05, k) if leverage else None
    th1 = rng.uniform(0.01, 0.08)
    th2 = rng.uniform(0.5, 0.9)
    return ModelParams(lambda0=rng.uniform(0.02, 0.2, k), lambda1=lam1, lambda2=lam2,
                       lambda3=lam3, theta1=th1, theta2=th2, dof=rng.uniform(5, 12),
                       rbar=random_correlation(k, rng), m=m)
