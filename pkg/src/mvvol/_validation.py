"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import InputError


def check_panel(X, min_rows=1):
    """Return ``X`` as a finite float64 T x k array.

    Accepts ``ReturnPanel`` objects, DataFrames and array-likes; a 1-d input
    is treated as a single column.
    """
    if hasattr(X, "values") and hasattr(X, "assets"):
        X = X.values
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    try:
        X = check_array(X, dtype=np.float64, ensure_min_samples=min_rows,
                        ensure_all_finite=True, copy=False)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return X


def check_seed(seed):
    """Accept ``None``, an int, a ``SeedSequence`` or a ``Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
