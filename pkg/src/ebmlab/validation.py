"""Input validation helpers shared by the estimators and the command line."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import InvalidParameters
from .maps import Params


def check_points(X) -> np.ndarray:
    """Finite float array of shape ``(n, 2)``."""
    try:
        X = check_array(X, dtype=np.float64, ensure_all_finite=True, copy=False)
    except ValueError as exc:
        raise InvalidParameters(str(exc)) from None
    if X.shape[1] != 2:
        raise InvalidParameters(f"expected points with 2 columns, got {X.shape[1]}")
    return np.ascontiguousarray(X)


def check_params(a, b) -> Params:
    try:
        return Params(float(a), float(b))
    except (TypeError, ValueError) as exc:
        raise InvalidParameters(str(exc)) from None


def check_count(name: str, value, minimum: int = 1) -> int:
    if int(value) != value or int(value) < minimum:
        raise InvalidParameters(f"{name} must be an integer >= {minimum}")
    return int(value)
