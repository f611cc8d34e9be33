"""Input validation helpers used by the estimator classes."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


def as_float_1d(x, name: str, *, allow_empty: bool = False, require_finite: bool = True) -> np.ndarray:
    """Coerce ``x`` to a 1-D float64 array, validating shape and finiteness."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if require_finite and arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_2d(x, name: str, *, min_rows: int = 1, n_cols: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a 2-D float64 array, validating shape and finiteness."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if n_cols is not None and arr.shape[1] != n_cols:
        raise ValueError(f"{name} must have {n_cols} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_fitted(estimator, attributes: tuple[str, ...]) -> None:
    """Raise ``NotFittedError`` unless every attribute in ``attributes`` is set."""
    missing = [a for a in attributes if getattr(estimator, a, None) is None]
    if missing:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() before using it"
        )
