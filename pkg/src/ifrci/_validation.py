"""Input validation helpers used by the data types, estimators and CLI."""

import math
import numbers

import numpy as np

from .exceptions import DomainError


def check_count(value, name, minimum=0):
    """Return ``value`` as a Python int, raising DomainError if it is not an integer >= minimum.

    ``minimum=None`` accepts any integer.
    """
    if isinstance(value, (bool, np.bool_)):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, numbers.Integral):
        out = int(value)
    elif isinstance(value, numbers.Real) and float(value).is_integer():
        out = int(value)
    else:
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and out < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {out}")
    return out


def check_probability(value, name, open_left=False, open_right=False):
    """Return ``value`` as a float in [0, 1] (optionally open at either end)."""
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    out = float(value)
    if math.isnan(out):
        raise DomainError(f"{name} must not be NaN")
    lo_ok = out > 0 if open_left else out >= 0
    hi_ok = out < 1 if open_right else out <= 1
    if not (lo_ok and hi_ok):
        left = "(" if open_left else "["
        right = ")" if open_right else "]"
        raise DomainError(f"{name} must lie in {left}0, 1{right}, got {out}")
    return out


def check_positive_real(value, name):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    out = float(value)
    if not (out > 0 and math.isfinite(out)):
        raise DomainError(f"{name} must be a finite positive number, got {out}")
    return out


def check_counts_array(X):
    """Coerce ``X`` to a 2-D integer array of study counts with 4 columns.

    Accepts a single study (length-4 sequence) or a batch of shape (m, 4).
    Columns are (n_total, n_sample, n_positive, n_deaths).
    """
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise DomainError(
            "expected study counts with 4 columns "
            f"(n_total, n_sample, n_positive, n_deaths), got shape {np.shape(X)}"
        )
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or not np.all(arr == np.round(arr)):
            raise DomainError("study counts must be integers")
    elif arr.dtype.kind not in "iu":
        raise DomainError(f"study counts must be numeric, got dtype {arr.dtype}")
    return arr.astype(np.int64)
