import numbers

import numpy as np

from .exceptions import DimensionError, ParameterError


def check_matrix(x, shape=None, name="x"):
    """Return `x` as a 2-D float64 array, optionally enforcing `shape`."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={x.ndim}")
    if shape is not None and x.shape != tuple(shape):
        raise DimensionError(f"{name} has shape {x.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or inf")
    return x


def check_vector(v, length=None, name="v"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or inf")
    return v


def check_scalar(value, name, *, lo=None, hi=None, lo_open=False, hi_open=False,
                 integer=False):
    """Validate a scalar hyperparameter against an interval.

    Raises
    ------
    ParameterError
        If `value` is not a real (or integral) number inside the interval.
    """
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(value, bool) or not isinstance(value, kind):
        raise ParameterError(f"{name} must be {'an integer' if integer else 'a real'}, "
                             f"got {value!r}")
    if not np.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ParameterError(f"{name}={value!r} below admissible range")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise ParameterError(f"{name}={value!r} above admissible range")
    return value


def check_sensing_array(mats):
    """Coerce a stack of sensing matrices to a C-contiguous (m, n1, n2) array."""
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if mats.ndim == 2:
        mats = mats[np.newaxis]
    if mats.ndim != 3:
        raise DimensionError(f"sensing matrices must have shape (m, n1, n2), got {mats.shape}")
    if min(mats.shape) < 1:
        raise DimensionError(f"sensing matrices must be non-empty, got {mats.shape}")
    if not np.all(np.isfinite(mats)):
        raise ValueError("sensing matrices contain NaN or inf")
    return mats
