"""Input validation helpers shared by the estimators and free functions."""

import numbers

import numpy as np
from sklearn.utils import check_array


def check_points(X, name="X"):
    """Return ``X`` as a finite float64 array of shape (n, d).

    Accepts anything :func:`sklearn.utils.check_array` accepts, plus objects
    exposing a ``points`` attribute (e.g. :class:`~multikrum.core.PointCloud`).
    """
    points = getattr(X, "points", X)
    return check_array(
        points,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_min_samples=1,
        ensure_min_features=1,
        input_name=name,
    )


def check_vector(x, d, name="x"):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != d:
        raise ValueError(f"{name} has dimension {x.shape[0]}, expected {d}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def check_int(value, name, low=None, high=None):
    """Validate an integer in the closed range [low, high]."""
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if low is not None and value < low:
        raise ValueError(f"{name}={value} must be >= {low}")
    if high is not None and value > high:
        raise ValueError(f"{name}={value} must be <= {high}")
    return value


def check_subset(indices, n, size=None, name="subset"):
    """Return a sorted, duplicate-free int array of 0-based indices into ``range(n)``."""
    idx = np.asarray(indices)
    if idx.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if idx.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.issubdtype(idx.dtype, np.integer):
        raise TypeError(f"{name} must contain integers")
    idx = np.sort(idx.astype(np.intp))
    if idx[0] < 0 or idx[-1] >= n:
        raise ValueError(f"{name} has indices outside [0, {n - 1}]")
    if np.any(np.diff(idx) == 0):
        raise ValueError(f"{name} has duplicate indices")
    if size is not None and idx.size != size:
        raise ValueError(f"{name} has size {idx.size}, expected {size}")
    return idx


def check_byzantine(f, n):
    """``f`` must leave nonempty neighbor sets: 0 <= f <= n - 1."""
    return check_int(f, "f", 0, n - 1)


def check_problem_size(n, f):
    """Bound formulas need n - 2f >= 1 and f >= 0."""
    n = check_int(n, "n", 1)
    f = check_int(f, "f", 0)
    if n - 2 * f < 1:
        raise ValueError(f"bounds require n - 2f >= 1, got n={n}, f={f}")
    return n, f
