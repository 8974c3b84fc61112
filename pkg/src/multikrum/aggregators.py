"""Krum, m-MultiKrum and baseline aggregation rules.

The score of a point ``x`` is the mean of its ``n - f`` smallest squared
distances to the cloud, the point itself included when ``x`` is a cloud point
(normalizer ``1/(n - f)``). The original Krum formulation excludes the point
and divides by ``n - f - 1``; both induce the same ordering of cloud points.

Ties are broken by smaller index, both when building neighbor sets and when
selecting the lowest scores. Score comparisons are exact.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from ._validation import check_byzantine, check_int, check_points, check_vector
from .core import _mean_of_rows, pairwise_sqdist

BASELINE_RULES = ("mean", "coordinate_median", "trimmed_mean", "geometric_median")


@dataclass(frozen=True)
class SelectionResult:
    selected: np.ndarray
    aggregate: np.ndarray
    scores: np.ndarray


def _smallest(values, k):
    # Stable argsort keeps equal values in index order.
    return np.argsort(values, kind="stable")[:k]


def neighbor_set(X, f, x):
    """Indices of the ``n - f`` cloud points closest to ``x``, sorted ascending."""
    X = check_points(X)
    n, d = X.shape
    f = check_byzantine(f, n)
    x = check_vector(x, d)
    diff = X - x
    dist = np.einsum("ij,ij->i", diff, diff)
    return np.sort(_smallest(dist, n - f))


def _score_from_distances(dist, k):
    return float(np.sort(dist)[:k].sum() / k)


def score(X, f, x):
    """Mean squared distance from ``x`` to its ``n - f`` nearest cloud points."""
    X = check_points(X)
    n, d = X.shape
    f = check_byzantine(f, n)
    x = check_vector(x, d)
    diff = X - x
    return _score_from_distances(np.einsum("ij,ij->i", diff, diff), n - f)


def score_all(X, f, sqdist=None):
    """Scores of every cloud point, from a single pairwise distance matrix."""
    X = check_points(X)
    n = X.shape[0]
    f = check_byzantine(f, n)
    if sqdist is None:
        sqdist = pairwise_sqdist(X)
    k = n - f
    return np.sort(sqdist, axis=1)[:, :k].sum(axis=1) / k


def select_smallest(scores, m):
    """The ``m`` indices with smallest scores (ties by index), sorted ascending."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    m = check_int(m, "m", 1, scores.shape[0])
    return np.sort(_smallest(scores, m))


def multikrum(X, f, m):
    """Average of the ``m`` points with smallest scores.

    Returns a :class:`SelectionResult` holding the selected indices, the
    aggregate and the full score vector. ``m = 1`` is Krum.
    """
    X = check_points(X)
    n = X.shape[0]
    f = check_byzantine(f, n)
    m = check_int(m, "m", 1, n)
    scores = score_all(X, f)
    selected = select_smallest(scores, m)
    return SelectionResult(selected, _mean_of_rows(X[selected]), scores)


def coordinate_median(X):
    return np.median(check_points(X), axis=0)


def trimmed_mean(X, f):
    """Per-coordinate mean after dropping the ``f`` smallest and ``f`` largest values."""
    X = check_points(X)
    n = X.shape[0]
    f = check_int(f, "f", 0)
    if n <= 2 * f:
        raise ValueError(f"trimmed mean needs n > 2f, got n={n}, f={f}")
    return np.sort(X, axis=0)[f : n - f].mean(axis=0)


def geometric_median(X, tol=1e-10, max_iter=1000):
    """Weiszfeld iteration started at the coordinate-wise median.

    Returns ``(median, n_iter, converged)``. Stops when the step norm drops to
    ``tol``, or when the iterate lands within ``tol`` of a data point, in which
    case that data point is returned.
    """
    X = check_points(X)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    max_iter = check_int(max_iter, "max_iter", 1)
    z = np.median(X, axis=0)
    for it in range(1, max_iter + 1):
        dist = np.linalg.norm(X - z, axis=1)
        hit = np.flatnonzero(dist <= tol)
        if hit.size:
            return X[hit[0]].copy(), it - 1, True
        w = 1.0 / dist
        z_new = w @ X / w.sum()
        step = np.linalg.norm(z_new - z)
        z = z_new
        if step <= tol:
            return z, it, True
    return z, max_iter, False


def baseline_aggregate(X, rule, f=0, tol=1e-10, max_iter=1000):
    """Evaluate one of the comparison rules in :data:`BASELINE_RULES`.

    Emits a :class:`~sklearn.exceptions.ConvergenceWarning` when the geometric
    median hits ``max_iter``.
    """
    if rule == "mean":
        return check_points(X).mean(axis=0)
    if rule == "coordinate_median":
        return coordinate_median(X)
    if rule == "trimmed_mean":
        return trimmed_mean(X, f)
    if rule == "geometric_median":
        z, n_iter, converged = geometric_median(X, tol=tol, max_iter=max_iter)
        if not converged:
            warnings.warn(
                f"Weiszfeld iteration did not converge in {n_iter} iterations",
                ConvergenceWarning,
            )
        return z
    raise ValueError(f"unknown rule {rule!r}; expected one of {BASELINE_RULES}")


class MultiKrum(BaseEstimator):
    """m-MultiKrum aggregation as an estimator.

    Parameters
    ----------
    f : int, default=0
        Declared number of Byzantine inputs.
    m : int, default=1
        Number of lowest-score inputs to average.

    Attributes
    ----------
    scores_ : ndarray of shape (n_samples,)
    selected_ : ndarray of shape (m,)
        Sorted indices of the averaged inputs.
    aggregate_ : ndarray of shape (n_features,)
    n_features_in_ : int
    """

    def __init__(self, f=0, m=1):
        self.f = f
        self.m = m

    def fit(self, X, y=None):
        X = check_points(X)
        result = multikrum(X, self.f, self.m)
        self.scores_ = result.scores
        self.selected_ = result.selected
        self.aggregate_ = result.aggregate
        self.n_features_in_ = X.shape[1]
        self._fit_X = X
        return self

    def aggregate(self, X):
        """Fit on ``X`` and return the aggregate."""
        return self.fit(X).aggregate_

    def score_samples(self, X):
        """Scores of arbitrary query points against the fitted cloud."""
        check_is_fitted(self, "aggregate_")
        X = check_points(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"was fitted with {self.n_features_in_}"
            )
        return np.array([score(self._fit_X, self.f, x) for x in X])


class Krum(MultiKrum):
    """Krum: the single input with smallest score."""

    def __init__(self, f=0):
        self.f = f

    @property
    def m(self):
        return 1


class _Baseline(BaseEstimator):
    def fit(self, X, y=None):
        X = check_points(X)
        self.aggregate_ = self._compute(X)
        self.n_features_in_ = X.shape[1]
        return self

    def aggregate(self, X):
        return self.fit(X).aggregate_


class Mean(_Baseline):
    def _compute(self, X):
        return X.mean(axis=0)


class CoordinateMedian(_Baseline):
    def _compute(self, X):
        return coordinate_median(X)


class TrimmedMean(_Baseline):
    """Coordinate-wise mean after trimming ``f`` values at each end."""

    def __init__(self, f=0):
        self.f = f

    def _compute(self, X):
        return trimmed_mean(X, self.f)


class GeometricMedian(_Baseline):
    """Weiszfeld geometric median; see :func:`geometric_median`.

    Attributes
    ----------
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, tol=1e-10, max_iter=1000):
        self.tol = tol
        self.max_iter = max_iter

    def _compute(self, X):
        z, self.n_iter_, self.converged_ = geometric_median(X, self.tol, self.max_iter)
        if not self.converged_:
            warnings.warn(
                f"Weiszfeld iteration did not converge in {self.n_iter_} iterations",
                ConvergenceWarning,
            )
        return z
