"""Point clouds, subset statistics and pairwise geometry.

Indices are 0-based throughout: a subset of a cloud with ``n`` points is a
sorted integer array with entries in ``range(n)``.
"""

import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_points, check_subset


@dataclass(frozen=True)
class PointCloud:
    """``n`` points in ``d`` dimensions, stored row-wise and read-only."""

    points: np.ndarray

    def __post_init__(self):
        points = check_points(self.points, name="points").copy()
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def to_dict(self):
        return {"n": self.n, "d": self.d, "points": self.points.tolist()}

    @classmethod
    def from_dict(cls, obj):
        """Build a cloud from ``{"n", "d", "points"}``, rejecting ragged or non-finite rows."""
        if not isinstance(obj, dict):
            raise ValueError("point cloud must be a JSON object")
        for key in ("n", "d", "points"):
            if key not in obj:
                raise ValueError(f"missing field {key!r}")
        rows = obj["points"]
        if not isinstance(rows, list) or not rows:
            raise ValueError("field 'points' must be a nonempty list of rows")
        for i, row in enumerate(rows):
            if not isinstance(row, list):
                raise ValueError(f"field 'points', row {i}: expected a list")
            if len(row) != obj["d"]:
                raise ValueError(
                    f"field 'points', row {i}: length {len(row)} != d={obj['d']}"
                )
            for j, v in enumerate(row):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ValueError(f"field 'points', row {i}, column {j}: not a number")
                if not np.isfinite(v):
                    raise ValueError(f"field 'points', row {i}, column {j}: non-finite value")
        if len(rows) != obj["n"]:
            raise ValueError(f"field 'n'={obj['n']} but {len(rows)} rows given")
        return cls(np.array(rows, dtype=np.float64))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _rows(X, A):
    X = check_points(X)
    A = check_subset(A, X.shape[0], name="A")
    return X[A]


def _mean_of_rows(rows):
    # Identical rows return the row itself so that degenerate subsets have exactly zero scatter.
    if np.all(rows == rows[0]):
        return rows[0].copy()
    return rows.mean(axis=0)


def _scatter_of_rows(rows):
    if np.all(rows == rows[0]):
        return 0.0
    centered = rows - rows.mean(axis=0)
    return float(np.einsum("ij,ij->", centered, centered) / rows.shape[0])


def subset_mean(X, A):
    """Mean of the rows of ``X`` indexed by ``A``."""
    return _mean_of_rows(_rows(X, A))


def subset_scatter(X, A):
    """Mean squared deviation of the rows indexed by ``A`` from their mean.

    Zero exactly when all selected rows coincide.
    """
    return _scatter_of_rows(_rows(X, A))


def pairwise_sqdist(X):
    """Full matrix of squared Euclidean distances between the rows of ``X``.

    Computed from explicit differences (not the Gram expansion), so the result
    is exactly symmetric with an exactly zero diagonal.
    """
    X = check_points(X)
    diff = X[:, None, :] - X[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def cross_identity_eval(X, A, B):
    """Both sides of the cross-sum identity for subsets ``A`` and ``B``.

    Returns ``(lhs, rhs)`` with ``lhs`` the mean squared distance over all
    pairs in ``A x B`` and ``rhs = |mean_A - mean_B|^2 + scatter_A + scatter_B``.
    """
    X = check_points(X)
    rows_a = X[check_subset(A, X.shape[0], name="A")]
    rows_b = X[check_subset(B, X.shape[0], name="B")]
    diff = rows_a[:, None, :] - rows_b[None, :, :]
    lhs = float(np.einsum("ijk,ijk->", diff, diff) / (rows_a.shape[0] * rows_b.shape[0]))
    gap = _mean_of_rows(rows_a) - _mean_of_rows(rows_b)
    rhs = float(gap @ gap) + _scatter_of_rows(rows_a) + _scatter_of_rows(rows_b)
    return lhs, rhs
