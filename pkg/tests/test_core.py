import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from multikrum.core import (
    PointCloud,
    cross_identity_eval,
    pairwise_sqdist,
    subset_mean,
    subset_scatter,
)


def naive_mean(X, A):
    total = [0.0] * len(X[0])
    for i in A:
        for k, v in enumerate(X[i]):
            total[k] += v
    return [t / len(A) for t in total]


def naive_sqdist(x, y):
    return sum((a - b) ** 2 for a, b in zip(x, y))


def test_subset_mean_singleton():
    assert subset_mean([[2.0, 3.0]], [0]).tolist() == [2.0, 3.0]


def test_subset_mean_krum_construction(krum_even_cloud):
    # (n - 2) / (2 (n - f)) = 1/3 for n=4, f=1
    assert subset_mean(krum_even_cloud, [0, 1, 2])[0] == pytest.approx(1 / 3, rel=1e-12)


def test_subset_mean_matches_naive_loop(rng):
    X = rng.standard_normal((5, 3))
    np.testing.assert_allclose(subset_mean(X, range(5)), naive_mean(X, range(5)), rtol=1e-12)


def test_subset_scatter_constant_subset_is_exactly_zero():
    X = np.full((4, 2), 0.1)
    assert subset_scatter(X, [0, 1, 3]) == 0.0


def test_subset_scatter_krum_construction(krum_even_cloud):
    # (n-2)(n-2f+2) / (4 (n-f)^2) = 8/36
    assert subset_scatter(krum_even_cloud, [0, 1, 2]) == pytest.approx(2 / 9, rel=1e-12)


def test_subset_scatter_three_cluster():
    X = np.array([[-1.0]] * 2 + [[0.0]] * 3 + [[1.0]] * 2)
    # f (n - 2f) / (n - f)^2 = 6/25
    assert subset_scatter(X, range(5)) == pytest.approx(6 / 25, rel=1e-12)


@pytest.mark.parametrize("bad", [[], [0, 0], [5], [-1]])
def test_subset_validation(bad):
    with pytest.raises(ValueError):
        subset_mean(np.zeros((3, 1)), bad)


def test_pairwise_unit_distance():
    assert pairwise_sqdist([[0.0], [1.0]]).tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_pairwise_matches_per_pair_loop(rng):
    X = rng.standard_normal((6, 3))
    D = pairwise_sqdist(X)
    for i in range(6):
        assert D[i, i] == 0.0
        for j in range(6):
            assert D[i, j] == pytest.approx(naive_sqdist(X[i], X[j]), rel=1e-12)
            assert D[i, j] == D[j, i]


def test_cross_identity_trivial_cases():
    assert cross_identity_eval(np.ones((3, 2)), [0, 1], [0, 1]) == (0.0, 0.0)
    lhs, rhs = cross_identity_eval([[0.0], [1.0]], [0], [1])
    assert lhs == 1.0 and rhs == 1.0


def test_cross_identity_random_instances(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 31))
        d = int(rng.integers(1, 6))
        X = rng.standard_normal((n, d))
        A = np.sort(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
        B = np.sort(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
        brute = sum(naive_sqdist(X[i], X[j]) for i in A for j in B) / (len(A) * len(B))
        lhs, rhs = cross_identity_eval(X, A, B)
        assert abs(lhs - brute) <= 1e-9 * max(1.0, brute)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, lhs)


clouds = arrays(
    np.float64,
    st.tuples(st.integers(1, 12), st.integers(1, 4)),
    elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False),
)


@settings(max_examples=200, deadline=None)
@given(X=clouds, shift=st.floats(-5, 5), scale=st.floats(0.1, 10))
def test_scatter_properties(X, shift, scale):
    A = np.arange(X.shape[0])
    base = subset_scatter(X, A)
    diff = X[:, None, :] - X[None, :, :]
    pairwise = float((diff**2).sum()) / (2 * len(A) ** 2)
    assert base == pytest.approx(pairwise, rel=1e-9, abs=1e-9)
    assert subset_scatter(X + shift, A) == pytest.approx(base, rel=1e-9, abs=1e-9)
    assert subset_scatter(scale * X, A) == pytest.approx(scale**2 * base, rel=1e-9, abs=1e-9)


def test_point_cloud_json_round_trip(rng):
    cloud = PointCloud(rng.standard_normal((4, 2)))
    back = PointCloud.from_json(cloud.to_json())
    assert np.array_equal(back.points, cloud.points)
    assert (back.n, back.d) == (4, 2)


def test_point_cloud_is_read_only():
    cloud = PointCloud([[1.0, 2.0]])
    with pytest.raises(ValueError):
        cloud.points[0, 0] = 3.0


@pytest.mark.parametrize(
    "obj, message",
    [
        ({"n": 2, "d": 2, "points": [[1, 2], [3]]}, "row 1"),
        ({"n": 1, "d": 1, "points": [[float("nan")]]}, "non-finite"),
        ({"n": 3, "d": 1, "points": [[1], [2]]}, "'n'"),
        ({"n": 1, "d": 1}, "points"),
        ({"n": 1, "d": 1, "points": [["a"]]}, "not a number"),
    ],
)
def test_point_cloud_rejects_malformed(obj, message):
    with pytest.raises(ValueError, match=message):
        PointCloud.from_dict(json.loads(json.dumps(obj)))


def test_point_cloud_rejects_infinite_array():
    with pytest.raises(ValueError):
        PointCloud([[np.inf]])
