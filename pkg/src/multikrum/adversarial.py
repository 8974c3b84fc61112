"""Robustness ratios, worst-case configurations and empirical lower bounds.

The ratio of a configuration ``(X, S)`` is ``|F(X) - mean_S|^2 / scatter_S``
with ``F`` the m-MultiKrum aggregate and ``S`` an honest set of size ``n - f``.
``0/0`` is ``-inf``; a positive numerator over a zero denominator is ``+inf``.
The supremum of this ratio over all configurations is the robustness
coefficient, so any evaluated configuration certifies a lower bound.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import bounds
from ._validation import check_byzantine, check_int, check_points, check_subset
from .aggregators import neighbor_set, score, score_all, select_smallest
from .core import (
    PointCloud,
    _mean_of_rows,
    _scatter_of_rows,
    cross_identity_eval,
    pairwise_sqdist,
    subset_scatter,
)
from .exceptions import EnumerationTooLargeError, TheoryViolationError

MAX_ENUMERATION = 10**6
SOUNDNESS_SLACK = 1e-9


@dataclass(frozen=True)
class RatioResult:
    numerator: float
    denominator: float
    ratio: float


def _ratio_value(numerator, denominator):
    if denominator > 0:
        return numerator / denominator
    return -math.inf if numerator == 0 else math.inf


def _aggregate(X, f, m):
    n = X.shape[0]
    diff = X[:, None, :] - X[None, :, :]
    sqdist = np.einsum("ijk,ijk->ij", diff, diff)
    k = n - f
    scores = np.sort(sqdist, axis=1)[:, :k].sum(axis=1) / k
    selected = np.sort(np.argsort(scores, kind="stable")[:m])
    return _mean_of_rows(X[selected])


def _ratio_against(aggregate, honest_rows):
    gap = aggregate - _mean_of_rows(honest_rows)
    numerator = float(gap @ gap)
    denominator = _scatter_of_rows(honest_rows)
    return RatioResult(numerator, denominator, _ratio_value(numerator, denominator))


def _fast_ratio(X, f, m, honest):
    # Unvalidated path shared by kappa_ratio and the search loop, so replays are bit-exact.
    return _ratio_against(_aggregate(X, f, m), X[honest])


def kappa_ratio(X, f, m, honest):
    """Robustness ratio of m-MultiKrum on ``X`` against the honest set ``honest``."""
    X = check_points(X)
    n = X.shape[0]
    f = check_byzantine(f, n)
    m = check_int(m, "m", 1, n)
    honest = check_subset(honest, n, size=n - f, name="honest")
    return _fast_ratio(X, f, m, honest)


def kappa_ratio_sup_S(X, f, m):
    """Maximize the ratio over every honest set of size ``n - f``.

    Returns ``(best_S, ratio)``; ties go to the lexicographically first set.
    """
    X = check_points(X)
    n = X.shape[0]
    f = check_byzantine(f, n)
    m = check_int(m, "m", 1, n)
    if math.comb(n, f) > MAX_ENUMERATION:
        raise EnumerationTooLargeError(
            f"C({n}, {f}) = {math.comb(n, f)} honest sets exceeds {MAX_ENUMERATION}; "
            "evaluate kappa_ratio at a fixed honest set instead"
        )
    aggregate = _aggregate(X, f, m)
    best_S, best = None, -math.inf
    for S in itertools.combinations(range(n), n - f):
        S = np.array(S, dtype=np.intp)
        r = _ratio_against(aggregate, X[S]).ratio
        if best_S is None or r > best:
            best_S, best = S, r
    return best_S, best


@dataclass(frozen=True)
class Scenario:
    """A configuration together with the honest set it is scored against."""

    cloud: PointCloud
    honest: np.ndarray
    f: int
    m: int
    name: str = ""
    epsilon: float = 0.0

    def __post_init__(self):
        if not isinstance(self.cloud, PointCloud):
            object.__setattr__(self, "cloud", PointCloud(self.cloud))
        n = self.cloud.n
        check_byzantine(self.f, n)
        check_int(self.m, "m", 1, n)
        honest = check_subset(self.honest, n, size=n - self.f, name="honest")
        honest.setflags(write=False)
        object.__setattr__(self, "honest", honest)
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    @property
    def n(self):
        return self.cloud.n

    def ratio(self):
        return kappa_ratio(self.cloud.points, self.f, self.m, self.honest)

    def with_m(self, m):
        return Scenario(self.cloud, self.honest, self.f, m, self.name, self.epsilon)

    def to_dict(self):
        return {
            "name": self.name,
            "epsilon": self.epsilon,
            "n": self.n,
            "f": self.f,
            "m": self.m,
            "honest": self.honest.tolist(),
            "points": self.cloud.points.tolist(),
        }

    @classmethod
    def from_dict(cls, obj):
        for key in ("name", "epsilon", "n", "f", "m", "honest", "points"):
            if key not in obj:
                raise ValueError(f"scenario is missing field {key!r}")
        d = len(obj["points"][0]) if obj["points"] else 0
        cloud = PointCloud.from_dict({"n": obj["n"], "d": d, "points": obj["points"]})
        return cls(
            cloud,
            np.asarray(obj["honest"], dtype=np.intp),
            int(obj["f"]),
            int(obj["m"]),
            str(obj["name"]),
            float(obj["epsilon"]),
        )


def _embed(values, d):
    points = np.zeros((len(values), d))
    points[:, 0] = values
    return points


def scenario_krum(n, f, d=1):
    """Two-cluster configuration on which Krum is biased.

    ``n//2 - 1`` points at ``e`` when ``n`` is even, ``(n-1)//2`` when odd, the
    rest at the origin; honest set = the first ``n - f`` indices.
    """
    n, f = bounds.check_problem_size(n, f)
    if n < 3:
        raise ValueError(f"scenario_krum needs n >= 3, got n={n}")
    ones = n // 2 - 1 if n % 2 == 0 else (n - 1) // 2
    values = [1.0] * ones + [0.0] * (n - ones)
    return Scenario(PointCloud(_embed(values, d)), np.arange(n - f), f, 1, "krum", 0.0)


def scenario_three_cluster(n, f, epsilon=1e-6, m=None, d=1):
    """``f`` points at ``-e``, ``n - 2f`` at ``0``, ``f`` at ``(1 - epsilon) e``.

    Honest set = the first ``n - f`` indices; ``m`` defaults to ``n - f``.
    """
    n, f = bounds.check_problem_size(n, f)
    if f < 1 or n <= 3 * f:
        raise ValueError(f"three-cluster configuration needs n > 3f >= 3, got n={n}, f={f}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    values = [-1.0] * f + [0.0] * (n - 2 * f) + [1.0 - epsilon] * f
    m = n - f if m is None else m
    return Scenario(
        PointCloud(_embed(values, d)), np.arange(n - f), f, m, "three_cluster", float(epsilon)
    )


@dataclass(frozen=True)
class SearchConfig:
    n: int
    f: int
    m: int
    d: int = 1
    restarts: int = 64
    iterations: int = 500
    step: float = 0.1
    seed: int = 0
    clip: float = 10.0
    epsilon: float = 1e-8

    def __post_init__(self):
        n, f = bounds.check_problem_size(self.n, self.f)
        check_int(self.m, "m", 1, n - f)
        check_int(self.d, "d", 1)
        check_int(self.restarts, "restarts", 1)
        check_int(self.iterations, "iterations", 1)
        check_int(self.seed, "seed", 0, 2**64 - 1)
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not self.clip > 0:
            raise ValueError(f"clip must be positive, got {self.clip}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def layouts(self):
        pool = []
        if self.n >= 3:
            pool.append("krum")
        if self.f >= 1 and self.n > 3 * self.f:
            pool.append("three_cluster")
        pool.append("gaussian")
        return pool


@dataclass(frozen=True)
class SearchResult:
    best_ratio: float
    best_scenario: Scenario
    upper_bound: float
    restart_of_best: int
    evaluations: int
    seed: int
    restart_ratios: tuple = field(default=(), repr=False)

    def to_dict(self):
        return {
            "scenario": self.best_scenario.to_dict(),
            "seed": self.seed,
            "best_ratio": self.best_ratio,
            "upper_bound": self.upper_bound,
            "restart_of_best": self.restart_of_best,
            "evaluations": self.evaluations,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            best_ratio=float(obj["best_ratio"]),
            best_scenario=Scenario.from_dict(obj["scenario"]),
            upper_bound=float(obj["upper_bound"]),
            restart_of_best=int(obj["restart_of_best"]),
            evaluations=int(obj["evaluations"]),
            seed=int(obj["seed"]),
        )


def _initial_cloud(config, layout, rng, repeat):
    n, f, d = config.n, config.f, config.d
    if layout == "krum":
        X = scenario_krum(n, f, d).cloud.points.copy()
    elif layout == "three_cluster":
        X = scenario_three_cluster(n, f, config.epsilon, d=d).cloud.points.copy()
    else:
        honest = rng.standard_normal((n - f, d))
        weights = rng.dirichlet(np.ones(n - f), size=f)
        byzantine = weights @ honest + 0.1 * rng.standard_normal((f, d))
        return np.vstack([honest, byzantine])
    if repeat:
        # Later visits to a fixed layout jitter it so restarts explore different basins.
        X += 0.05 * rng.standard_normal(X.shape)
    return X


def _run_restart(config, restart):
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(restart,)))
    pool = config.layouts()
    layout = pool[restart % len(pool)]
    X = _initial_cloud(config, layout, rng, repeat=restart >= len(pool))
    n, f, m = config.n, config.f, config.m
    honest = np.arange(n - f)

    center = X[honest].mean(axis=0)
    diameter = math.sqrt(pairwise_sqdist(X[honest]).max()) or 1.0
    radius = config.clip * diameter

    def clip(B):
        offset = B - center
        norms = np.linalg.norm(offset, axis=1)
        scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
        return center + offset * scale[:, None]

    if f:
        X[n - f :] = clip(X[n - f :])
    best = _fast_ratio(X, f, m, honest).ratio
    evaluations = 1
    step = config.step
    if f:
        for _ in range(config.iterations):
            candidate = X.copy()
            candidate[n - f :] = clip(
                X[n - f :] + step * diameter * rng.standard_normal((f, config.d))
            )
            r = _fast_ratio(candidate, f, m, honest).ratio
            evaluations += 1
            if r > best:
                X, best = candidate, r
                step *= 1.5
            else:
                step *= 0.7
                if step < 1e-9:
                    step = config.step
    return best, X, layout, evaluations


def search_lower_bound(config, n_jobs=1):
    """Hill-climb over Byzantine positions to find a large robustness ratio.

    Each restart draws its own random stream from ``(seed, restart)``, so the
    result does not depend on ``n_jobs``. Raises
    :class:`~multikrum.exceptions.TheoryViolationError` if the best ratio
    exceeds the proven upper bound.
    """
    runs = Parallel(n_jobs=n_jobs)(
        delayed(_run_restart)(config, r) for r in range(config.restarts)
    )
    best_index = 0
    for i, run in enumerate(runs):
        if run[0] > runs[best_index][0]:
            best_index = i
    ratio, X, layout, _ = runs[best_index]
    epsilon = config.epsilon if layout == "three_cluster" else 0.0
    scenario = Scenario(
        PointCloud(X), np.arange(config.n - config.f), config.f, config.m,
        f"search:{layout}", epsilon,
    )
    upper = bounds.multikrum_upper(config.n, config.f, config.m)
    result = SearchResult(
        best_ratio=ratio,
        best_scenario=scenario,
        upper_bound=upper,
        restart_of_best=best_index,
        evaluations=sum(run[3] for run in runs),
        seed=config.seed,
        restart_ratios=tuple(run[0] for run in runs),
    )
    if ratio > upper + SOUNDNESS_SLACK:
        raise TheoryViolationError(
            f"ratio {ratio!r} exceeds upper bound {upper!r} for "
            f"(n, f, m) = ({config.n}, {config.f}, {config.m})",
            result,
        )
    return result


ALPHA_GRID = (0.1, 0.5, 1.0, 2.0, 10.0)
LEMMA_CHECKS = (
    "cross_sum_identity",
    "selected_score_average",
    "distance_to_honest_mean",
    "young_inequality",
    "jensen_inequality",
)


@dataclass
class LemmaReport:
    trials: int
    passed: dict = field(default_factory=lambda: dict.fromkeys(LEMMA_CHECKS, 0))
    failures: dict = field(default_factory=lambda: {k: [] for k in LEMMA_CHECKS})

    @property
    def ok(self):
        return all(self.passed[k] == self.trials for k in LEMMA_CHECKS)

    def suites_passed(self):
        return sum(self.passed[k] == self.trials for k in LEMMA_CHECKS)

    def lines(self):
        for k in LEMMA_CHECKS:
            status = "PASS" if self.passed[k] == self.trials else "FAIL"
            yield f"{status} {k}: {self.passed[k]}/{self.trials}"
            for failure in self.failures[k][:3]:
                yield f"    counterexample: {failure}"


def _rel_close(a, b, rtol=1e-9):
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def _random_subset(rng, n, size=None):
    size = int(rng.integers(1, n + 1)) if size is None else size
    return np.sort(rng.choice(n, size=size, replace=False))


def _check_cross_sum(X, rng):
    n = X.shape[0]
    A, B = _random_subset(rng, n), _random_subset(rng, n)
    lhs, rhs = cross_identity_eval(X, A, B)
    rows = X[A]
    diff = rows[:, None, :] - rows[None, :, :]
    pairwise = float(np.einsum("ijk,ijk->", diff, diff)) / (2 * len(A) ** 2)
    ok = _rel_close(lhs, rhs) and _rel_close(subset_scatter(X, A), pairwise)
    return ok, {"A": A.tolist(), "B": B.tolist(), "lhs": lhs, "rhs": rhs}


def _check_selected_scores(X, f, m, S):
    scores = score_all(X, f)
    selected = select_smallest(scores, m)
    lhs = float(scores[selected].mean())
    rhs = 2.0 * subset_scatter(X, S)
    return lhs <= rhs + 1e-12, {"f": f, "m": m, "lhs": lhs, "rhs": rhs}


def _check_distance_to_mean(X, f, S, queries):
    n = X.shape[0]
    scatter = subset_scatter(X, S)
    center = X[S].mean(axis=0)
    factor = (n - f) / (n - 2 * f)
    for x in queries:
        gap = x - center
        lhs = float(gap @ gap)
        s = score(X, f, x)
        if len(np.intersect1d(S, neighbor_set(X, f, x))) < n - 2 * f:
            return False, {"f": f, "x": x.tolist(), "reason": "intersection too small"}
        alphas = list(ALPHA_GRID)
        if s > 0 and scatter > 0:
            alphas.append(math.sqrt(s / scatter))
        for alpha in alphas:
            rhs = factor * ((1 + alpha) * s + (1 + 1 / alpha) * scatter)
            if lhs > rhs + 1e-12:
                return False, {"f": f, "x": x.tolist(), "alpha": alpha, "lhs": lhs, "rhs": rhs}
    return True, None


def _check_young(rng, d):
    x, y = rng.standard_normal(d), rng.standard_normal(d)
    alpha = float(10 ** rng.uniform(-3, 3))
    lhs = float((x + y) @ (x + y))
    rhs = (1 + alpha) * float(x @ x) + (1 + 1 / alpha) * float(y @ y)
    return lhs <= rhs + 1e-12, {"alpha": alpha, "lhs": lhs, "rhs": rhs}


def _check_jensen(rng, d):
    p = int(rng.integers(1, 11))
    points = rng.standard_normal((p, d))
    weights = rng.uniform(0.01, 1.0, size=p)
    avg = weights @ points / weights.sum()
    lhs = float(avg @ avg)
    rhs = float(weights @ np.einsum("ij,ij->i", points, points) / weights.sum())
    return lhs <= rhs + 1e-12, {"p": p, "lhs": lhs, "rhs": rhs}


def verify_lemmas(trials=1000, seed=7, max_n=30, max_d=5):
    """Check the geometric identities and inequalities behind the upper bound.

    Every trial draws a Gaussian cloud with ``3 <= n <= max_n`` (occasionally
    rounded to create ties, or made constant), ``0 <= f < n/2``,
    ``1 <= m <= n - f`` and a random honest set, and runs each check once.
    Failures are recorded with their counterexample, never raised.
    """
    check_int(trials, "trials", 1)
    max_n = check_int(max_n, "max_n", 3)
    max_d = check_int(max_d, "max_d", 1)
    rng = np.random.default_rng(seed)
    report = LemmaReport(trials)
    for t in range(trials):
        n = int(rng.integers(3, max_n + 1))
        d = int(rng.integers(1, max_d + 1))
        f = int(rng.integers(0, (n - 1) // 2 + 1))
        m = int(rng.integers(1, n - f + 1))
        X = rng.standard_normal((n, d)) * float(10 ** rng.uniform(-2, 2))
        if t % 50 == 0:
            X = np.tile(X[0], (n, 1))
        elif t % 5 == 0:
            X = np.round(X)
        S = _random_subset(rng, n, n - f)
        queries = list(X) + [rng.standard_normal(d) * 2.0 for _ in range(3)]

        results = {
            "cross_sum_identity": _check_cross_sum(X, rng),
            "selected_score_average": _check_selected_scores(X, f, m, S),
            "distance_to_honest_mean": _check_distance_to_mean(X, f, S, queries),
            "young_inequality": _check_young(rng, d),
            "jensen_inequality": _check_jensen(rng, d),
        }
        for name, (ok, detail) in results.items():
            if ok:
                report.passed[name] += 1
            else:
                report.failures[name].append({"trial": t, "n": n, "d": d, **(detail or {})})
    return report


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def check_krum_constructions(max_n=60):
    """Krum ratio of :func:`scenario_krum` against its closed form, all valid (n, f)."""
    worst = None
    for n in range(3, max_n + 1):
        for f in range(1, (n - 1) // 2 + 1):
            got = scenario_krum(n, f).ratio().ratio
            want = bounds.krum_lower(n, f)
            err = abs(got - want) / want
            if worst is None or err > worst[0]:
                worst = (err, n, f, got, want)
    err, n, f, got, want = worst
    return Check(
        f"krum construction n<={max_n}", err <= 1e-12,
        f"worst relative error {err:.2e} at (n={n}, f={f}): {got!r} vs {want!r}",
    )


def check_three_cluster_constructions(max_n=60, epsilon=1e-8):
    """(n-f)-MultiKrum ratio of :func:`scenario_three_cluster` against ``4f/(n-2f)``."""
    worst = None
    for n in range(4, max_n + 1):
        for f in range(1, (n - 1) // 3 + 1):
            got = scenario_three_cluster(n, f, epsilon).ratio().ratio
            want = bounds.nf_multikrum_lower(n, f)
            err = abs(got - want) / want
            if worst is None or err > worst[0]:
                worst = (err, n, f, got, want)
    err, n, f, got, want = worst
    return Check(
        f"three-cluster construction n<={max_n}, eps={epsilon:g}", err <= 1e-6,
        f"worst relative error {err:.2e} at (n={n}, f={f}): {got!r} vs {want!r}",
    )


def check_spot_constructions():
    checks = []
    r = scenario_three_cluster(7, 2, 1e-8).ratio().ratio
    checks.append(Check(
        "three-cluster (7, 2) vs 4f/(n-2f) = 8/3", abs(r - 8 / 3) <= 1e-6 * 8 / 3,
        f"ratio {r!r}",
    ))
    r = scenario_krum(100, 10).ratio().ratio
    checks.append(Check(
        "krum construction (100, 10) vs 98/82", abs(r - 98 / 82) <= 1e-12 * 98 / 82,
        f"ratio {r!r}",
    ))
    return checks


def check_bound_ordering(max_n=200):
    """Every lower bound sits below every applicable upper bound on the grid."""
    for n in range(5, max_n + 1):
        for f in range(1, (n - 1) // 2 + 1):
            report = bounds.summary_table(n, f)
            upper = report.upper
            if np.any(np.diff(upper) > 0):
                return Check("bound ordering", False, f"upper bound increases at (n={n}, f={f})")
            if report.universal_lower > upper.min():
                return Check("bound ordering", False, f"universal lower too large at ({n}, {f})")
            if report.krum_lower > upper[0]:
                return Check("bound ordering", False, f"krum lower > upper at ({n}, {f})")
            if report.nf_lower is not None and report.nf_lower > upper[-1]:
                return Check("bound ordering", False, f"(n-f) lower > upper at ({n}, {f})")
            if report.kappa_const >= report.prior_krum_upper:
                return Check("bound ordering", False, f"no improvement over 6(n-f)/(n-2f) at ({n}, {f})")
    return Check("bound ordering", True, f"all (n, f) with 5 <= n <= {max_n}, 1 <= f < n/2")


@dataclass(frozen=True)
class AppendixComparison:
    n: int
    f: int
    m: int
    printed: float
    configuration: float
    limit: float

    @property
    def agrees(self):
        return _rel_close(self.printed, self.configuration, 1e-6)


def appendix_comparison(n, f, m, epsilon=1e-9):
    """Compare the closed form ``R(n, f, m)`` with the configuration it comes from.

    ``configuration`` is the three-cluster construction at ``epsilon``
    evaluated by :func:`kappa_ratio`; ``limit`` is its ``epsilon -> 0`` value.
    """
    numeric = scenario_three_cluster(n, f, epsilon, m=m).ratio().ratio
    return AppendixComparison(
        n, f, m,
        printed=bounds.appendix_lower_R(n, f, m),
        configuration=numeric,
        limit=bounds.three_cluster_limit_ratio(n, f, m),
    )
