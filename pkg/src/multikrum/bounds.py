"""Closed-form bounds on the robustness coefficient of m-MultiKrum.

Functions taking ``(n, f)`` require ``n - 2f >= 1``. Unless the name says
otherwise, returned values are on the scale of the robustness coefficient,
i.e. they include the ``(n - f)/(n - 2f)`` prefactor. :func:`kappa_a` and
:func:`kappa_b` return the bare factors.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_int, check_problem_size

#: (sqrt(2) + 1)^2 = 3 + 2 sqrt(2), the optimum of 2(1 + a) + (1 + 1/a) over a > 0.
YOUNG_CONSTANT = 3.0 + 2.0 * math.sqrt(2.0)


def _prefactor(n, f):
    return (n - f) / (n - 2 * f)


def _check_m(n, f, m):
    return check_int(m, "m", 1, n - f)


def kappa_a(n, f, m):
    """Bare factor ``(sqrt(n-2f)/sqrt(m) + sqrt(2) + 1)^2`` used when m <= f."""
    n, f = check_problem_size(n, f)
    if not m > 0:
        raise ValueError(f"m must be positive, got {m}")
    return (math.sqrt((n - 2 * f) / m) + math.sqrt(2.0) + 1.0) ** 2


def kappa_b(n, f, m):
    """Bare factor ``(sqrt(n-2f)/sqrt(m) + sqrt(2f)/sqrt(m) + f/m)^2``.

    Accepts real ``m > 0``; strictly decreasing in ``m``.
    """
    n, f = check_problem_size(n, f)
    if not m > 0:
        raise ValueError(f"m must be positive, got {m}")
    return ((math.sqrt(n - 2 * f) + math.sqrt(2 * f)) / math.sqrt(m) + f / m) ** 2


def universal_lower(n, f):
    """``f/(n-2f)``: no robust aggregation rule does better."""
    n, f = check_problem_size(n, f)
    return f / (n - 2 * f)


def krum_lower(n, f):
    """Lower bound for Krum from the two-cluster configurations."""
    n, f = check_problem_size(n, f)
    if n < 3:
        raise ValueError(f"Krum lower bound needs n >= 3, got n={n}")
    if n % 2 == 0:
        return (n - 2) / (n - 2 * f + 2)
    return (n - 1) / (n - 2 * f + 1)


def nf_multikrum_lower(n, f):
    """``4f/(n-2f)`` for (n-f)-MultiKrum, valid only when n > 3f and f >= 1."""
    n, f = check_problem_size(n, f)
    if f < 1 or n <= 3 * f:
        raise ValueError(f"(n-f)-MultiKrum lower bound needs n > 3f >= 3, got n={n}, f={f}")
    return 4 * f / (n - 2 * f)


def prior_krum_upper(n, f):
    """``6 (n-f)/(n-2f)``, the earlier Krum upper bound kept for comparison."""
    n, f = check_problem_size(n, f)
    return 6.0 * _prefactor(n, f)


def kappa_const(n, f):
    """Uniform-in-m upper bound ``(sqrt(2)+1)^2 (n-f)/(n-2f)``."""
    n, f = check_problem_size(n, f)
    return YOUNG_CONSTANT * _prefactor(n, f)


def kappa_dec(n, f, m):
    """Decreasing upper bound: prefactor times kappa_a (m <= f) or kappa_b (m > f)."""
    n, f = check_problem_size(n, f)
    m = _check_m(n, f, m)
    factor = kappa_a(n, f, m) if m <= f else kappa_b(n, f, m)
    return _prefactor(n, f) * factor


def kappa_dec_instance(n, f, m, u):
    """Bound for a selection containing ``u`` inputs outside the honest set.

    With ``v = m - u`` honest selected inputs, returns
    ``(n-f)/m^2 * (sqrt(v) + (sqrt(2m) + sqrt(u)) sqrt(u/(n-2f)))^2``.
    Not monotone in ``u`` in general, since ``sqrt(v)`` shrinks as ``u`` grows;
    it never exceeds :func:`kappa_dec`. See :func:`kappa_dec_relaxed`.
    """
    n, f = check_problem_size(n, f)
    m = _check_m(n, f, m)
    u = check_int(u, "u", 0, min(m, f))
    v = m - u
    inner = math.sqrt(v) + (math.sqrt(2 * m) + math.sqrt(u)) * math.sqrt(u / (n - 2 * f))
    return (n - f) / m**2 * inner**2


def kappa_dec_relaxed(n, f, m, u):
    """The per-instance bound with ``v`` replaced by ``m``.

    Nondecreasing in ``u``, and equal to :func:`kappa_dec` at ``u = min(m, f)``.
    """
    n, f = check_problem_size(n, f)
    m = _check_m(n, f, m)
    u = check_int(u, "u", 0, min(m, f))
    inner = math.sqrt(m) + (math.sqrt(2 * m) + math.sqrt(u)) * math.sqrt(u / (n - 2 * f))
    return (n - f) / m**2 * inner**2


def multikrum_upper(n, f, m):
    """Upper bound on the robustness coefficient of m-MultiKrum: min of the two bounds."""
    n, f = check_problem_size(n, f)
    m = _check_m(n, f, m)
    return _prefactor(n, f) * min(YOUNG_CONSTANT, kappa_b(n, f, m))


def appendix_lower_R(n, f, m):
    """Closed-form lower bound ``R(n, f, m)`` transcribed as published.

    With ``a = min(m, n-2f)``::

        R = (n-f)^2 / (f (n-2f)) * ((a f/(n-f) + m - a) / m)^2

    For ``m <= n-2f`` it reduces to ``f/(n-2f)``. For larger ``m`` it does not
    match the ratio of the configuration it is derived from; use
    :func:`three_cluster_limit_ratio` for that value.
    """
    n, f = check_problem_size(n, f)
    if f < 1 or n <= 3 * f:
        raise ValueError(f"R(n, f, m) needs n > 3f >= 3, got n={n}, f={f}")
    m = _check_m(n, f, m)
    a = min(m, n - 2 * f)
    return (n - f) ** 2 / (f * (n - 2 * f)) * ((a * f / (n - f) + m - a) / m) ** 2


def three_cluster_limit_ratio(n, f, m, epsilon=0.0):
    """Ratio attained by the three-cluster configuration, computed by hand.

    The configuration has ``f`` points at ``-e``, ``n-2f`` at ``0`` and ``f`` at
    ``(1-eps) e``, honest set = the first ``n-f``. m-MultiKrum averages
    ``a = min(m, n-2f)`` zeros and ``m - a`` copies of ``(1-eps) e``, so the
    squared bias is ``((m-a)(1-eps)/m + f/(n-f))^2`` over scatter
    ``f (n-2f)/(n-f)^2``. ``epsilon=0`` gives the limit.
    """
    n, f = check_problem_size(n, f)
    if f < 1 or n <= 3 * f:
        raise ValueError(f"three-cluster configuration needs n > 3f >= 3, got n={n}, f={f}")
    m = _check_m(n, f, m)
    a = min(m, n - 2 * f)
    bias = (m - a) * (1.0 - epsilon) / m + f / (n - f)
    return bias**2 * (n - f) ** 2 / (f * (n - 2 * f))


def bisect_decreasing(func, target, lo, hi, tol=1e-9, max_iter=200):
    """Root of ``func(x) = target`` for strictly decreasing ``func`` on ``[lo, hi]``.

    Requires ``func(lo) >= target >= func(hi)``; stops when the bracket is
    narrower than ``tol``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not lo < hi:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    if func(lo) < target or func(hi) > target:
        raise ValueError(f"target {target} not bracketed by [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if func(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TransitionReport:
    n: int
    f: int
    m_dagger_real: float
    m_dagger_int: int | None
    in_range: bool
    bracket_low: float
    bracket_high: float
    A: float
    C: float = YOUNG_CONSTANT

    def to_dict(self):
        return {
            "n": self.n,
            "f": self.f,
            "m_dagger_real": self.m_dagger_real,
            "m_dagger_int": self.m_dagger_int,
            "bracket_low": self.bracket_low,
            "bracket_high": self.bracket_high,
        }


def transition_brackets(n, f):
    """Analytic ``(low, high)`` bounds on the crossing point of kappa_b and C."""
    n, f = check_problem_size(n, f)
    A = math.sqrt(n - 2 * f) + math.sqrt(2 * f)
    C = YOUNG_CONSTANT
    A2 = A * A
    low = (A2 + math.sqrt(A2 * A2 + 4 * C * f * f)) / (2 * C)
    high = (A2 + math.sqrt(A2 * A2 + 2 * C * f * f)) / C
    return low, high


def transition(n, f, tol=1e-9):
    """Locate where kappa_b(m) crosses (sqrt(2)+1)^2.

    ``m_dagger_real`` is found by bisection over real ``m``, starting from
    ``[1, n]`` and doubling the right end until the crossing is bracketed.
    ``m_dagger_int`` is the smallest integer ``m`` with ``kappa_b(m) < C``; it
    is ``None`` (and ``in_range`` False) if that integer exceeds ``n - f``.
    """
    n, f = check_problem_size(n, f)
    if f < 1:
        raise ValueError("transition requires f >= 1")
    C = YOUNG_CONSTANT

    def kb(m):
        return kappa_b(n, f, m)

    hi = float(n)
    while kb(hi) >= C:
        hi *= 2.0
    root = bisect_decreasing(kb, C, 1.0, hi, tol=tol)

    m_int = max(1, math.ceil(root))
    while m_int > 1 and kb(m_int - 1) < C:
        m_int -= 1
    while kb(m_int) >= C:
        m_int += 1
    in_range = m_int <= n - f

    low, high = transition_brackets(n, f)
    return TransitionReport(
        n=n,
        f=f,
        m_dagger_real=root,
        m_dagger_int=m_int if in_range else None,
        in_range=in_range,
        bracket_low=low,
        bracket_high=high,
        A=math.sqrt(n - 2 * f) + math.sqrt(2 * f),
    )


BOUND_COLUMNS = (
    "m",
    "upper_thm1",
    "kappa_const",
    "kappa_dec",
    "kappa_a",
    "kappa_b",
    "universal_lower",
    "krum_lower",
    "nf_lower",
    "appendix_R",
)


@dataclass(frozen=True)
class BoundReport:
    """Every bound for one ``(n, f)``, with per-m arrays over ``m = 1..n-f``.

    Scalars that do not apply to ``(n, f)`` are ``None``; per-m arrays that do
    not apply hold NaN.
    """

    n: int
    f: int
    m: np.ndarray
    upper: np.ndarray
    kappa_const: float
    kappa_dec: np.ndarray
    kappa_a: np.ndarray
    kappa_b: np.ndarray
    universal_lower: float
    krum_lower: float | None
    nf_lower: float | None
    prior_krum_upper: float
    appendix_R: np.ndarray
    config_lower: np.ndarray = field(default=None)

    def rows(self, m_values=None):
        """Yield one dict per m, keyed by :data:`BOUND_COLUMNS`; absent values are ``None``."""
        index = {int(m): i for i, m in enumerate(self.m)}
        for m in self.m if m_values is None else m_values:
            i = index[int(m)]
            row = {
                "m": int(m),
                "upper_thm1": float(self.upper[i]),
                "kappa_const": self.kappa_const,
                "kappa_dec": float(self.kappa_dec[i]),
                "kappa_a": float(self.kappa_a[i]),
                "kappa_b": float(self.kappa_b[i]),
                "universal_lower": self.universal_lower,
                "krum_lower": self.krum_lower,
                "nf_lower": self.nf_lower,
                "appendix_R": None if np.isnan(self.appendix_R[i]) else float(self.appendix_R[i]),
            }
            if self.config_lower is not None:
                value = self.config_lower[i]
                row["config_lower"] = None if np.isnan(value) else float(value)
            yield row


def summary_table(n, f):
    """Evaluate all bounds for ``(n, f)`` across ``m = 1..n-f``.

    The per-m columns are evaluated in vectorized form; the scalar functions
    above compute the same quantities one ``m`` at a time.
    """
    n, f = check_problem_size(n, f)
    ms = np.arange(1, n - f + 1)
    mf = ms.astype(np.float64)
    pre = _prefactor(n, f)
    ka = (np.sqrt((n - 2 * f) / mf) + math.sqrt(2.0) + 1.0) ** 2
    kb = ((math.sqrt(n - 2 * f) + math.sqrt(2 * f)) / np.sqrt(mf) + f / mf) ** 2
    three_cluster = f >= 1 and n > 3 * f
    if three_cluster:
        a = np.minimum(ms, n - 2 * f)
        appendix = (n - f) ** 2 / (f * (n - 2 * f)) * ((a * f / (n - f) + ms - a) / mf) ** 2
        config = ((ms - a) / mf + f / (n - f)) ** 2 * (n - f) ** 2 / (f * (n - 2 * f))
    else:
        appendix = np.full(ms.shape, np.nan)
        config = np.full(ms.shape, np.nan)
    return BoundReport(
        n=n,
        f=f,
        m=ms,
        upper=pre * np.minimum(YOUNG_CONSTANT, kb),
        kappa_const=kappa_const(n, f),
        kappa_dec=pre * np.where(ms <= f, ka, kb),
        kappa_a=ka,
        kappa_b=kb,
        universal_lower=universal_lower(n, f),
        krum_lower=krum_lower(n, f) if n >= 3 else None,
        nf_lower=nf_multikrum_lower(n, f) if three_cluster else None,
        prior_krum_upper=prior_krum_upper(n, f),
        appendix_R=appendix,
        config_lower=config,
    )
