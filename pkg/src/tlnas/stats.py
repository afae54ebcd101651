"""Statistics used by the harnesses and reports.

Three things live here: population moments (the 1/N forms the selection
pseudocode is written in), Welch's unequal-variance t-test, and Spearman
rank correlation.  The Student-t tail is evaluated with a hand-rolled
regularised incomplete beta so the runtime package needs nothing beyond
numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_BETA_TOL = 1e-14
_BETA_MAX_ITER = 500


class RunningMoments:
    """Streaming mean/variance accumulator (Welford's recurrence).

    Exact in the degenerate case: pushing the same value N times leaves
    the squared-deviation accumulator at exactly zero, which the
    zero-sigma filtering downstream relies on.
    """

    __slots__ = ("count", "mean", "_m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def add(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    @property
    def population_variance(self) -> float:
        if self.count == 0:
            raise ValueError("no observations")
        return self._m2 / self.count

    @property
    def population_std(self) -> float:
        return math.sqrt(self.population_variance)

    @property
    def sample_variance(self) -> float:
        """Unbiased (1/(N-1)) variance, for the t-test."""
        if self.count < 2:
            raise ValueError("sample variance needs at least 2 observations")
        return self._m2 / (self.count - 1)


def population_mean_std(xs: Iterable[float]) -> tuple[float, float]:
    """Mean and population (1/N) standard deviation of xs.

    This is deliberately the biased form: the pseudocode both harnesses
    implement writes sigma with a 1/N normaliser.
    """
    acc = RunningMoments()
    for x in xs:
        acc.add(float(x))
    if acc.count == 0:
        raise ValueError("population_mean_std of an empty sequence")
    return acc.mean, acc.population_std


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keeps pytest from collecting this as a test class

    t_statistic: float
    degrees_of_freedom: float
    p_value: float


def _betainc_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_TOL:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (a > 0 and b > 0):
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        a * math.log(x)
        + b * math.log1p(-x)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    )
    # The continued fraction converges fast only below the mean; use the
    # symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betainc_cf(a, b, x) / a
    return 1.0 - math.exp(
        b * math.log1p(-x)
        + a * math.log(x)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    ) * _betainc_cf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with df degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t > 0 else 1.0 - tail


def welch_t_test(
    a: Sequence[float], b: Sequence[float], alternative: str = "two-sided"
) -> TestResult:
    """Welch's unequal-variance two-sample t-test.

    alternative: "two-sided", or "greater" (mean(a) > mean(b)), or
    "less".  Swapping the samples flips the sign of t and leaves the
    two-sided p unchanged.

    Both samples having zero variance is a defined edge case: equal
    means give p=1, distinct means give the separated-sample limit p=0.
    The degrees of freedom are reported as n_a + n_b - 2 there, since
    the Welch-Satterthwaite expression is 0/0.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative: {alternative!r}")
    xs = [float(v) for v in a]
    ys = [float(v) for v in b]
    if len(xs) < 2 or len(ys) < 2:
        raise ValueError("welch_t_test needs at least 2 observations per sample")
    ma = RunningMoments()
    mb = RunningMoments()
    for v in xs:
        ma.add(v)
    for v in ys:
        mb.add(v)
    na, nb = ma.count, mb.count
    va, vb = ma.sample_variance, mb.sample_variance
    se2 = va / na + vb / nb
    diff = ma.mean - mb.mean
    if se2 == 0.0:
        t = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        df = float(na + nb - 2)
    else:
        t = diff / math.sqrt(se2)
        # Welch-Satterthwaite, scaled by the larger per-sample term: no
        # underflow when one variance is hundreds of orders smaller, and
        # every intermediate is symmetric under swapping the samples
        wa, wb = va / na, vb / nb
        m = max(wa, wb)
        pa, pb = wa / m, wb / m
        df = (pa + pb) ** 2 / (pa * pa / (na - 1) + pb * pb / (nb - 1))
    if alternative == "two-sided":
        # evaluated at |t| so the result is exactly symmetric under swap
        p = 2.0 * student_t_sf(abs(t), df)
    elif alternative == "greater":
        p = student_t_sf(t, df)
    else:
        p = 1.0 - student_t_sf(t, df)
    return TestResult(t_statistic=t, degrees_of_freedom=df, p_value=min(max(p, 0.0), 1.0))


def _average_ranks(xs: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties given the mean of the ranks they span."""
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs), dtype=np.float64)
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rank_corr(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of average ranks.

    Raises ValueError on constant input, where the coefficient is
    undefined.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length 1-d sequences")
    if len(x) < 3:
        raise ValueError("spearman_rank_corr needs at least 3 points")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise ValueError("spearman_rank_corr undefined for constant input")
    rho = float(dx @ dy) / denom
    return min(1.0, max(-1.0, rho))


def spearman_test(
    xs: Sequence[float], ys: Sequence[float], alternative: str = "two-sided"
) -> tuple[float, TestResult]:
    """rho plus its t-approximation significance test (df = n - 2)."""
    rho = spearman_rank_corr(xs, ys)
    n = len(xs)
    df = float(n - 2)
    if abs(rho) >= 1.0:
        t = math.copysign(math.inf, rho)
    else:
        t = rho * math.sqrt(df / (1.0 - rho * rho))
    if alternative == "two-sided":
        p = 2.0 * student_t_sf(abs(t), df)
    elif alternative == "greater":
        p = student_t_sf(t, df)
    elif alternative == "less":
        p = 1.0 - student_t_sf(t, df)
    else:
        raise ValueError(f"unknown alternative: {alternative!r}")
    return rho, TestResult(t_statistic=t, degrees_of_freedom=df, p_value=min(max(p, 0.0), 1.0))
