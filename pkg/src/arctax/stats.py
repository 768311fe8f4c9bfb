"""Self-contained statistics kernel.

Implements exactly the battery the diagnostics need: Spearman rank
correlation, the Mann-Whitney rank-sum test, Welch's t-test, Cohen's d, and
Student-t quantiles. Everything is computed from first principles on top of
``math`` so results are reproducible without a numerical stack; accuracy is
validated against enumeration oracles and published tables in the test
suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

#: Combined sample size at or below which the rank-sum test is exact.
EXACT_ENUMERATION_LIMIT = 16


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p_value: float
    method: str
    n_a: int
    n_b: int
    ties_present: bool = False


def _clamp_p(p: float) -> float:
    return min(1.0, max(0.0, p))


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def _sample_variance(xs: Sequence[float]) -> float:
    """Unbiased (n-1 denominator) sample variance; requires len >= 2."""
    m = _mean(xs)
    return math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties sharing the mean of their rank block."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def _has_ties(values: Sequence[float]) -> bool:
    return len(set(values)) != len(values)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Student t distribution via the regularized incomplete beta function.
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
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
        if abs(delta - 1.0) < 1e-15:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x out of range [0, 1]: {x!r}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the continued fraction on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    """Distribution function of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive: {df!r}")
    if t == 0.0:
        return 0.5
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|)."""
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return _clamp_p(regularized_incomplete_beta(df / 2.0, 0.5, x))


def t_quantile(p: float, df: float) -> float:
    """Inverse t distribution function, accurate to better than 1e-8 relative.

    Solved by bisection on the monotone distribution function; the bracket is
    grown geometrically until it straddles the target probability.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability out of range (0, 1): {p!r}")
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive: {df!r}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    hi = 1.0
    while t_cdf(hi, df) < p:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("t quantile bracket failed to close")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Rank correlation
# ---------------------------------------------------------------------------

def spearman(xs: Sequence[float], ys: Sequence[float]) -> StatResult:
    """Spearman rank correlation with mid-rank ties.

    rho is the Pearson correlation of the two rank vectors; the two-sided
    p-value uses the t approximation t = rho * sqrt((n-2) / (1-rho^2)) with
    n-2 degrees of freedom.
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 3:
        raise ValueError(f"need at least 3 paired observations, got {n}")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        raise ValueError("rank correlation undefined for constant input")
    rx = midranks(xs)
    ry = midranks(ys)
    mx, my = _mean(rx), _mean(ry)
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(rx, ry))
    ssx = math.fsum((a - mx) ** 2 for a in rx)
    ssy = math.fsum((b - my) ** 2 for b in ry)
    # Single square root keeps perfectly monotone inputs at exactly +/-1.
    rho = cov / math.sqrt(ssx * ssy)
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = t_sf_two_sided(t, n - 2)
    return StatResult(
        statistic=rho,
        p_value=_clamp_p(p),
        method="spearman-t-approximation",
        n_a=n,
        n_b=n,
        ties_present=_has_ties(xs) or _has_ties(ys),
    )


# ---------------------------------------------------------------------------
# Mann-Whitney U
# ---------------------------------------------------------------------------

def _u_from_rank_positions(positions: Sequence[int], n_a: int, n_b: int) -> float:
    rank_sum = sum(positions) + n_a  # 0-based positions -> 1-based ranks
    u_a = n_a * n_b + n_a * (n_a + 1) / 2.0 - rank_sum
    return min(u_a, n_a * n_b - u_a)


def _exact_min_u_p(u_observed: float, n_a: int, n_b: int) -> float:
    """P(min(U_a, U_b) <= observed) over all equally likely rank assignments."""
    total = 0
    favorable = 0
    for positions in combinations(range(n_a + n_b), n_a):
        total += 1
        if _u_from_rank_positions(positions, n_a, n_b) <= u_observed + 1e-9:
            favorable += 1
    return favorable / total


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Two-sided Mann-Whitney rank-sum test; statistic is min(U_a, U_b).

    Tie-free samples with combined size <= 16 get an exact permutation
    p-value; larger or tied samples use the normal approximation with
    tie-corrected variance and a 0.5 continuity correction.
    """
    n_a, n_b = len(a), len(b)
    if n_a == 0 or n_b == 0:
        raise ValueError("both groups must be non-empty")
    combined = list(a) + list(b)
    ranks = midranks(combined)
    rank_sum_a = math.fsum(ranks[:n_a])
    u_a = n_a * n_b + n_a * (n_a + 1) / 2.0 - rank_sum_a
    u_b = n_a * n_b - u_a
    u = min(u_a, u_b)
    ties = _has_ties(combined)

    if not ties and n_a + n_b <= EXACT_ENUMERATION_LIMIT:
        p = _exact_min_u_p(u, n_a, n_b)
        return StatResult(
            statistic=u, p_value=_clamp_p(p), method="mann-whitney-exact",
            n_a=n_a, n_b=n_b, ties_present=False,
        )

    n = n_a + n_b
    tie_sizes: list[int] = []
    for value in set(combined):
        count = combined.count(value)
        if count > 1:
            tie_sizes.append(count)
    tie_term = sum(t**3 - t for t in tie_sizes) / (n * (n - 1)) if n > 1 else 0.0
    variance = (n_a * n_b / 12.0) * ((n + 1) - tie_term)
    if variance <= 0.0:
        # Every observation identical: the test carries no information.
        return StatResult(
            statistic=u, p_value=1.0, method="mann-whitney-normal-degenerate",
            n_a=n_a, n_b=n_b, ties_present=ties,
        )
    z = (u - n_a * n_b / 2.0 + 0.5) / math.sqrt(variance)
    p = _clamp_p(2.0 * normal_cdf(z))
    return StatResult(
        statistic=u, p_value=p, method="mann-whitney-normal",
        n_a=n_a, n_b=n_b, ties_present=ties,
    )


# ---------------------------------------------------------------------------
# Welch's t and Cohen's d
# ---------------------------------------------------------------------------

def welch_t(a: Sequence[float], b: Sequence[float]) -> StatResult:
    """Welch's unequal-variance t-test, two-sided.

    Degrees of freedom follow Welch-Satterthwaite. When both groups are
    constant the test degenerates: equal means give p = 1, unequal means
    give p = 0; both states are flagged via the method tag.
    """
    n_a, n_b = len(a), len(b)
    if n_a < 2 or n_b < 2:
        raise ValueError("each group needs at least 2 observations")
    mean_a, mean_b = _mean(a), _mean(b)
    var_a, var_b = _sample_variance(a), _sample_variance(b)
    if var_a == 0.0 and var_b == 0.0:
        if mean_a == mean_b:
            return StatResult(0.0, 1.0, "welch-t-degenerate", n_a, n_b)
        stat = math.inf if mean_a > mean_b else -math.inf
        return StatResult(stat, 0.0, "welch-t-degenerate", n_a, n_b)
    se_sq = var_a / n_a + var_b / n_b
    t = (mean_a - mean_b) / math.sqrt(se_sq)
    # Welch-Satterthwaite, normalized by the larger variance term so tiny
    # variances cannot underflow the denominator.
    scale = max(var_a / n_a, var_b / n_b)
    ra = (var_a / n_a) / scale
    rb = (var_b / n_b) / scale
    df = (ra + rb) ** 2 / (ra**2 / (n_a - 1) + rb**2 / (n_b - 1))
    p = t_sf_two_sided(t, df)
    return StatResult(statistic=t, p_value=p, method="welch-t", n_a=n_a, n_b=n_b)


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    """Standardized mean difference with the pooled (n-1 weighted) deviation."""
    n_a, n_b = len(a), len(b)
    if n_a < 2 or n_b < 2:
        raise ValueError("each group needs at least 2 observations")
    pooled_var = (
        (n_a - 1) * _sample_variance(a) + (n_b - 1) * _sample_variance(b)
    ) / (n_a + n_b - 2)
    if pooled_var == 0.0:
        raise ValueError("pooled standard deviation is zero; effect size undefined")
    return (_mean(a) - _mean(b)) / math.sqrt(pooled_var)
