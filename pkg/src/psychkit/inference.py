"""Group comparisons: ANOVA, Dunn's test, Benjamini-Hochberg, Cohen's d, MDES."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import optimize, stats


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: tuple
    p_value: float
    p_adjusted: float | None = None
    effect_size: float | None = None
    effect_label: str = ""
    label: str = ""

    __test__ = False  # not a pytest class


def _as_groups(groups) -> list[np.ndarray]:
    out = [np.asarray(g, dtype=float) for g in groups]
    for i, g in enumerate(out):
        if g.size == 0:
            raise ValueError(f"group {i} is empty")
    return out


def one_way_anova(groups: Sequence[Sequence[float]]) -> TestResult:
    gs = _as_groups(groups)
    if len(gs) < 2:
        raise ValueError("need at least 2 groups")
    if any(g.size < 2 for g in gs):
        raise ValueError("each group needs at least 2 observations")
    allx = np.concatenate(gs)
    grand = allx.mean()
    ssb = sum(g.size * (g.mean() - grand) ** 2 for g in gs)
    ssw = sum(((g - g.mean()) ** 2).sum() for g in gs)
    k, n = len(gs), allx.size
    df1, df2 = k - 1, n - k
    if ssw == 0:
        if ssb == 0:
            raise ValueError("all observations identical; F is undefined")
        return TestResult(float("inf"), (df1, df2), 0.0, label="one-way ANOVA")
    f = (ssb / df1) / (ssw / df2)
    return TestResult(float(f), (df1, df2), float(stats.f.sf(f, df1, df2)), label="one-way ANOVA")


def _dummies(codes: np.ndarray, n_levels: int) -> np.ndarray:
    # treatment coding, first level as baseline
    return (codes[:, None] == np.arange(1, n_levels)[None, :]).astype(float)


def _rss(y: np.ndarray, X: np.ndarray) -> float:
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def two_way_anova(scores, factor_a, factor_b, names: tuple[str, str] = ("A", "B")) -> dict[str, TestResult]:
    """Sequential (type I) sums of squares: A, then B given A, then A x B.

    Returns results keyed by ``names[0]``, ``names[1]`` and ``"A:B"`` style
    interaction key.
    """
    y = np.asarray(scores, dtype=float)
    a = np.asarray(factor_a).astype(str)
    b = np.asarray(factor_b).astype(str)
    la, ca = np.unique(a, return_inverse=True)
    lb, cb = np.unique(b, return_inverse=True)
    if len(la) < 2 or len(lb) < 2:
        raise ValueError("both factors need at least 2 levels")
    counts = np.zeros((len(la), len(lb)), dtype=int)
    np.add.at(counts, (ca, cb), 1)
    if (counts == 0).any():
        i, j = np.argwhere(counts == 0)[0]
        raise ValueError(f"empty cell ({la[i]}, {lb[j]})")
    n = y.size
    one = np.ones((n, 1))
    Da, Db = _dummies(ca, len(la)), _dummies(cb, len(lb))
    Dab = np.einsum("ni,nj->nij", Da, Db).reshape(n, -1)
    rss0 = _rss(y, one)
    rss_a = _rss(y, np.hstack([one, Da]))
    rss_ab = _rss(y, np.hstack([one, Da, Db]))
    rss_full = _rss(y, np.hstack([one, Da, Db, Dab]))
    df_a, df_b = len(la) - 1, len(lb) - 1
    df_ab = df_a * df_b
    df_res = n - len(la) * len(lb)
    if df_res <= 0:
        raise ValueError("no residual degrees of freedom")
    mse = rss_full / df_res
    if mse <= 1e-12 * max(rss0, 1.0):
        raise ValueError("zero residual variance; F statistics are undefined")
    out = {}
    for key, ss, df in (
        (names[0], rss0 - rss_a, df_a),
        (names[1], rss_a - rss_ab, df_b),
        (f"{names[0]}:{names[1]}", rss_ab - rss_full, df_ab),
    ):
        ss = max(ss, 0.0)
        f = (ss / df) / mse
        out[key] = TestResult(float(f), (df, df_res), float(stats.f.sf(f, df, df_res)), label="two-way ANOVA (type I SS)")
    return out


def benjamini_hochberg(p_values) -> np.ndarray:
    """Step-up adjusted p-values, returned in input order."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return p.copy()
    if np.any(np.isnan(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adj, 1.0)
    return out


def cohens_d(group_a, group_b) -> float:
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each group needs at least 2 observations")
    pooled = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / (a.size + b.size - 2)
    if pooled == 0:
        raise ValueError("pooled variance is zero; Cohen's d is undefined")
    return float((a.mean() - b.mean()) / np.sqrt(pooled))


def cohens_d_from_summary(mean_a, sd_a, n_a, mean_b, sd_b, n_b) -> float:
    pooled = ((n_a - 1) * sd_a**2 + (n_b - 1) * sd_b**2) / (n_a + n_b - 2)
    return float((mean_a - mean_b) / np.sqrt(pooled))


def dunn_test(groups: Sequence[Sequence[float]], labels: Sequence[str] | None = None) -> dict[tuple[str, str], TestResult]:
    """Pairwise Dunn z tests on pooled ranks, tie-corrected, BH-adjusted.

    Positive z means the first group of the pair has the higher mean rank.
    """
    gs = _as_groups(groups)
    if len(gs) < 2:
        raise ValueError("need at least 2 groups")
    labels = list(labels) if labels is not None else [str(i) for i in range(len(gs))]
    allx = np.concatenate(gs)
    n = allx.size
    ranks = stats.rankdata(allx)
    _, ties = np.unique(allx, return_counts=True)
    tie_term = (ties**3 - ties).sum() / (12.0 * (n - 1))
    var_unit = n * (n + 1) / 12.0 - tie_term
    bounds = np.cumsum([0] + [g.size for g in gs])
    mean_rank = [ranks[bounds[i]:bounds[i + 1]].mean() for i in range(len(gs))]
    pairs, zs, ps, ds = [], [], [], []
    for i, j in combinations(range(len(gs)), 2):
        se = np.sqrt(var_unit * (1.0 / gs[i].size + 1.0 / gs[j].size))
        z = 0.0 if se == 0 else (mean_rank[i] - mean_rank[j]) / se
        pairs.append((labels[i], labels[j]))
        zs.append(z)
        ps.append(float(min(1.0, 2 * stats.norm.sf(abs(z)))))
        try:
            ds.append(cohens_d(gs[i], gs[j]))
        except ValueError:
            ds.append(None)
    adj = benjamini_hochberg(ps)
    return {
        pair: TestResult(float(z), (), p, float(pa), d, "Cohen's d", "Dunn")
        for pair, z, p, pa, d in zip(pairs, zs, ps, adj, ds)
    }


@dataclass(frozen=True)
class MinimumEffect:
    two_group_d: float | None
    anova_d: float
    anova_f: float
    alpha: float
    power: float
    group_sizes: tuple[int, ...]


def mdes_two_group(n1: int, n2: int, alpha: float = 0.05, power: float = 0.8) -> float:
    """Smallest detectable standardized mean difference, normal approximation."""
    if n1 < 2 or n2 < 2:
        raise ValueError("group sizes must be >= 2")
    _check_unit(alpha, power)
    z = stats.norm.ppf(1 - alpha / 2) + stats.norm.ppf(power)
    return float(z * np.sqrt(1.0 / n1 + 1.0 / n2))


def mdes_anova(group_sizes: Sequence[int], alpha: float = 0.05, power: float = 0.8) -> float:
    """Cohen's f at which the one-way ANOVA F test reaches ``power``."""
    sizes = list(group_sizes)
    if len(sizes) < 2 or min(sizes) < 2:
        raise ValueError("need >= 2 groups of size >= 2")
    _check_unit(alpha, power)
    k, n = len(sizes), sum(sizes)
    df1, df2 = k - 1, n - k
    crit = stats.f.isf(alpha, df1, df2)

    def gap(f):
        return stats.ncf.sf(crit, df1, df2, f * f * n) - power

    hi = 1.0
    while gap(hi) < 0:
        hi *= 2
    return float(optimize.brentq(gap, 1e-9, hi, xtol=1e-12))


def min_detectable_effect(group_sizes: Sequence[int], alpha: float = 0.05, power: float = 0.8) -> MinimumEffect:
    """Both MDES variants: two-group normal formula (only for 2 groups) and
    ANOVA noncentral-F inversion reported as d = 2f."""
    sizes = tuple(int(s) for s in group_sizes)
    if min(sizes) < 2:
        raise ValueError("group sizes must be >= 2")
    f = mdes_anova(sizes, alpha, power)
    two = mdes_two_group(*sizes, alpha=alpha, power=power) if len(sizes) == 2 else None
    return MinimumEffect(two, 2 * f, f, alpha, power, sizes)


def _check_unit(alpha, power):
    if not (0 < alpha < 1 and 0 < power < 1):
        raise ValueError("alpha and power must lie in (0, 1)")
