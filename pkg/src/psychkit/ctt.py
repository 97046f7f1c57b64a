"""Classical test theory: item analysis, coefficient alpha, descriptives, norm tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ResponseMatrix

TOO_EASY = 0.85
TOO_HARD = 0.25
MIN_POINT_BISERIAL = 0.2


@dataclass(frozen=True)
class ItemStats:
    item: str
    difficulty_index: float
    point_biserial: float
    point_biserial_corrected: float
    drop_alpha: float
    flag: str
    zero_variance: bool = False


@dataclass(frozen=True)
class ScaleReliability:
    alpha: float
    n_items: int
    interpretation: str


@dataclass(frozen=True)
class ItemAnalysis:
    items: list[ItemStats]
    reliability: ScaleReliability

    def by_item(self) -> dict[str, ItemStats]:
        return {s.item: s for s in self.items}


@dataclass(frozen=True)
class Descriptives:
    n: int
    mean: float
    sem: float
    sd: float
    skew: float
    kurtosis: float
    min: float
    max: float
    estimator: str = "adjusted"


@dataclass(frozen=True)
class NormRow:
    score: int
    z: float
    percentile: int


@dataclass(frozen=True)
class NormTable:
    rows: list[NormRow]
    mean: float
    sd: float
    n: int

    def z(self, score: int) -> float:
        return self.rows[score].z

    def percentile(self, score: int) -> int:
        return self.rows[score].percentile


def cronbach_alpha(x: np.ndarray) -> float:
    """Coefficient alpha of the columns of ``x`` using population variances."""
    x = np.asarray(x, dtype=float)
    k = x.shape[1]
    if k < 2:
        raise ValueError("alpha needs at least 2 items")
    total_var = x.sum(axis=1).var()
    if total_var == 0:
        raise ValueError("total score has zero variance; alpha is undefined")
    return k / (k - 1) * (1.0 - x.var(axis=0).sum() / total_var)


def interpret_alpha(alpha: float) -> str:
    # >= 0.9 is reported as high too; the cited bands stop at 0.9
    if alpha > 0.7:
        return "high"
    if alpha > 0.5:
        return "moderate"
    return "low"


def _corr(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        return 0.0
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def _flag(p: float, rpb: float) -> str:
    if p > TOO_EASY:
        return "too_easy"
    if p < TOO_HARD:
        return "too_hard"
    if rpb < MIN_POINT_BISERIAL:
        return "low_discrimination"
    return "ok"


def item_analysis(matrix: ResponseMatrix) -> ItemAnalysis:
    x = matrix.responses.astype(float)
    n, k = x.shape
    if n < 2 or k < 2:
        raise ValueError(f"item analysis needs >= 2 students and >= 2 items, got {n}x{k}")
    alpha = cronbach_alpha(x)
    total = x.sum(axis=1)
    stats = []
    for j, item in enumerate(matrix.items):
        col = x[:, j]
        p = col.sum() / n
        rest = total - col
        if k > 2:
            rest_x = np.delete(x, j, axis=1)
            try:
                drop = cronbach_alpha(rest_x)
            except ValueError:
                drop = float("nan")
        else:
            drop = float("nan")
        rpb = _corr(col, total)
        stats.append(
            ItemStats(
                item=item,
                difficulty_index=float(p),
                point_biserial=rpb,
                point_biserial_corrected=_corr(col, rest),
                drop_alpha=float(drop),
                flag=_flag(p, rpb),
                zero_variance=bool(col.std() == 0),
            )
        )
    return ItemAnalysis(stats, ScaleReliability(float(alpha), k, interpret_alpha(alpha)))


def central_moments(x: np.ndarray) -> tuple[float, float, float]:
    d = x - x.mean()
    return float((d**2).mean()), float((d**3).mean()), float((d**4).mean())


def descriptives(scores, estimator: str = "adjusted") -> Descriptives:
    """Summary statistics of total scores.

    ``estimator="plain"`` gives g1 = m3/m2^1.5 and g2 = m4/m2^2 - 3;
    ``"adjusted"`` applies the usual small-sample corrections (G1, G2).
    """
    x = np.asarray(scores, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("descriptives need n >= 2")
    m2, m3, m4 = central_moments(x)
    if m2 == 0:
        raise ValueError("scores have zero variance; skew and kurtosis are undefined")
    g1 = m3 / m2**1.5
    g2 = m4 / m2**2 - 3.0
    if estimator == "plain":
        skew, kurt = g1, g2
    elif estimator == "adjusted":
        if n < 4:
            raise ValueError("adjusted skew/kurtosis need n >= 4")
        skew = g1 * np.sqrt(n * (n - 1)) / (n - 2)
        kurt = (n - 1) / ((n - 2) * (n - 3)) * ((n + 1) * g2 + 6)
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    sd = float(x.std(ddof=1))
    return Descriptives(
        n=n,
        mean=float(x.mean()),
        sem=sd / np.sqrt(n),
        sd=sd,
        skew=float(skew),
        kurtosis=float(kurt),
        min=float(x.min()),
        max=float(x.max()),
        estimator=estimator,
    )


def norm_table(scores, max_score: int) -> NormTable:
    """z-score and percentile for every raw score 0..max_score.

    Percentile is round(100 * P(X <= s)) under the empirical distribution; z uses
    the unrounded sample mean and SD (ddof=1).
    """
    x = np.asarray(scores, dtype=float)
    if x.size < 2:
        raise ValueError("norm table needs n >= 2")
    sd = x.std(ddof=1)
    if sd == 0:
        raise ValueError("scores have zero variance")
    mean = x.mean()
    s = np.arange(max_score + 1)
    cdf = np.searchsorted(np.sort(x), s, side="right") / x.size
    # round half up, the usual table convention
    pct = np.floor(100 * cdf + 0.5).astype(int)
    rows = [NormRow(int(v), float((v - mean) / sd), int(q)) for v, q in zip(s, pct)]
    return NormTable(rows, float(mean), float(sd), int(x.size))
