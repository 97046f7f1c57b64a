"""Model diagnostics: local dependence (Q3), parameter bands, Wright maps, dimensionality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .irt import AbilityEstimates, IrtModel, _columns

Q3_GOOD = 0.2
Q3_ACCEPTABLE = 0.3

# (lower bound, label); a value takes the label of the last bound it reaches
DISCRIMINATION_BANDS = ((-np.inf, "very low"), (0.35, "low"), (0.65, "moderate"), (1.35, "high"), (1.70, "very high"))
DIFFICULTY_BANDS = ((-np.inf, "very easy"), (-2.0, "easy"), (-0.5, "medium"), (0.5, "hard"), (2.0, "very hard"))


@dataclass(frozen=True)
class Q3Result:
    items: tuple[str, ...]
    q3: np.ndarray
    max_abs: float
    flagged_pairs: list[tuple[str, str, float]]

    def pairs_between(self, lo: float, hi: float) -> list[tuple[str, str, float]]:
        out = []
        k = len(self.items)
        for i in range(k):
            for j in range(i + 1, k):
                if lo <= abs(self.q3[i, j]) < hi:
                    out.append((self.items[i], self.items[j], float(self.q3[i, j])))
        return out


def yen_q3(matrix, model: IrtModel, abilities: AbilityEstimates | np.ndarray) -> Q3Result:
    """Pairwise correlations of residuals u_ij - P_j(theta_i) at the ability estimates."""
    x, _ = _columns(matrix, model.items)
    theta = abilities.eap if isinstance(abilities, AbilityEstimates) else np.asarray(abilities, dtype=float)
    resid = x - model.prob(theta)
    sd = resid.std(axis=0)
    if np.any(sd == 0):
        bad = [model.items[j] for j in np.where(sd == 0)[0]]
        raise ValueError(f"zero-variance residuals for items {bad}")
    q3 = np.corrcoef(resid, rowvar=False)
    k = len(model.items)
    off = q3[~np.eye(k, dtype=bool)]
    flagged = []
    for i in range(k):
        for j in range(i + 1, k):
            if abs(q3[i, j]) >= Q3_GOOD:
                flagged.append((model.items[i], model.items[j], float(q3[i, j])))
    return Q3Result(tuple(model.items), q3, float(np.max(np.abs(off))), flagged)


def _band(value: float, bands) -> str:
    label = bands[0][1]
    for lower, name in bands:
        if value >= lower:
            label = name
    return label


def classify_discrimination(a: float) -> str:
    return _band(a, DISCRIMINATION_BANDS)


def classify_difficulty(b: float) -> str:
    return _band(b, DIFFICULTY_BANDS)


def classify_items(model: IrtModel) -> dict[str, dict[str, str]]:
    return {
        item: {"discrimination": classify_discrimination(a), "difficulty": classify_difficulty(b)}
        for item, a, b in zip(model.items, model.a, model.b)
    }


@dataclass(frozen=True)
class WrightMap:
    bins: list[tuple[float, float, int]]  # (lower, upper, count), lower-closed
    items: list[tuple[str, float]]  # (item, difficulty) in model order


def wright_map_data(model: IrtModel, abilities: AbilityEstimates | np.ndarray, bin_width: float = 0.25) -> WrightMap:
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    theta = abilities.eap if isinstance(abilities, AbilityEstimates) else np.asarray(abilities, dtype=float)
    idx = np.floor(theta / bin_width + 1e-12).astype(int)
    bins = []
    for k in range(idx.min(), idx.max() + 1) if theta.size else ():
        count = int((idx == k).sum())
        bins.append((round(k * bin_width, 10), round((k + 1) * bin_width, 10), count))
    return WrightMap(bins, [(it, float(b)) for it, b in zip(model.items, model.b)])


def tetrachoric_approx(x: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    """Cosine-pi approximation cos(pi / (1 + sqrt(AD/BC))).

    Returns the correlation and whether an empty cell forced a clamp to +-1.
    """
    a = float(np.sum((x == 1) & (y == 1)))
    b = float(np.sum((x == 1) & (y == 0)))
    c = float(np.sum((x == 0) & (y == 1)))
    d = float(np.sum((x == 0) & (y == 0)))
    if b * c == 0 and a * d == 0:
        return 0.0, True
    if b * c == 0:
        return 1.0, True
    if a * d == 0:
        return -1.0, True
    return float(np.cos(np.pi / (1.0 + np.sqrt(a * d / (b * c))))), False


@dataclass(frozen=True)
class DimensionalityScreen:
    eigenvalues: np.ndarray
    ratio: float
    verdict: str
    clamped_pairs: list[tuple[str, str]]


def unidimensionality_screen(matrix, items=None, threshold: float = 3.0) -> DimensionalityScreen:
    """First-to-second eigenvalue ratio of the approximate tetrachoric matrix."""
    x, names = _columns(matrix, items)
    k = x.shape[1]
    if k < 3:
        raise ValueError("need at least 3 items")
    r = np.eye(k)
    clamped = []
    for i in range(k):
        for j in range(i + 1, k):
            rho, clamp = tetrachoric_approx(x[:, i], x[:, j])
            r[i, j] = r[j, i] = rho
            if clamp:
                clamped.append((names[i], names[j]))
    ev = np.sort(np.linalg.eigvalsh(r))[::-1]
    ratio = float(ev[0] / ev[1]) if ev[1] > 0 else float("inf")
    verdict = "plausibly unidimensional" if ratio > threshold else "not unidimensional"
    return DimensionalityScreen(ev, ratio, verdict, clamped)
