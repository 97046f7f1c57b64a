"""Proficiency levels built from response-probability-adjusted 2PL difficulties."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import expit

from .irt import AbilityEstimates, IrtModel

LEVEL_WIDTH = 0.8
TARGET_P = 0.62
BOTTOM_TARGET = 0.52
TOP_TARGET = 0.70


def adjusted_difficulty(a, b, target_p: float = TARGET_P):
    """Ability at which a 2PL item is answered correctly with probability ``target_p``."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("discrimination must be positive")
    if not 0 < target_p < 1:
        raise ValueError("target_p must lie in (0, 1)")
    out = np.asarray(b, dtype=float) + math.log(target_p / (1 - target_p)) / a
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Level:
    index: int
    lower: float  # -inf for the bottom level
    upper: float  # +inf for the top level
    items: tuple[str, ...]
    anchor: str | None
    sparse: bool
    band_index: int | None = None  # floor((lower - origin) / width) for bounded levels

    def contains(self, value: float) -> bool:
        return self.lower <= value < self.upper


@dataclass(frozen=True)
class ProficiencyProfile:
    levels: list[Level]
    item_location: dict[str, float]  # adjusted difficulty per item
    student_distribution: dict[str, list[float]]  # group -> percentage per level
    origin: float
    target_p: float
    meta: dict = field(default_factory=dict)

    def level_of(self, value: float) -> int:
        for lv in self.levels:
            if lv.contains(value):
                return lv.index
        raise AssertionError("levels must partition the real line")

    @property
    def item_assignment(self) -> dict[str, int]:
        return {it: self.level_of(v) for it, v in self.item_location.items()}

    @property
    def anchors(self) -> dict[int, str | None]:
        return {lv.index: lv.anchor for lv in self.levels}

    @property
    def sparse_levels(self) -> set[int]:
        return {lv.index for lv in self.levels if lv.sparse}


def _nearest(items, location, target):
    # ties go to the item listed first
    best = None
    for it in items:
        d = abs(location[it] - target)
        if best is None or d < best[0] - 1e-12:
            best = (d, it)
    return best[1] if best else None


def build_profile(
    model: IrtModel,
    abilities: Mapping[str, AbilityEstimates | np.ndarray] | None = None,
    origin: float = 0.0,
    min_items: int = 3,
    target_p: float = TARGET_P,
    width: float = LEVEL_WIDTH,
) -> ProficiencyProfile:
    """Bin items into ``width``-logit levels whose edges sit on ``origin + k*width``.

    Bands holding at least ``min_items`` items form the bounded levels: the
    longest contiguous run of such bands (most items on ties). Everything below
    and above that run is merged into open-ended bottom/top levels, which are
    marked sparse when none of their constituent bands reaches ``min_items``.
    """
    if model.kind != "2PL":
        raise ValueError("proficiency levels need a 2PL model with item discriminations")
    loc = dict(zip(model.items, adjusted_difficulty(model.a, model.b, target_p)))
    band = {it: math.floor((v - origin) / width + 1e-9) for it, v in loc.items()}
    counts: dict[int, int] = {}
    for k in band.values():
        counts[k] = counts.get(k, 0) + 1
    lo_k, hi_k = min(counts), max(counts)

    runs, cur = [], []
    for k in range(lo_k, hi_k + 1):
        if counts.get(k, 0) >= min_items:
            cur.append(k)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    if runs:
        core = max(runs, key=lambda r: (len(r), sum(counts[k] for k in r)))
    else:
        # no dense band: one bounded level around the median item, everything else in tails
        core = [int(np.median(sorted(band.values())))]

    order = sorted(model.items, key=lambda it: (loc[it], model.items.index(it)))
    levels: list[Level] = []

    def make(index, lower, upper, members, sparse, band_index, mid):
        anchor = _nearest(members, loc, mid) if members else None
        levels.append(Level(index, lower, upper, tuple(members), anchor, sparse, band_index))

    first_edge = origin + core[0] * width
    below = [it for it in order if loc[it] < first_edge]
    below_sparse = all(counts.get(k, 0) < min_items for k in range(lo_k, core[0])) if below else True
    make(0, -math.inf, first_edge, below, below_sparse, None, first_edge - width / 2)
    for i, k in enumerate(core, start=1):
        lower, upper = origin + k * width, origin + (k + 1) * width
        members = [it for it in order if band[it] == k]
        make(i, lower, upper, members, len(members) < min_items, k, (lower + upper) / 2)
    last_edge = origin + (core[-1] + 1) * width
    above = [it for it in order if loc[it] >= last_edge]
    above_sparse = all(counts.get(k, 0) < min_items for k in range(core[-1] + 1, hi_k + 1)) if above else True
    make(len(core) + 1, last_edge, math.inf, above, above_sparse, None, last_edge + width / 2)

    profile = ProficiencyProfile(levels, loc, {}, origin, target_p, {
        "ability_estimator": "EAP",
        "level_width": width,
        "min_items": min_items,
        "anchor_rule": "item nearest the level midpoint; open levels use the half-width point next to their finite edge",
    })
    if abilities:
        for group, est in abilities.items():
            theta = est.eap if isinstance(est, AbilityEstimates) else np.asarray(est, dtype=float)
            profile.student_distribution[str(group)] = student_distribution(profile, theta)
    return profile


def student_distribution(profile: ProficiencyProfile, theta) -> list[float]:
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0:
        return [0.0] * len(profile.levels)
    out = []
    for lv in profile.levels:
        out.append(float(100.0 * np.mean((theta >= lv.lower) & (theta < lv.upper))))
    return out


@dataclass(frozen=True)
class LevelCheck:
    index: int
    bottom_mean_p: float | None
    top_mean_p: float | None
    bottom_deviation: float | None
    top_deviation: float | None
    note: str = ""


def verify_level_semantics(profile: ProficiencyProfile, model: IrtModel) -> list[LevelCheck]:
    """Mean model probability over each level's items for students at its edges.

    Open-ended levels are evaluated over the ``width``-logit band next to their
    finite edge.
    """
    width = profile.meta.get("level_width", LEVEL_WIDTH)
    pos = {it: j for j, it in enumerate(model.items)}
    out = []
    for lv in profile.levels:
        if not lv.items:
            out.append(LevelCheck(lv.index, None, None, None, None, "empty level skipped"))
            continue
        lower = lv.lower if math.isfinite(lv.lower) else lv.upper - width
        upper = lv.upper if math.isfinite(lv.upper) else lv.lower + width
        idx = [pos[it] for it in lv.items]
        a, b = model.a[idx], model.b[idx]
        p_lo = float(expit(a * (lower - b)).mean())
        p_hi = float(expit(a * (upper - b)).mean())
        note = "" if math.isfinite(lv.lower) and math.isfinite(lv.upper) else "open level, evaluated on adjacent band"
        out.append(LevelCheck(lv.index, p_lo, p_hi, p_lo - BOTTOM_TARGET, p_hi - TOP_TARGET, note))
    return out
