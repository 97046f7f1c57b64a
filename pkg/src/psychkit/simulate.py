"""Synthetic response data for recovery, calibration and power studies."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .dataset import ResponseMatrix


def simulate_2pl(a, b, n_students: int | None = None, rng=None, theta=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw 0/1 responses under a 2PL; returns ``(responses, theta)``."""
    rng = np.random.default_rng(rng)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if theta is None:
        theta = rng.standard_normal(n_students)
    theta = np.asarray(theta, dtype=float)
    p = expit(a[None, :] * (theta[:, None] - b[None, :]))
    return (rng.random(p.shape) < p).astype(np.int8), theta


def random_item_bank(n_items: int, rng=None, a_range=(0.6, 2.5), b_range=(-3.0, 3.0)):
    rng = np.random.default_rng(rng)
    return rng.uniform(*a_range, n_items), rng.uniform(*b_range, n_items)


def as_matrix(responses, groups=None, grades=None, items=None, prefix: str = "S") -> ResponseMatrix:
    """Wrap a raw 0/1 array into a :class:`ResponseMatrix`.

    ``groups`` fills the gender column, ``grades`` the grade column.
    """
    x = np.asarray(responses, dtype=np.int8)
    n, k = x.shape
    items = tuple(items) if items is not None else tuple(f"Q{j + 1}" for j in range(k))
    genders = np.asarray(groups).astype(str) if groups is not None else np.array(["u"] * n)
    grades = np.asarray(grades, dtype=int) if grades is not None else np.zeros(n, dtype=int)
    return ResponseMatrix(
        items=items,
        student_ids=np.array([f"{prefix}{i:05d}" for i in range(n)]),
        grades=grades,
        genders=genders,
        responses=x,
    )


def two_group_dif(
    a,
    b,
    n_per_group: int,
    rng=None,
    dif_item: int | None = None,
    dif_shift: float = 0.0,
    focal_mean: float = 0.0,
) -> ResponseMatrix:
    """Reference/focal sample with optional uniform DIF (focal difficulty + shift)."""
    rng = np.random.default_rng(rng)
    b_focal = np.array(b, dtype=float)
    if dif_item is not None:
        b_focal[dif_item] += dif_shift
    x_ref, _ = simulate_2pl(a, b, n_per_group, rng)
    x_foc, _ = simulate_2pl(a, b_focal, rng=rng, theta=rng.normal(focal_mean, 1.0, n_per_group))
    groups = np.array(["ref"] * n_per_group + ["focal"] * n_per_group)
    return as_matrix(np.vstack([x_ref, x_foc]), groups=groups)


def synthetic_cohort(
    a,
    b,
    grade_sizes: dict[int, int],
    grade_means: dict[int, float],
    rng=None,
    genders=("boys", "girls"),
    items=None,
) -> ResponseMatrix:
    """Multi-grade cohort under one 2PL item bank with grade-specific ability means."""
    rng = np.random.default_rng(rng)
    blocks, grades, sexes = [], [], []
    for g, n in grade_sizes.items():
        x, _ = simulate_2pl(a, b, rng=rng, theta=rng.normal(grade_means[g], 1.0, n))
        blocks.append(x)
        grades += [g] * n
        sexes += list(rng.choice(genders, n))
    return as_matrix(np.vstack(blocks), groups=sexes, grades=grades, items=items)


COHORT_SIZES = {3: 709, 4: 748, 5: 585, 6: 624}
COHORT_MEANS = {3: -0.5, 4: 0.0, 5: 0.4, 6: 0.35}


def published_cohort(rng=None, sizes=None, means=None) -> ResponseMatrix:
    """Grades 3-6 cohort under the published grade-agnostic item bank.

    A very easy item Q2 (a = 1, b = -3.5) is inserted so that the file has the
    full 25-item layout; analyses normally exclude it.
    """
    from .reference import item_bank

    items, a, b = item_bank()
    a = np.insert(a, 1, 1.0)
    b = np.insert(b, 1, -3.5)
    items = (items[0], "Q2") + tuple(items[1:])
    return synthetic_cohort(a, b, sizes or COHORT_SIZES, means or COHORT_MEANS, rng=rng, items=items)
