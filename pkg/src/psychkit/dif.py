"""Differential item functioning between a reference and a focal group.

Three detectors (Mantel-Haenszel, logistic-regression LRT, Lord's chi-square),
iterative purification of the matching/anchor set, Benjamini-Hochberg
adjustment per method, and a 2-of-3 vote across methods.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats
from scipy.special import expit, log_expit

from . import irt
from .dataset import ResponseMatrix
from .inference import benjamini_hochberg

METHODS = ("mh", "logistic", "lord")
ETS_DELTA = -2.35


class DifError(ValueError):
    pass


@dataclass(frozen=True)
class DifItem:
    item: str
    statistic: float
    df: int
    p_value: float
    p_adjusted: float
    effect_size: float | None
    effect_class: str | None
    flagged: bool
    note: str = ""


@dataclass(frozen=True)
class DifResult:
    method: str
    reference: str
    focal: str
    anchors: tuple[str, ...]
    items: list[DifItem]
    meta: dict = field(default_factory=dict)

    def by_item(self) -> dict[str, DifItem]:
        return {r.item: r for r in self.items}

    @property
    def flagged(self) -> frozenset[str]:
        return frozenset(r.item for r in self.items if r.flagged)


def ets_class(delta: float) -> str:
    d = abs(delta)
    if d <= 1.0:
        return "negligible"
    if d < 1.5:
        return "moderate"
    return "large"


def jodoin_gierl_class(delta_r2: float) -> str:
    if delta_r2 < 0.035:
        return "negligible"
    if delta_r2 < 0.07:
        return "moderate"
    return "large"


# ---------------------------------------------------------------- group plumbing

@dataclass(frozen=True)
class _Design:
    x: np.ndarray  # float responses, rows restricted to the two groups
    focal: np.ndarray  # bool mask
    items: tuple[str, ...]
    reference_label: str
    focal_label: str


def _labels(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, (str, int, np.integer)):
        return (str(value),)
    return tuple(str(v) for v in value)


def _design(matrix: ResponseMatrix, group_column: str, reference=None, focal=None) -> _Design:
    col = matrix.column(group_column)
    ref, foc = _labels(reference), _labels(focal)
    if not ref or not foc:
        levels = sorted(set(col.tolist()))
        if len(levels) != 2:
            raise DifError(f"column {group_column!r} has {len(levels)} levels {levels}; pass reference= and focal= explicitly")
        ref = ref or tuple(v for v in levels if v not in foc)[:1]
        foc = foc or tuple(v for v in levels if v not in ref)[:1]
    if set(ref) & set(foc):
        raise DifError("reference and focal groups overlap")
    in_ref, in_foc = np.isin(col, ref), np.isin(col, foc)
    if not in_ref.any() or not in_foc.any():
        raise DifError(f"group absent from data: reference={ref} n={in_ref.sum()}, focal={foc} n={in_foc.sum()}")
    keep = in_ref | in_foc
    return _Design(
        matrix.responses[keep].astype(float),
        in_foc[keep],
        tuple(matrix.items),
        "+".join(ref),
        "+".join(foc),
    )


def _anchor_index(items: Sequence[str], anchors: Iterable[str] | None) -> np.ndarray:
    if anchors is None:
        return np.arange(len(items))
    anchors = list(anchors)
    unknown = set(anchors) - set(items)
    if unknown:
        raise DifError(f"unknown anchor items {sorted(unknown)}")
    if not anchors:
        raise DifError("anchor set is empty")
    return np.array([items.index(a) for a in anchors])


def _matching_scores(x: np.ndarray, anchor_idx: np.ndarray, include_studied: bool) -> np.ndarray:
    """Matching score per (student, studied item): anchor total, with the studied
    item added (if not an anchor) or removed (if ``include_studied`` is False)."""
    base = x[:, anchor_idx].sum(axis=1)
    J = x.shape[1]
    in_anchor = np.zeros(J, dtype=bool)
    in_anchor[anchor_idx] = True
    scores = np.repeat(base[:, None], J, axis=1)
    if include_studied:
        scores[:, ~in_anchor] += x[:, ~in_anchor]
    else:
        scores[:, in_anchor] -= x[:, in_anchor]
    return scores


def _finish(method, design, anchors, stats_, alpha, meta) -> DifResult:
    """Attach BH-adjusted p-values and flags; ``stats_`` rows are
    (item, stat, df, p, effect, class, note)."""
    ok = [i for i, s in enumerate(stats_) if np.isfinite(s[3])]
    adj = np.full(len(stats_), np.nan)
    if ok:
        adj[ok] = benjamini_hochberg([stats_[i][3] for i in ok])
    items = [
        DifItem(item, float(st), int(df), float(p), float(pa), eff, cls, bool(np.isfinite(pa) and pa < alpha), note)
        for (item, st, df, p, eff, cls, note), pa in zip(stats_, adj)
    ]
    return DifResult(method, design.reference_label, design.focal_label, tuple(anchors), items, meta)


# ---------------------------------------------------------------- Mantel-Haenszel

def mh_statistics(correct: np.ndarray, focal: np.ndarray, strata: np.ndarray) -> tuple[float, float]:
    """Continuity-corrected MH chi-square and common odds ratio for one item.

    Reference-correct is the 'A' cell, so alpha > 1 favours the reference group.
    Strata with a single student or only one group carry no information and are
    skipped.
    """
    num = den = sum_a = sum_e = sum_v = 0.0
    used = 0
    for s in np.unique(strata):
        m = strata == s
        t = m.sum()
        f = focal[m]
        n_f = f.sum()
        n_r = t - n_f
        if t < 2 or n_f == 0 or n_r == 0:
            continue
        u = correct[m]
        A = float(u[~f].sum())
        B = n_r - A
        C = float(u[f].sum())
        D = n_f - C
        m1 = A + C
        m0 = t - m1
        num += A * D / t
        den += B * C / t
        sum_a += A
        sum_e += n_r * m1 / t
        sum_v += n_r * n_f * m1 * m0 / (t * t * (t - 1))
        used += 1
    if used == 0:
        raise DifError("no stratum contains both groups")
    if num == 0 and den == 0:
        raise DifError("common odds ratio undefined (all strata degenerate)")
    alpha_mh = np.inf if den == 0 else num / den
    if sum_v == 0:
        return 0.0, float(alpha_mh)
    chi2 = max(abs(sum_a - sum_e) - 0.5, 0.0) ** 2 / sum_v
    return float(chi2), float(alpha_mh)


def _mh(design: _Design, anchors, include_studied=True, alpha=0.05) -> DifResult:
    idx = _anchor_index(design.items, anchors)
    scores = _matching_scores(design.x, idx, include_studied)
    rows = []
    for j, item in enumerate(design.items):
        try:
            chi2, a_mh = mh_statistics(design.x[:, j], design.focal, scores[:, j])
        except DifError as exc:
            rows.append((item, np.nan, 1, np.nan, None, None, str(exc)))
            continue
        delta = ETS_DELTA * np.log(a_mh) if a_mh > 0 else np.inf
        rows.append((item, chi2, 1, float(stats.chi2.sf(chi2, 1)), float(delta), ets_class(delta), ""))
    meta = {"matching": "anchor total" + (" incl. studied item" if include_studied else " excl. studied item"), "continuity_correction": True}
    return _finish("mh", design, [design.items[i] for i in idx], rows, alpha, meta)


def mantel_haenszel(matrix, group_column, anchor_items=None, *, reference=None, focal=None, include_studied=True, alpha=0.05) -> DifResult:
    return _mh(_design(matrix, group_column, reference, focal), anchor_items, include_studied, alpha)


# ---------------------------------------------------------------- logistic regression

class SeparationError(DifError):
    pass


def logistic_fit(X: np.ndarray, y: np.ndarray, max_iter: int = 100, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Binary logit by iteratively reweighted least squares; returns (beta, loglik)."""
    beta = np.zeros(X.shape[1])
    ybar = y.mean()
    beta[0] = np.log(ybar / (1 - ybar))
    ll_old = -np.inf
    for _ in range(max_iter):
        eta = X @ beta
        p = expit(eta)
        w = p * (1 - p)
        H = X.T @ (w[:, None] * X)
        g = X.T @ (y - p)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            raise SeparationError("singular information matrix") from None
        t = 1.0
        for _half in range(30):
            cand = beta + t * step
            eta_c = X @ cand
            ll = float(y @ log_expit(eta_c) + (1 - y) @ log_expit(-eta_c))
            if ll >= ll_old - 1e-12:
                break
            t /= 2
        beta = cand
        if np.max(np.abs(beta)) > 50:
            raise SeparationError("coefficients diverge (separation)")
        if abs(ll - ll_old) < tol * (1 + abs(ll)):
            return beta, ll
        ll_old = ll
    raise SeparationError("IRLS did not converge")


def nagelkerke_r2(ll_model: float, ll_null: float, n: int) -> float:
    cox_snell = 1 - np.exp(2.0 / n * (ll_null - ll_model))
    return float(cox_snell / (1 - np.exp(2.0 / n * ll_null)))


def _logistic(design: _Design, anchors, include_studied=True, alpha=0.05) -> DifResult:
    idx = _anchor_index(design.items, anchors)
    scores = _matching_scores(design.x, idx, include_studied)
    g = design.focal.astype(float)
    n = g.size
    rows = []
    for j, item in enumerate(design.items):
        y = design.x[:, j]
        s = scores[:, j]
        if y.min() == y.max():
            rows.append((item, np.nan, 2, np.nan, None, None, "item has zero variance"))
            continue
        if y[g == 1].min() == y[g == 1].max() or y[g == 0].min() == y[g == 0].max():
            rows.append((item, np.nan, 2, np.nan, None, None, "item has zero variance within a group"))
            continue
        sd = s.std()
        sc = (s - s.mean()) / (sd if sd > 0 else 1.0)
        ones = np.ones(n)
        p = y.mean()
        ll_null = n * (p * np.log(p) + (1 - p) * np.log(1 - p))
        try:
            _, ll0 = logistic_fit(np.column_stack([ones, sc]), y)
            _, ll1 = logistic_fit(np.column_stack([ones, sc, g, g * sc]), y)
        except SeparationError as exc:
            rows.append((item, np.nan, 2, np.nan, None, None, f"skipped: {exc}"))
            continue
        lrt = max(2 * (ll1 - ll0), 0.0)
        dr2 = nagelkerke_r2(ll1, ll_null, n) - nagelkerke_r2(ll0, ll_null, n)
        rows.append((item, lrt, 2, float(stats.chi2.sf(lrt, 2)), float(dr2), jodoin_gierl_class(dr2), ""))
    meta = {"test": "uniform + non-uniform (2 df)", "effect": "Nagelkerke delta R2"}
    return _finish("logistic", design, [design.items[i] for i in idx], rows, alpha, meta)


def logistic_dif(matrix, group_column, anchor_items=None, *, reference=None, focal=None, include_studied=True, alpha=0.05) -> DifResult:
    return _logistic(_design(matrix, group_column, reference, focal), anchor_items, include_studied, alpha)


# ---------------------------------------------------------------- Lord's chi-square

@dataclass
class _GroupFits:
    ref: irt.IrtModel
    foc: irt.IrtModel
    cov_ref: list
    cov_foc: list


def _fit_groups(design: _Design, model_kind: str, min_group_size: int) -> _GroupFits:
    out = []
    for mask, label in ((~design.focal, design.reference_label), (design.focal, design.focal_label)):
        if mask.sum() < min_group_size:
            raise DifError(f"group {label!r} has {mask.sum()} rows; Lord's test needs >= {min_group_size}")
        x = design.x[mask]
        model = irt.fit(x, model_kind, items=design.items)
        if not model.converged:
            raise DifError(f"{model_kind} fit did not converge for group {label!r}")
        out.append((model, irt.item_covariances(model, x)))
    return _GroupFits(out[0][0], out[1][0], out[0][1], out[1][1])


def mean_sigma(b_ref: np.ndarray, b_foc: np.ndarray, var_ref=None, var_foc=None) -> tuple[float, float]:
    """Slope/intercept putting focal difficulties on the reference scale.

    With sampling variances supplied, anchors are weighted by
    1 / max(var_ref, var_foc) (robust mean/sigma), so a poorly estimated
    difficulty cannot dominate the transformation.
    """
    if var_ref is None or var_foc is None:
        w = np.ones(b_ref.size)
    else:
        w = 1.0 / np.maximum(np.maximum(var_ref, var_foc), 1e-12)
    w = w / w.sum()
    m_ref, m_foc = w @ b_ref, w @ b_foc
    sd_ref = np.sqrt(w @ (b_ref - m_ref) ** 2)
    sd_foc = np.sqrt(w @ (b_foc - m_foc) ** 2)
    A = float(sd_ref / sd_foc) if b_ref.size >= 2 and sd_foc > 0 else 1.0
    return A, float(m_ref - A * m_foc)


def _lord(design: _Design, anchors, fits: _GroupFits, alpha=0.05) -> DifResult:
    idx = _anchor_index(design.items, anchors)
    two = fits.ref.kind == "2PL"
    k = 1 if two else 0  # position of b in the per-item covariance block
    var_ref = np.array([fits.cov_ref[j][k, k] for j in idx])
    var_foc = np.array([fits.cov_foc[j][k, k] for j in idx])
    A, B = mean_sigma(fits.ref.b[idx], fits.foc.b[idx], var_ref, var_foc)
    rows = []
    for j, item in enumerate(design.items):
        if two:
            d = np.array([fits.ref.a[j] - fits.foc.a[j] / A, fits.ref.b[j] - (A * fits.foc.b[j] + B)])
            T = np.diag([1.0 / A, A])
        else:
            d = np.array([fits.ref.b[j] - (A * fits.foc.b[j] + B)])
            T = np.array([[A]])
        S = fits.cov_ref[j] + T @ fits.cov_foc[j] @ T.T
        try:
            chi2 = float(d @ np.linalg.solve(S, d))
        except np.linalg.LinAlgError:
            rows.append((item, np.nan, d.size, np.nan, None, None, "singular combined covariance"))
            continue
        rows.append((item, chi2, d.size, float(stats.chi2.sf(chi2, d.size)), None, None, ""))
    meta = {"model": fits.ref.kind, "equating": "robust mean/sigma on anchor difficulties (inverse-variance weights)", "A": A, "B": B}
    return _finish("lord", design, [design.items[i] for i in idx], rows, alpha, meta)


def lords_chi2(matrix, group_column, anchor_items=None, model_kind="2PL", *, reference=None, focal=None, alpha=0.05, min_group_size=200) -> DifResult:
    design = _design(matrix, group_column, reference, focal)
    fits = _fit_groups(design, model_kind, min_group_size)
    return _lord(design, anchor_items, fits, alpha)


# ---------------------------------------------------------------- purification + synthesis

@dataclass(frozen=True)
class DifVote:
    item: str
    votes: int
    verdict: str
    methods: tuple[str, ...]


@dataclass(frozen=True)
class PurificationTrace:
    rounds: list[list[str]]
    stop_reason: str


@dataclass(frozen=True)
class DifAnalysis:
    results: dict[str, DifResult]
    synthesis: list[DifVote]
    trace: dict[str, PurificationTrace]
    errors: dict[str, str]

    def votes(self) -> dict[str, int]:
        return {v.item: v.votes for v in self.synthesis}


def _purify(detect, items: tuple[str, ...], max_rounds: int) -> tuple[DifResult, PurificationTrace]:
    anchors = list(items)
    history: list[frozenset] = []
    result = None
    reason = "max_rounds"
    for _ in range(max_rounds):
        result = detect(anchors)
        flags = result.flagged
        if flags in history[:-1]:
            history.append(flags)
            reason = "cycle"
            break
        repeated = bool(history) and flags == history[-1]
        history.append(flags)
        if repeated:
            reason = "stable"
            break
        new_anchors = [it for it in items if it not in flags]
        if not new_anchors:
            reason = "anchor set exhausted"
            break
        if new_anchors == anchors:
            reason = "stable"
            break
        anchors = new_anchors
    return result, PurificationTrace([sorted(f, key=items.index) for f in history], reason)


def purify_and_synthesize(
    matrix: ResponseMatrix,
    group_column: str,
    methods: Sequence[str] = METHODS,
    max_rounds: int = 10,
    *,
    reference=None,
    focal=None,
    alpha: float = 0.05,
    include_studied: bool = True,
    model_kind: str = "2PL",
    min_group_size: int = 200,
    min_votes: int = 2,
) -> DifAnalysis:
    design = _design(matrix, group_column, reference, focal)
    results, traces, errors = {}, {}, {}
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown DIF method {method!r}")
        try:
            if method == "mh":
                detect = lambda anc: _mh(design, anc, include_studied, alpha)  # noqa: E731
            elif method == "logistic":
                detect = lambda anc: _logistic(design, anc, include_studied, alpha)  # noqa: E731
            else:
                fits = _fit_groups(design, model_kind, min_group_size)
                detect = lambda anc, fits=fits: _lord(design, anc, fits, alpha)  # noqa: E731
            results[method], traces[method] = _purify(detect, design.items, max_rounds)
        except DifError as exc:
            errors[method] = str(exc)
    synthesis = []
    for item in design.items:
        by = tuple(m for m in results if results[m].by_item()[item].flagged)
        synthesis.append(DifVote(item, len(by), "DIF" if len(by) >= min_votes else "NoDIF", by))
    return DifAnalysis(results, synthesis, traces, errors)
