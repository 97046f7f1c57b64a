"""1PL/2PL logistic models fitted by marginal maximum likelihood (Bock-Aitkin EM).

Parameterisation: P(theta) = 1 / (1 + exp(-a (theta - b))). Internally the
M-step works on the slope/intercept form z = a*theta + c with c = -a*b, where
each item's expected complete-data log-likelihood is concave.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import expit, log_expit, logsumexp

from .dataset import ResponseMatrix

SLOPE_BOUNDS = (0.05, 10.0)
KINDS = ("1PL", "2PL")


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(w < 0) or w.shape != nodes.shape:
            raise ValueError("quadrature weights must be non-negative and match the nodes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w / w.sum())

    @classmethod
    def normal(cls, n_nodes: int = 61, lo: float = -6.0, hi: float = 6.0) -> "QuadratureGrid":
        """Equally spaced nodes with standard-normal masses renormalised to 1."""
        nodes = np.linspace(lo, hi, n_nodes)
        return cls(nodes, stats.norm.pdf(nodes))


@dataclass(frozen=True)
class IrtModel:
    kind: str
    items: tuple[str, ...]
    a: np.ndarray
    b: np.ndarray
    log_likelihood: float
    n_params: int
    converged: bool
    n_iterations: int
    n_students: int
    ll_history: tuple[float, ...] = ()
    grid_size: int = 61
    tol: float = 1e-4
    meta: dict = field(default_factory=dict)

    def prob(self, theta) -> np.ndarray:
        """P(correct), shape (len(theta), n_items)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return expit(self.a[None, :] * (theta[:, None] - self.b[None, :]))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "items": list(self.items),
            "a": [float(v) for v in self.a],
            "b": [float(v) for v in self.b],
            "log_likelihood": float(self.log_likelihood),
            "n_params": self.n_params,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "n_students": self.n_students,
            "grid_size": self.grid_size,
            "tol": self.tol,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IrtModel":
        return cls(
            kind=d["kind"],
            items=tuple(d["items"]),
            a=np.asarray(d["a"], dtype=float),
            b=np.asarray(d["b"], dtype=float),
            log_likelihood=float(d["log_likelihood"]),
            n_params=int(d["n_params"]),
            converged=bool(d["converged"]),
            n_iterations=int(d["n_iterations"]),
            n_students=int(d.get("n_students", 0)),
            grid_size=int(d.get("grid_size", 61)),
            tol=float(d.get("tol", 1e-4)),
            meta=dict(d.get("meta", {})),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "IrtModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def n_params(kind: str, n_items: int) -> int:
    if kind == "1PL":
        return n_items + 1
    if kind == "2PL":
        return 2 * n_items
    raise ValueError(f"unknown model kind {kind!r}")


def _posterior(x: np.ndarray, slope: np.ndarray, intercept: np.ndarray, grid: QuadratureGrid):
    """Posterior over the grid for each row of ``x`` plus the marginal log-likelihood."""
    z = slope[:, None] * grid.nodes[None, :] + intercept[:, None]  # J x Q
    log_lik = x @ log_expit(z) + (1.0 - x) @ log_expit(-z)  # N x Q
    log_joint = log_lik + np.log(grid.weights)[None, :]
    log_marg = logsumexp(log_joint, axis=1)
    post = np.exp(log_joint - log_marg[:, None])
    return post, float(log_marg.sum())


def _item_objective(r, nq, theta, slope, intercept, ridge):
    z = slope[:, None] * theta[None, :] + intercept[:, None]
    f = (r * log_expit(z) + (nq[None, :] - r) * log_expit(-z)).sum(axis=1)
    if ridge:
        f -= 0.5 * ridge * ((slope - 1.0) ** 2 + intercept**2)
    return f


def _mstep_2pl(r, nq, theta, slope, intercept, ridge, n_newton=20):
    lo, hi = SLOPE_BOUNDS
    f_old = _item_objective(r, nq, theta, slope, intercept, ridge)
    for _ in range(n_newton):
        p = expit(slope[:, None] * theta[None, :] + intercept[:, None])
        resid = r - nq[None, :] * p
        w = nq[None, :] * p * (1 - p)
        ga = (resid * theta).sum(1) - ridge * (slope - 1.0)
        gc = resid.sum(1) - ridge * intercept
        haa = -(w * theta**2).sum(1) - ridge
        hac = -(w * theta).sum(1)
        hcc = -w.sum(1) - ridge
        det = haa * hcc - hac**2
        det = np.where(np.abs(det) < 1e-12, -1e-12, det)
        da = -(hcc * ga - hac * gc) / det
        dc = -(-hac * ga + haa * gc) / det
        new_s, new_c = slope.copy(), intercept.copy()
        done = np.zeros(slope.size, dtype=bool)
        step = 1.0
        for _half in range(30):
            cand_s = np.clip(slope + step * da, lo, hi)
            cand_c = intercept + step * dc
            f_new = _item_objective(r, nq, theta, cand_s, cand_c, ridge)
            ok = (f_new >= f_old - 1e-12) & ~done
            new_s[ok], new_c[ok] = cand_s[ok], cand_c[ok]
            done |= ok
            if done.all():
                break
            step /= 2
        f_new = _item_objective(r, nq, theta, new_s, new_c, ridge)
        moved = np.max(np.abs(new_s - slope)) + np.max(np.abs(new_c - intercept))
        slope, intercept, f_old = new_s, new_c, f_new
        if moved < 1e-10:
            break
    return slope, intercept


def _mstep_1pl(r, nq, theta, a, intercept, ridge, n_newton=20):
    lo, hi = SLOPE_BOUNDS
    J = intercept.size

    def objective(a_, c_):
        return _item_objective(r, nq, theta, np.full(J, a_), c_, ridge).sum()

    f_old = objective(a, intercept)
    for _ in range(n_newton):
        p = expit(a * theta[None, :] + intercept[:, None])
        resid = r - nq[None, :] * p
        w = nq[None, :] * p * (1 - p)
        g = np.empty(J + 1)
        g[:J] = resid.sum(1) - ridge * intercept
        g[J] = (resid * theta).sum() - ridge * J * (a - 1.0)
        H = np.zeros((J + 1, J + 1))
        H[np.arange(J), np.arange(J)] = -w.sum(1) - ridge
        H[:J, J] = H[J, :J] = -(w * theta).sum(1)
        H[J, J] = -(w * theta**2).sum() - ridge * J
        delta = -np.linalg.solve(H, g)
        step = 1.0
        for _half in range(30):
            a_new = float(np.clip(a + step * delta[J], lo, hi))
            c_new = intercept + step * delta[:J]
            f_new = objective(a_new, c_new)
            if f_new >= f_old - 1e-12:
                break
            step /= 2
        else:
            a_new, c_new, f_new = a, intercept, f_old
        moved = abs(a_new - a) + np.max(np.abs(c_new - intercept))
        a, intercept, f_old = a_new, c_new, f_new
        if moved < 1e-10:
            break
    return a, intercept


def _columns(matrix, items: Sequence[str] | None):
    if isinstance(matrix, ResponseMatrix):
        names = tuple(matrix.items)
        x = matrix.responses
        if items is not None:
            idx = [names.index(it) for it in items]
            x, names = x[:, idx], tuple(items)
        return np.asarray(x, dtype=float), names
    x = np.asarray(matrix, dtype=float)
    names = tuple(items) if items is not None else tuple(f"Q{j + 1}" for j in range(x.shape[1]))
    if len(names) != x.shape[1]:
        raise ValueError("item names do not match the number of columns")
    return x, names


def fit(
    matrix: ResponseMatrix | np.ndarray,
    kind: str = "2PL",
    grid: QuadratureGrid | None = None,
    tol: float = 1e-4,
    max_iter: int = 500,
    ridge: float = 0.0,
    items: Sequence[str] | None = None,
) -> IrtModel:
    """Fit a 1PL (common estimated slope) or 2PL model by Bock-Aitkin EM.

    Non-convergence within ``max_iter`` returns the last iterate with
    ``converged=False`` and emits a :class:`ConvergenceWarning`.
    """
    kind = kind.upper()
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    grid = grid or QuadratureGrid.normal()
    x, names = _columns(matrix, items)
    n, J = x.shape
    if J < 2:
        raise ValueError("need at least 2 items")
    pvals = x.mean(axis=0)
    degenerate = [names[j] for j in np.where((pvals == 0) | (pvals == 1))[0]]
    if degenerate:
        raise ValueError(f"items with all-correct or all-incorrect responses have no finite difficulty: {degenerate}")

    theta = grid.nodes
    intercept = np.log(pvals / (1 - pvals))
    slope = np.ones(J)
    a_shared = 1.0
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        post, ll = _posterior(x, slope, intercept, grid)
        if history and ll < history[-1] - 1e-6 * max(1.0, abs(ll)):
            warnings.warn(f"marginal log-likelihood decreased at EM iteration {it}", ConvergenceWarning, stacklevel=2)
        history.append(ll)
        nq = post.sum(axis=0)
        r = x.T @ post
        old_a, old_b = slope.copy(), -intercept / slope
        if kind == "2PL":
            slope, intercept = _mstep_2pl(r, nq, theta, slope, intercept, ridge)
        else:
            a_shared, intercept = _mstep_1pl(r, nq, theta, a_shared, intercept, ridge)
            slope = np.full(J, a_shared)
        change = max(np.max(np.abs(slope - old_a)), np.max(np.abs(-intercept / slope - old_b)))
        if change < tol:
            converged = True
            break
    _, ll = _posterior(x, slope, intercept, grid)
    history.append(ll)
    if not converged:
        warnings.warn(f"EM did not converge in {max_iter} iterations", ConvergenceWarning, stacklevel=2)
    return IrtModel(
        kind=kind,
        items=names,
        a=slope.copy(),
        b=-intercept / slope,
        log_likelihood=ll,
        n_params=n_params(kind, J),
        converged=converged,
        n_iterations=it,
        n_students=n,
        ll_history=tuple(history),
        grid_size=grid.nodes.size,
        tol=tol,
        meta={"estimator": "Bock-Aitkin EM", "slope_1pl": "shared, estimated", "ridge": ridge},
    )


def marginal_log_likelihood(model: IrtModel, matrix, grid: QuadratureGrid | None = None) -> float:
    x, _ = _columns(matrix, model.items)
    return _posterior(x, model.a, -model.a * model.b, grid or QuadratureGrid.normal(model.grid_size))[1]


def _gradient(x, kind, params, grid):
    """Gradient of the marginal log-likelihood w.r.t. (a, b) parameters."""
    J = x.shape[1]
    if kind == "2PL":
        a, b = params[:J], params[J:]
    else:
        b, a = params[:J], np.full(J, params[J])
    post, _ = _posterior(x, a, -a * b, grid)
    nq = post.sum(0)
    r = x.T @ post
    p = expit(a[:, None] * (grid.nodes[None, :] - b[:, None]))
    resid = r - nq[None, :] * p
    g_b = -a * resid.sum(1)
    g_a = (resid * (grid.nodes[None, :] - b[:, None])).sum(1)
    if kind == "2PL":
        return np.concatenate([g_a, g_b])
    return np.concatenate([g_b, [g_a.sum()]])


def parameter_covariance(model: IrtModel, matrix, grid: QuadratureGrid | None = None, h: float = 1e-5) -> np.ndarray:
    """Inverse observed information at the solution.

    Parameter order is (a_1..a_J, b_1..b_J) for 2PL and (b_1..b_J, a) for 1PL.
    The Hessian is a central difference of the analytic (Fisher-identity) gradient.
    """
    grid = grid or QuadratureGrid.normal(model.grid_size)
    x, _ = _columns(matrix, model.items)
    J = len(model.items)
    if model.kind == "2PL":
        params = np.concatenate([model.a, model.b])
    else:
        params = np.concatenate([model.b, [model.a[0]]])
    k = params.size
    H = np.empty((k, k))
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        H[:, i] = (_gradient(x, model.kind, params + e, grid) - _gradient(x, model.kind, params - e, grid)) / (2 * h)
    H = 0.5 * (H + H.T)
    return np.linalg.inv(-H)


def item_covariances(model: IrtModel, matrix, grid: QuadratureGrid | None = None) -> list[np.ndarray]:
    """Per-item covariance blocks: 2x2 over (a, b) for 2PL, 1x1 over b for 1PL."""
    cov = parameter_covariance(model, matrix, grid)
    J = len(model.items)
    if model.kind == "2PL":
        return [cov[np.ix_([j, J + j], [j, J + j])] for j in range(J)]
    return [cov[j:j + 1, j:j + 1] for j in range(J)]


@dataclass(frozen=True)
class AbilityEstimates:
    student_ids: tuple[str, ...]
    eap: np.ndarray
    posterior_sd: np.ndarray
    eap_reliability: float


def eap(matrix, model: IrtModel, grid: QuadratureGrid | None = None) -> AbilityEstimates:
    """Posterior mean and SD of ability under a N(0, 1) prior."""
    grid = grid or QuadratureGrid.normal(model.grid_size)
    if isinstance(matrix, ResponseMatrix):
        missing = set(model.items) - set(matrix.items)
        if missing:
            raise ValueError(f"model items missing from data: {sorted(missing)}")
        ids = tuple(str(s) for s in matrix.student_ids)
    else:
        ids = tuple(str(i) for i in range(np.asarray(matrix).shape[0]))
    x, _ = _columns(matrix, model.items)
    if x.shape[1] == 0:
        raise ValueError("no model items available for ability estimation")
    # one posterior per distinct pattern so identical rows get bit-identical estimates
    patterns, inverse = np.unique(x, axis=0, return_inverse=True)
    post, _ = _posterior(patterns, model.a, -model.a * model.b, grid)
    inverse = inverse.reshape(-1)
    mean = (post @ grid.nodes)[inverse]
    var = (post @ grid.nodes**2)[inverse] - mean**2
    sd = np.sqrt(np.maximum(var, 0.0))
    v = mean.var()
    rel = float(v / (v + np.mean(sd**2)))
    return AbilityEstimates(ids, mean, sd, rel)


@dataclass(frozen=True)
class CurveTable:
    theta: np.ndarray
    items: tuple[str, ...]
    p: np.ndarray  # len(theta) x n_items
    info: np.ndarray
    tif: np.ndarray
    sem: np.ndarray
    reliability: np.ndarray

    def to_rows(self) -> tuple[list[str], list[list[float]]]:
        header = ["theta"] + [f"P_{it}" for it in self.items] + [f"I_{it}" for it in self.items] + ["TIF", "SEM", "reliability"]
        data = np.column_stack([self.theta, self.p, self.info, self.tif, self.sem, self.reliability])
        return header, data.tolist()


def theta_grid(lo: float = -6.0, hi: float = 6.0, step: float = 0.01) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1
    if n < 1 or hi < lo:
        raise ValueError("empty theta grid")
    return lo + step * np.arange(n)


def curves(model: IrtModel, theta=None, *, lo: float = -6.0, hi: float = 6.0, step: float = 0.01) -> CurveTable:
    theta = theta_grid(lo, hi, step) if theta is None else np.asarray(theta, dtype=float)
    if theta.size == 0:
        raise ValueError("empty theta grid")
    p = model.prob(theta)
    info = model.a[None, :] ** 2 * p * (1 - p)
    tif = info.sum(axis=1)
    sem = 1 / np.sqrt(tif)
    return CurveTable(theta, model.items, p, info, tif, sem, 1 - sem**2)


@dataclass(frozen=True)
class FitComparison:
    aic: dict[str, float]
    bic: dict[str, float]
    log_likelihood: dict[str, float]
    n_params: dict[str, int]
    lrt: float
    df: int
    p_value: float


def information_criteria(log_likelihood: float, n_par: int, n_obs: int) -> tuple[float, float]:
    return -2 * log_likelihood + 2 * n_par, -2 * log_likelihood + n_par * np.log(n_obs)


def lrt(ll_small: float, p_small: int, ll_large: float, p_large: int) -> tuple[float, int, float]:
    stat = 2 * (ll_large - ll_small)
    df = p_large - p_small
    if df <= 0:
        raise ValueError("larger model must have more parameters")
    return stat, df, float(stats.chi2.sf(max(stat, 0.0), df))


def compare(model_small: IrtModel, model_large: IrtModel, n_students: int | None = None) -> FitComparison:
    if tuple(model_small.items) != tuple(model_large.items):
        raise ValueError("models were fitted on different item sets")
    n = n_students or model_small.n_students
    if model_small.kind == model_large.kind:
        if model_small.n_params != model_large.n_params:
            raise ValueError("models are not nested")
        stat, df = 2 * (model_large.log_likelihood - model_small.log_likelihood), 0
        p = 1.0 if abs(stat) < 1e-9 else float("nan")
    elif (model_small.kind, model_large.kind) == ("1PL", "2PL"):
        stat, df, p = lrt(model_small.log_likelihood, model_small.n_params, model_large.log_likelihood, model_large.n_params)
    else:
        raise ValueError(f"{model_small.kind} is not nested in {model_large.kind}")
    out = {}
    for m in (model_small, model_large):
        out[m.kind] = information_criteria(m.log_likelihood, m.n_params, n)
    return FitComparison(
        aic={k: v[0] for k, v in out.items()},
        bic={k: v[1] for k, v in out.items()},
        log_likelihood={model_small.kind: model_small.log_likelihood, model_large.kind: model_large.log_likelihood},
        n_params={model_small.kind: model_small.n_params, model_large.kind: model_large.n_params},
        lrt=float(stat),
        df=df,
        p_value=p,
    )
