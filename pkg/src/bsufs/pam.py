"""Proximal alternating minimization for bi-sparse PCA feature selection.

Solves

    min_{W,U,V}  -tr(W^T S W) + lam1 ||V||_{2,p}^p + lam2 ||U||_q^q
                 + b1/2 ||W - U||_F^2 + b2/2 ||W - V||_F^2,   W^T W = I_m

by cycling W (Riemannian trust region), U (element-wise lq prox) and
V (row-wise l2,p prox), each with a proximal damping term. Features are
ranked by the row norms of V.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import DataMatrix, compute_scatter
from .errors import BadFeatureCount, BsufsError, ShapeMismatch
from .prox import _check_exponent, InvalidP, l2p_penalty, lq_penalty, matrix_prox_lq, matrix_row_prox_l2p
from .stiefel import TrConfig, WSubproblemData, solve_w_subproblem

log = logging.getLogger(__name__)

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    lambda1: float
    lambda2: float
    p: float
    q: float
    m: int
    beta1: float = 1.0
    beta2: float = 1.0
    tau1: float = 1e-3
    tau2: float = 1e-3
    tau3: float = 1e-3
    rel_tol: float = 1e-4
    max_outer: int = 500
    seed: int = 0
    tr: TrConfig | None = None

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise BsufsError(f"{name} must be finite and nonnegative, got {v}")
        _check_exponent(self.p, InvalidP, "p")
        _check_exponent(self.q)
        for name in ("beta1", "beta2", "tau1", "tau2", "tau3", "rel_tol"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise BsufsError(f"{name} must be positive, got {v}")
        if int(self.m) != self.m or self.m < 1:
            raise BsufsError(f"m must be a positive integer, got {self.m}")
        if self.max_outer < 0:
            raise BsufsError("max_outer must be nonnegative")
        if self.tr is None:
            object.__setattr__(self, "tr", TrConfig.default(self.m))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        tr = d.pop("tr", None)
        return cls(**d, tr=TrConfig(**tr) if tr is not None else None)


def default_m(d: int, n: int, clusters: int | None = None) -> int:
    """Frame width: the cluster count when known (and < d), else min(10, d-1)."""
    if clusters is not None and 1 <= clusters < d:
        m = clusters
    else:
        m = min(10, d - 1)
    return max(1, min(m, d, n - 1))


@dataclass(frozen=True)
class ObjectiveBreakdown:
    trace_term: float
    l2p_term: float
    lq_term: float
    coupling_u: float
    coupling_v: float

    @property
    def total(self) -> float:
        return self.trace_term + self.l2p_term + self.lq_term + self.coupling_u + self.coupling_v


@dataclass
class IterRecord:
    k: int
    objective: ObjectiveBreakdown
    grad_norm: float
    inner_iters: int
    ms: float


TRACE_COLUMNS = ("k", "total", "trace_term", "l2p_term", "lq_term", "coupling_u",
                 "coupling_v", "grad_norm", "inner_iters", "ms")


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def append(self, rec: IterRecord) -> None:
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.objective.total for r in self.records])

    def rows(self):
        for r in self.records:
            o = r.objective
            yield (r.k, o.total, o.trace_term, o.l2p_term, o.lq_term, o.coupling_u,
                   o.coupling_v, r.grad_norm, r.inner_iters, r.ms)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for row in self.rows():
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])


@dataclass
class SolverState:
    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    k: int = 0
    trace: IterationTrace = field(default_factory=IterationTrace)
    converged: bool = False


@dataclass(frozen=True)
class SelectionResult:
    scores: np.ndarray
    ranked_indices: np.ndarray
    selected: np.ndarray


def objective(state: SolverState, s_mat: np.ndarray, cfg: SolverConfig) -> ObjectiveBreakdown:
    w, u, v = state.w, state.u, state.v
    d = s_mat.shape[0]
    if w.shape[0] != d or u.shape != w.shape or v.shape != w.shape:
        raise ShapeMismatch("W, U, V must be d x m with d matching S")
    return ObjectiveBreakdown(
        trace_term=float(-np.sum(w * (s_mat @ w))),
        l2p_term=cfg.lambda1 * l2p_penalty(v, cfg.p, ZERO_TOL) if cfg.lambda1 else 0.0,
        lq_term=cfg.lambda2 * lq_penalty(u, cfg.q, ZERO_TOL) if cfg.lambda2 else 0.0,
        coupling_u=0.5 * cfg.beta1 * float(np.sum((w - u) ** 2)),
        coupling_v=0.5 * cfg.beta2 * float(np.sum((w - v) ** 2)),
    )


def blend(new, old, w_new: float, w_old: float) -> np.ndarray:
    """Convex combination ``(w_new*new + w_old*old)/(w_new + w_old)``."""
    tot = w_new + w_old
    return (w_new / tot) * new + (w_old / tot) * old


def update_u(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    """Element-wise prox step for U; expects ``state.w`` to hold W^{k+1}."""
    y = blend(state.w, state.u, cfg.beta1, cfg.tau2)
    return matrix_prox_lq(y, cfg.lambda2 / (cfg.beta1 + cfg.tau2), cfg.q)


def update_v(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    """Row-wise prox step for V; expects ``state.w`` to hold W^{k+1}."""
    z = blend(state.w, state.v, cfg.beta2, cfg.tau3)
    return matrix_row_prox_l2p(z, cfg.lambda1 / (cfg.beta2 + cfg.tau3), cfg.p)


def top_eigvecs(s_mat: np.ndarray, m: int) -> np.ndarray:
    _, vecs = np.linalg.eigh(s_mat)
    w = vecs[:, ::-1][:, :m].copy()
    # fix signs so the largest-magnitude entry of each column is positive
    idx = np.argmax(np.abs(w), axis=0)
    w *= np.where(w[idx, np.arange(m)] < 0, -1.0, 1.0)
    return w


def score_and_select(v: np.ndarray, s: int) -> SelectionResult:
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    if int(s) != s or not (1 <= s <= d):
        raise BadFeatureCount(f"number of features must lie in [1, {d}], got {s}")
    scores = np.linalg.norm(v, axis=1)
    ranked = np.argsort(-scores, kind="stable")
    return SelectionResult(scores, ranked, ranked[: int(s)].copy())


def initial_state(s_mat: np.ndarray, cfg: SolverConfig, init: str = "pca") -> SolverState:
    d = s_mat.shape[0]
    if init == "pca":
        w0 = top_eigvecs(s_mat, cfg.m)
    elif init == "random":
        rng = np.random.default_rng(cfg.seed)
        w0, r = np.linalg.qr(rng.standard_normal((d, cfg.m)))
        w0 *= np.where(np.diag(r) < 0, -1.0, 1.0)
    else:
        raise ValueError(f"unknown init {init!r}")
    return SolverState(w0, w0.copy(), w0.copy())


def pam_solve(x: DataMatrix, cfg: SolverConfig, n_features: int | None = None,
              init: str = "pca", s_mat: np.ndarray | None = None):
    """Run the alternating scheme to convergence.

    Returns ``(state, selection)``. The relative objective change test
    ``|f_{k+1} - f_k| / max(|f_k|, 1) < rel_tol`` or ``max_outer`` iterations stops
    the loop. ``s_mat`` may be passed to reuse a precomputed scatter.
    """
    if s_mat is None:
        s_mat = compute_scatter(x)
    d = s_mat.shape[0]
    if cfg.m > min(d, x.n - 1):
        raise BsufsError(f"m={cfg.m} exceeds min(d, n-1)={min(d, x.n - 1)}")
    if n_features is None:
        n_features = d
    if not (1 <= n_features <= d):
        raise BadFeatureCount(f"number of features must lie in [1, {d}], got {n_features}")

    state = initial_state(s_mat, cfg, init)
    f_prev = objective(state, s_mat, cfg)
    state.trace.append(IterRecord(0, f_prev, math.nan, 0, 0.0))
    k = 0
    while True:
        t0 = time.perf_counter()
        sub = WSubproblemData(s_mat, state.u, state.v, state.w, cfg.beta1, cfg.beta2, cfg.tau1)
        tr = solve_w_subproblem(sub, state.w, cfg.tr)
        state.w = tr.w
        # U before V: the element-wise step filters noise ahead of row selection
        state.u = update_u(state, cfg)
        state.v = update_v(state, cfg)
        f_new = objective(state, s_mat, cfg)
        ms = 1e3 * (time.perf_counter() - t0)
        state.k = k + 1
        state.trace.append(IterRecord(k + 1, f_new, tr.grad_norm, tr.inner_iterations, ms))
        if f_new.total > f_prev.total + 1e-10:
            log.warning("objective increased at k=%d: %.17g -> %.17g", k + 1,
                        f_prev.total, f_new.total)
        rel = abs(f_new.total - f_prev.total) / max(abs(f_prev.total), 1.0)
        f_prev = f_new
        if rel < cfg.rel_tol:
            state.converged = True
            break
        if state.k >= cfg.max_outer:
            break
        k += 1
    return state, score_and_select(state.v, n_features)


def with_overrides(cfg: SolverConfig, **kw) -> SolverConfig:
    if "m" in kw and "tr" not in kw:
        kw["tr"] = None
    return replace(cfg, **kw)
