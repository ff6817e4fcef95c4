"""Parameter sweeps over (p, q, lambda1, lambda2) and feature counts."""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import DataMatrix, LabelVector, compute_scatter
from .evaluation import EvaluationReport, repeated_eval
from .pam import SolverConfig, pam_solve

LAMBDA_GRID = (1e-6, 1e-4, 1e-2, 1e0, 1e2, 1e4, 1e6)
PQ_GRID = (0.0, 0.5, 2.0 / 3.0)
FEATURE_COUNTS = tuple(range(10, 101, 10))
WORKERS_ENV = "BSUFS_WORKERS"


@dataclass(frozen=True)
class SweepCell:
    p: float
    q: float
    lambda1: float
    lambda2: float


def grid_cells(lambdas=LAMBDA_GRID, ps=PQ_GRID, qs=PQ_GRID) -> list[SweepCell]:
    return [SweepCell(p, q, l1, l2) for p, q, l1, l2 in itertools.product(ps, qs, lambdas, lambdas)]


def clamp_feature_counts(counts, d: int) -> list[int]:
    out = sorted({min(int(c), d) for c in counts if int(c) >= 1})
    return out


@dataclass
class CellResult:
    index: int
    cell: SweepCell
    config: SolverConfig
    scores: np.ndarray
    ranked: np.ndarray
    outer_iterations: int
    converged: bool
    monotone: bool
    evals: dict = field(default_factory=dict)  # n_features -> EvaluationReport

    def selected(self, s: int) -> np.ndarray:
        return self.ranked[:s]

    def decisive(self, s: int) -> bool:
        """True when the top-s scores strictly beat every other score, i.e. the
        selection does not depend on the index-order tie-break."""
        sc = self.scores[self.ranked]
        if sc[s - 1] <= 0:
            return False
        return s >= len(sc) or sc[s - 1] > sc[s]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "cell": {"p": self.cell.p, "q": self.cell.q,
                     "lambda1": self.cell.lambda1, "lambda2": self.cell.lambda2},
            "config": self.config.to_dict(),
            "scores": [float(v) for v in self.scores],
            "ranked_indices": [int(i) for i in self.ranked],
            "outer_iterations": self.outer_iterations,
            "converged": self.converged,
            "evaluations": {str(s): r.to_dict() for s, r in self.evals.items()},
        }


def _solve_cell(args):
    index, cell, x, s_mat, base = args
    cfg = SolverConfig(cell.lambda1, cell.lambda2, cell.p, cell.q, **base)
    state, sel = pam_solve(x, cfg, s_mat=s_mat)
    totals = state.trace.totals
    monotone = bool(np.all(np.diff(totals) <= 1e-10))
    return CellResult(index, cell, cfg, sel.scores, sel.ranked_indices, state.k,
                      state.converged, monotone)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(x: DataMatrix, cells, m: int, feature_counts=(), labels: LabelVector | None = None,
              k: int | None = None, reps: int = 50, seed: int = 0, workers: int | None = None,
              solver_kw: dict | None = None) -> list[CellResult]:
    """Solve every cell once, then evaluate each requested feature count.

    Evaluations are cached per distinct selected-feature set, so cells that
    agree on a selection share one k-means run.
    """
    s_mat = compute_scatter(x)
    base = dict(m=m, seed=seed)
    base.update(solver_kw or {})
    jobs = [(i, c, x, s_mat, base) for i, c in enumerate(cells)]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_cell, jobs, chunksize=8))
    else:
        results = [_solve_cell(j) for j in jobs]
    results.sort(key=lambda r: r.index)

    if labels is not None and feature_counts:
        k = labels.class_count if k is None else k
        cache: dict[tuple, EvaluationReport] = {}
        for res in results:
            for s in clamp_feature_counts(feature_counts, x.d):
                key = tuple(sorted(int(i) for i in res.selected(s)))
                if key not in cache:
                    pts = x.entries[list(key)].T
                    cache[key] = repeated_eval(pts, labels, k, reps, seed)
                res.evals[s] = cache[key]
    return results


def best_cells(results: list[CellResult]) -> dict[int, CellResult]:
    """Highest mean ACC per feature count; ties go to the earliest cell.

    Only decisive cells compete, unless no cell is decisive for that count. A
    cell whose penalty zeroed every row ranks features by index alone, and
    that arbitrary subset must not win on a lucky k-means score.
    """
    best: dict[int, CellResult] = {}
    counts = sorted({s for r in results for s in r.evals})
    for s in counts:
        pool = [r for r in results if s in r.evals and r.decisive(s)]
        if not pool:
            pool = [r for r in results if s in r.evals]
        for res in pool:
            cur = best.get(s)
            if cur is None or res.evals[s].acc_mean > cur.evals[s].acc_mean:
                best[s] = res
    return best
