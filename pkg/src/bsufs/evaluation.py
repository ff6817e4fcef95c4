"""Clustering-based evaluation: k-means, ACC with optimal label matching, NMI,
and mean/std over repeated k-means runs."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import BadK, LengthMismatch


@dataclass(frozen=True)
class ClusterAssignment:
    assignments: np.ndarray
    k: int
    inertia: float
    n_iter: int = 0
    inertia_history: tuple = ()


def _sq_dists(points, centers):
    d2 = (
        np.einsum("ij,ij->i", points, points)[:, None]
        - 2.0 * points @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.maximum(d2, 0.0)


def _kmeans_pp(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = _sq_dists(points, centers[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total))
            idx = min(idx, n - 1)
        centers[j] = points[idx]
        closest = np.minimum(closest, _sq_dists(points, centers[j:j + 1])[:, 0])
    return centers


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300) -> ClusterAssignment:
    """Lloyd's algorithm from k-means++ seeding.

    Empty clusters are re-seeded with the point farthest from its center.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if int(k) != k or not (1 <= k <= n):
        raise BadK(f"k must lie in [1, {n}], got {k}")
    if pts.shape[1] < 1:
        raise BadK("need at least one feature column")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(pts, k, rng)
    labels = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(pts, centers)
        new_labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(n), new_labels].sum())
        history.append(inertia)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, pts)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        if not nonempty.all():
            far = d2[np.arange(n), labels]
            for j in np.flatnonzero(~nonempty):
                idx = int(np.argmax(far))
                centers[j] = pts[idx]
                far[idx] = -1.0
    d2 = _sq_dists(pts, centers)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return ClusterAssignment(labels, int(k), inertia, it, tuple(history))


def _as_labels(v):
    return np.asarray(getattr(v, "labels", getattr(v, "assignments", v)))


def confusion_matrix(y, c) -> np.ndarray:
    y, c = _as_labels(y), _as_labels(c)
    if y.shape != c.shape:
        raise LengthMismatch(f"label vectors differ in length: {y.shape[0]} vs {c.shape[0]}")
    _, yi = np.unique(y, return_inverse=True)
    _, ci = np.unique(c, return_inverse=True)
    counts = np.zeros((yi.max(initial=-1) + 1, ci.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(counts, (yi, ci), 1)
    return counts


def acc(y, c) -> float:
    """Clustering accuracy under the best one-to-one cluster-to-class map."""
    counts = confusion_matrix(y, c)
    n = counts.sum()
    if n == 0:
        raise LengthMismatch("empty label vectors")
    size = max(counts.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return float(padded[rows, cols].sum() / n)


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(y, c) -> float:
    """Mutual information normalised by sqrt(H(y) H(c)), natural logs."""
    counts = confusion_matrix(y, c)
    n = counts.sum()
    if n == 0:
        raise LengthMismatch("empty label vectors")
    hy = _entropy(counts.sum(axis=1))
    hc = _entropy(counts.sum(axis=0))
    if hy == 0.0 or hc == 0.0:
        # both single-block partitions are identical; otherwise no shared information
        return 1.0 if hy == hc else 0.0
    pxy = counts / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    mi = float(np.sum(pxy[nz] * np.log(pxy[nz] / (px @ py)[nz])))
    return float(min(max(mi / np.sqrt(hy * hc), 0.0), 1.0))


@dataclass
class EvaluationReport:
    acc_mean: float
    acc_std: float
    nmi_mean: float
    nmi_std: float
    reps: int
    per_rep: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def repeated_eval(points, y, k: int, reps: int = 50, base_seed: int = 0,
                  max_iter: int = 300) -> EvaluationReport:
    """k-means with seeds ``base_seed .. base_seed + reps - 1``; population std."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    y = _as_labels(y)
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{pts.shape[0]} points but {y.shape[0]} labels")
    per_rep = []
    for r in range(reps):
        c = kmeans(pts, k, seed=base_seed + r, max_iter=max_iter)
        per_rep.append((acc(y, c), nmi(y, c)))
    arr = np.array(per_rep)
    return EvaluationReport(
        acc_mean=float(arr[:, 0].mean()),
        acc_std=float(arr[:, 0].std()),
        nmi_mean=float(arr[:, 1].mean()),
        nmi_std=float(arr[:, 1].std()),
        reps=int(reps),
        per_rep=[[float(a), float(b)] for a, b in per_rep],
    )
