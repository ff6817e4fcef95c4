"""Data containers, centering/scatter construction and CSV I/O.

Internally the sample matrix follows the feature-major convention: ``X`` has
shape ``(d, n)`` with one column per sample. On disk, CSV files are
sample-major (one row per sample) and are transposed on load.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, LengthMismatch, NonFiniteEntry, TooFewSamples


@dataclass(frozen=True)
class DataMatrix:
    """Validated ``d x n`` data matrix (rows are features, columns samples)."""

    entries: np.ndarray

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def fingerprint(self) -> dict:
        import hashlib

        digest = hashlib.sha256(np.ascontiguousarray(self.entries).tobytes()).hexdigest()
        return {"d": self.d, "n": self.n, "sha256": digest}


@dataclass(frozen=True)
class LabelVector:
    labels: np.ndarray
    class_count: int

    def __len__(self) -> int:
        return self.labels.shape[0]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def validate_data(raw) -> DataMatrix:
    """Check shape and finiteness of a ``d x n`` array and wrap it."""
    x = np.array(raw, dtype=float, copy=True)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataError(f"expected a 2-D matrix with at least one row, got shape {x.shape}")
    if x.shape[1] < 2:
        raise TooFewSamples(f"need at least 2 samples (columns), got {x.shape[1]}")
    bad = ~np.isfinite(x)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteEntry(row, col)
    return DataMatrix(_readonly(x))


def make_labels(labels, class_count: int | None = None) -> LabelVector:
    """Wrap integer labels; relabels arbitrary integer codes to ``0..c-1``."""
    y = np.asarray(labels)
    if y.ndim != 1:
        raise DataError("labels must be one-dimensional")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise DataError("labels must be integers")
    _, codes = np.unique(y, return_inverse=True)
    codes = codes.astype(np.int64)
    c = int(codes.max()) + 1 if codes.size else 0
    if class_count is not None:
        if class_count < c:
            raise DataError(f"declared class_count={class_count} but found {c} classes")
        c = int(class_count)
    return LabelVector(_readonly(codes), c)


def center_rows(x: np.ndarray) -> np.ndarray:
    return x - x.mean(axis=1, keepdims=True)


def compute_scatter(x: DataMatrix) -> np.ndarray:
    """Centered scatter ``X H X^T``.

    Computed from row-mean-centered data, so the ``n x n`` centering matrix is
    never formed.
    """
    xc = center_rows(x.entries)
    s = xc @ xc.T
    s = 0.5 * (s + s.T)
    return _readonly(s)


# --------------------------------------------------------------------------
# CSV I/O
# --------------------------------------------------------------------------

def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def read_csv(path) -> tuple[DataMatrix, list[str] | None]:
    """Read a sample-major CSV file, auto-detecting a header row.

    Returns the transposed ``d x n`` DataMatrix and the header (if any).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(t.strip() for t in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = None
    if not all(_is_number(t) for t in rows[0]):
        header = [t.strip() for t in rows[0]]
        rows = rows[1:]
    width = len(rows[0]) if rows else 0
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: row {i} has {len(r)} fields, expected {width}")
    try:
        arr = np.array([[float(t) for t in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if arr.ndim != 2 or arr.size == 0:
        raise DataError(f"{path}: no numeric rows")
    return validate_data(arr.T), header


def write_csv(path, x: DataMatrix, header: list[str] | None = None) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row in x.entries.T:
            w.writerow([repr(float(v)) for v in row])


def read_labels(path, n: int | None = None) -> LabelVector:
    """Read one integer label per line."""
    path = Path(path)
    vals = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            try:
                vals.append(int(tok))
            except ValueError:
                try:
                    f = float(tok)
                except ValueError:
                    f = None
                if f is None or f != int(f):
                    raise DataError(f"{path}:{lineno}: not an integer label: {tok!r}") from None
                vals.append(int(f))
    labels = make_labels(np.array(vals, dtype=np.int64))
    if n is not None and len(labels) != n:
        raise LengthMismatch(f"{path}: {len(labels)} labels for {n} samples")
    return labels


def write_labels(path, y: LabelVector) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in y.labels), encoding="utf-8")
