"""Synthetic benchmark generators: two informative features plus noise features.

``diamond9`` places nine Gaussian blobs on a 3x3 grid rotated by 45 degrees;
``dartboard1`` draws four concentric rings. Both append ``noise_dims``
standard-normal features. Informative features come first (indices 0 and 1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix, LabelVector, make_labels, validate_data
from .errors import BadSpec

KINDS = ("diamond9", "dartboard1")
DEFAULT_N = {"diamond9": 3000, "dartboard1": 1000}
DEFAULT_SCALE = {"diamond9": 2.0, "dartboard1": 3.0}
CLASSES = {"diamond9": 9, "dartboard1": 4}

RING_RADII = (0.25, 0.5, 0.75, 1.0)
RING_JITTER = 0.02
BLOB_STD_RATIO = 0.12


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str
    n: int | None = None
    seed: int = 0
    noise_dims: int = 7
    informative_scale: float | None = None

    def resolved(self) -> "SyntheticSpec":
        if self.kind not in KINDS:
            raise BadSpec(f"unknown synthetic kind {self.kind!r}; expected one of {KINDS}")
        n = DEFAULT_N[self.kind] if self.n is None else int(self.n)
        scale = DEFAULT_SCALE[self.kind] if self.informative_scale is None else float(self.informative_scale)
        if n < CLASSES[self.kind]:
            raise BadSpec(f"n={n} is smaller than the class count {CLASSES[self.kind]}")
        if self.noise_dims < 0:
            raise BadSpec("noise_dims must be nonnegative")
        if not scale > 0:
            raise BadSpec("informative_scale must be positive")
        return SyntheticSpec(self.kind, n, self.seed, int(self.noise_dims), scale)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    sigma: float = 0.0
    fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "salt_pepper"):
            raise BadSpec(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise BadSpec("sigma must be nonnegative")
        if not (0.0 <= self.fraction <= 1.0):
            raise BadSpec("fraction must lie in [0, 1]")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "NoiseSpec":
        """Parse ``gaussian:0.01`` or ``saltpepper:0.03``."""
        try:
            kind, val = text.split(":")
            val = float(val)
        except ValueError:
            raise BadSpec(f"cannot parse noise spec {text!r}") from None
        kind = kind.strip().lower().replace("-", "").replace("_", "")
        if kind == "gaussian":
            return cls("gaussian", sigma=val, seed=seed)
        if kind in ("saltpepper", "sp"):
            return cls("salt_pepper", fraction=val, seed=seed)
        raise BadSpec(f"unknown noise kind in {text!r}")


def _class_sizes(n: int, c: int) -> np.ndarray:
    sizes = np.full(c, n // c)
    sizes[: n % c] += 1
    return sizes


def _finish(info: np.ndarray, labels: np.ndarray, spec: SyntheticSpec, rng, c: int):
    noise = rng.standard_normal((spec.noise_dims, spec.n))
    x = np.vstack([info, noise])
    return validate_data(x), make_labels(labels, c)


def gen_diamond9(spec: SyntheticSpec) -> tuple[DataMatrix, LabelVector]:
    spec = spec.resolved()
    if spec.kind != "diamond9":
        raise BadSpec("gen_diamond9 needs kind='diamond9'")
    rng = np.random.default_rng(spec.seed)
    h = spec.informative_scale
    grid = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float) * h
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    centers = grid @ np.array([[c, s], [-s, c]])
    labels = np.repeat(np.arange(9), _class_sizes(spec.n, 9))
    pts = centers[labels] + BLOB_STD_RATIO * h * rng.standard_normal((spec.n, 2))
    return _finish(pts.T, labels, spec, rng, 9)


def gen_dartboard1(spec: SyntheticSpec) -> tuple[DataMatrix, LabelVector]:
    spec = spec.resolved()
    if spec.kind != "dartboard1":
        raise BadSpec("gen_dartboard1 needs kind='dartboard1'")
    rng = np.random.default_rng(spec.seed)
    scale = spec.informative_scale
    labels = np.repeat(np.arange(4), _class_sizes(spec.n, 4))
    radius = (np.asarray(RING_RADII)[labels] + RING_JITTER * rng.standard_normal(spec.n)) * scale
    angle = rng.uniform(0.0, 2.0 * np.pi, spec.n)
    pts = np.vstack([radius * np.cos(angle), radius * np.sin(angle)])
    return _finish(pts, labels, spec, rng, 4)


def generate(spec: SyntheticSpec) -> tuple[DataMatrix, LabelVector]:
    kind = spec.resolved().kind
    return gen_diamond9(spec) if kind == "diamond9" else gen_dartboard1(spec)


def corrupt(x: DataMatrix, noise: NoiseSpec) -> DataMatrix:
    """Additive Gaussian noise, or salt-and-pepper using per-feature min/max."""
    rng = np.random.default_rng(noise.seed)
    a = np.array(x.entries, dtype=float)
    if noise.kind == "gaussian":
        if noise.sigma == 0:
            return x
        a = a + noise.sigma * rng.standard_normal(a.shape)
    else:
        if noise.fraction == 0:
            return x
        hit = rng.random(a.shape) < noise.fraction
        high = rng.random(a.shape) < 0.5
        lo = a.min(axis=1, keepdims=True)
        hi = a.max(axis=1, keepdims=True)
        a = np.where(hit, np.where(high, hi, lo), a)
    return validate_data(a)
