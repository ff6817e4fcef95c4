"""Proximal operators of the scalar ``|x|^q`` and row-wise ``||x||^p`` penalties.

For ``0 <= q < 1`` the prox of ``lam * |x|^q`` is

    argmin_x  lam * |x|^q + (x - a)^2 / 2

which is zero inside a dead zone ``|a| <= kappa(lam, q)`` and jumps to a value
of magnitude at least ``c(lam, q)`` outside it. q = 0 (hard thresholding),
q = 1/2 and q = 2/3 have closed forms; any other q is handled by a bracketed
Newton iteration on the stationarity equation

    x - |a| + lam * q * x^(q - 1) = 0,   x > 0.

Boundary ties ``|a| == kappa`` resolve to 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BsufsError, InvalidP, InvalidQ, NewtonNoConvergence

_HALF = 0.5
_TWO_THIRDS = 2.0 / 3.0


@dataclass(frozen=True)
class ProxThresholds:
    kappa: float
    c_val: float


def _check_exponent(q, exc=InvalidQ, name="q"):
    q = float(q)
    if not (0.0 <= q < 1.0) or not np.isfinite(q):
        raise exc(f"{name} must lie in [0, 1), got {q}")
    return q


def _check_lambda(lam):
    lam = float(lam)
    if not lam >= 0.0 or not np.isfinite(lam):
        raise BsufsError(f"penalty weight must be finite and nonnegative, got {lam}")
    return lam


def _closed_form_kind(q):
    if q == 0.0:
        return "hard"
    if abs(q - _HALF) <= 1e-15:
        return "half"
    if abs(q - _TWO_THIRDS) <= 1e-15:
        return "two_thirds"
    return None


def prox_thresholds(lam, q) -> ProxThresholds:
    """Dead-zone threshold ``kappa`` and jump size ``c`` of the ``|.|^q`` prox.

    c     = (2 lam (1-q))^(1/(2-q))
    kappa = c + lam q c^(q-1) = (2-q) lam^(1/(2-q)) (2(1-q))^((q-1)/(2-q))

    At ``|a| == kappa`` the prox objective takes the same value at 0 and at c.
    """
    q = _check_exponent(q)
    lam = _check_lambda(lam)
    if lam == 0.0:
        return ProxThresholds(0.0, 0.0)
    e = 1.0 / (2.0 - q)
    c_val = (2.0 * lam * (1.0 - q)) ** e
    kappa = (2.0 - q) * lam ** e * (2.0 * (1.0 - q)) ** ((q - 1.0) / (2.0 - q))
    return ProxThresholds(float(kappa), float(c_val))


def _half_root(mag, lam):
    # Cardano-type trigonometric solution for q = 1/2.
    phi = np.arccos((lam / 4.0) * (mag / 3.0) ** -1.5)
    return (2.0 / 3.0) * mag * (1.0 + np.cos(2.0 * np.pi / 3.0 - 2.0 * phi / 3.0))


def _two_thirds_root(mag, lam):
    # Quartic solution for q = 2/3, written for the doubled weight 2*lam.
    lam2 = 2.0 * lam
    theta = np.arccosh((27.0 / 16.0) * mag ** 2 * lam2 ** -1.5)
    phi = (2.0 / np.sqrt(3.0)) * lam2 ** 0.25 * np.sqrt(np.cosh(theta / 3.0))
    return ((phi + np.sqrt(np.maximum(2.0 * mag / phi - phi ** 2, 0.0))) / 2.0) ** 3


def _newton_root(mag, lam, q, lo, max_iter=100):
    """Largest positive root of ``x - mag + lam q x^(q-1)`` on ``[lo, mag]``.

    The residual is increasing and convex on the bracket, so Newton started at
    the right endpoint decreases monotonically; bisection guards round-off.
    """
    x = mag.copy()
    lo = np.full_like(mag, lo)
    hi = mag.copy()
    lq = lam * q
    for _ in range(max_iter):
        h = x - mag + lq * x ** (q - 1.0)
        dh = 1.0 - lq * (1.0 - q) * x ** (q - 2.0)
        hi = np.where(h > 0, x, hi)
        lo = np.where(h < 0, x, lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = x - h / dh
        bad = ~((x_new >= lo) & (x_new <= hi)) | (h == 0)
        x_new = np.where(bad & (h != 0), 0.5 * (lo + hi), x_new)
        x_new = np.where(h == 0, x, x_new)
        step = np.abs(x_new - x)
        x = x_new
        if np.all(step <= 1e-15 * np.maximum(x, 1.0)):
            return x
    h = x - mag + lq * x ** (q - 1.0)
    if np.all(np.abs(h) <= 1e-10 * np.maximum(mag, 1.0)):
        return x
    raise NewtonNoConvergence("prox root iteration did not converge")


def prox_lq(a, lam, q, method: str = "auto") -> np.ndarray:
    """Element-wise prox of ``lam * |x|^q`` evaluated at every entry of ``a``.

    ``method="newton"`` forces the generic root-finding path even when a closed
    form exists (used for cross-checks).
    """
    q = _check_exponent(q)
    lam = _check_lambda(lam)
    a = np.asarray(a, dtype=float)
    if lam == 0.0:
        return a.copy()
    mag = np.abs(a)
    th = prox_thresholds(lam, q)
    out = np.zeros_like(a)
    live = mag > th.kappa
    if not live.any():
        return out
    kind = _closed_form_kind(q) if method == "auto" else None
    if method not in ("auto", "newton"):
        raise ValueError(f"unknown method {method!r}")
    m = mag[live]
    if kind == "hard":
        root = m
    elif kind == "half":
        root = _half_root(m, lam)
    elif kind == "two_thirds":
        root = _two_thirds_root(m, lam)
    else:
        root = _newton_root(m, lam, q, th.c_val)
    root = np.clip(root, 0.0, m)
    # the root beats 0 strictly outside the dead zone; keep the guard for round-off
    if q == 0.0:
        keep = np.ones_like(root, dtype=bool)
    else:
        keep = lam * root ** q + 0.5 * (root - m) ** 2 < 0.5 * m ** 2
    out[live] = np.where(keep, root, 0.0) * np.sign(a[live])
    return out


def scalar_prox_lq(a: float, lam: float, q: float, method: str = "auto") -> float:
    return float(prox_lq(np.array([a], dtype=float), lam, q, method)[0])


def matrix_prox_lq(y, lam, q) -> np.ndarray:
    return prox_lq(y, lam, q)


def matrix_row_prox_l2p(z, lam, p) -> np.ndarray:
    """Row-wise prox of ``lam * ||row||^p``; each output row is a nonnegative
    multiple of the corresponding input row."""
    p = _check_exponent(p, InvalidP, "p")
    lam = _check_lambda(lam)
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        return matrix_row_prox_l2p(z[None, :], lam, p)[0]
    if lam == 0.0:
        return z.copy()
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    if p == 0.0:
        keep = norms > np.sqrt(2.0 * lam)
        return np.where(keep[:, None], z, 0.0)
    shrunk = prox_lq(norms, lam, p)
    scale = np.divide(shrunk, norms, out=np.zeros_like(norms), where=norms > 0)
    return z * scale[:, None]


def row_prox_l2p(z, lam, p) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("row_prox_l2p expects a vector")
    return matrix_row_prox_l2p(z, lam, p)


def lq_penalty(x, q, zero_tol: float = 1e-12) -> float:
    """``sum |x_ij|^q`` with the q = 0 convention of counting nonzeros."""
    mag = np.abs(np.asarray(x, dtype=float))
    if q == 0.0:
        return float(np.count_nonzero(mag > zero_tol))
    return float(np.sum(mag ** q))


def l2p_penalty(x, p, zero_tol: float = 1e-12) -> float:
    """``sum_i ||x^i||^p`` over rows; p = 0 counts nonzero rows."""
    norms = np.linalg.norm(np.asarray(x, dtype=float), axis=1)
    if p == 0.0:
        return float(np.count_nonzero(norms > zero_tol))
    return float(np.sum(norms ** p))
