"""Stiefel-manifold geometry and a Riemannian trust-region solver for the
W-block of the PAM scheme.

The block objective is

    g(W) = -tr(W^T S W) + b1/2 ||W - U||^2 + b2/2 ||W - V||^2 + t1/2 ||W - W_k||^2

minimised over ``St(d, m) = {W : W^T W = I_m}``. Tangent vectors are stored as
ambient ``d x m`` arrays and the metric is the embedded Frobenius one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import NotTangent, RankDeficient, ShapeMismatch

# Relative floor added to both sides of the trust-region ratio once the
# actual decrease is nonnegative; keeps rho meaningful at round-off level.
_RHO_REGULARIZATION = 1e3


@dataclass(frozen=True)
class TrConfig:
    delta_bar: float
    delta0: float
    rho_prime: float = 0.1
    grad_tol: float = 1e-6
    max_outer: int = 100
    max_inner: int | None = None
    kappa_cg: float = 0.1
    theta_cg: float = 1.0

    def __post_init__(self):
        if not (0 < self.delta0 <= self.delta_bar):
            raise ValueError("need 0 < delta0 <= delta_bar")
        if not (0 <= self.rho_prime < 0.25):
            raise ValueError("rho_prime must lie in [0, 1/4)")
        if self.grad_tol <= 0 or self.max_outer < 0:
            raise ValueError("grad_tol must be positive and max_outer nonnegative")

    @classmethod
    def default(cls, m: int, **overrides) -> "TrConfig":
        delta_bar = math.sqrt(m)
        kw = dict(delta_bar=delta_bar, delta0=delta_bar / 8)
        kw.update(overrides)
        return cls(**kw)

    def inner_cap(self, d: int, m: int) -> int:
        if self.max_inner is not None:
            return max(1, int(self.max_inner))
        return max(1, d * m - m * (m + 1) // 2)


@dataclass(frozen=True)
class WSubproblemData:
    s: np.ndarray
    u_prev: np.ndarray
    v_prev: np.ndarray
    w_prev: np.ndarray
    beta1: float
    beta2: float
    tau1: float
    sigma: float = field(init=False)
    anchor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.s.shape[0]
        if self.s.shape != (d, d):
            raise ShapeMismatch(f"S must be square, got {self.s.shape}")
        shape = self.w_prev.shape
        if shape[0] != d or self.u_prev.shape != shape or self.v_prev.shape != shape:
            raise ShapeMismatch("U, V, W_k must share one d x m shape matching S")
        if min(self.beta1, self.beta2, self.tau1) < 0:
            raise ValueError("penalty and proximal weights must be nonnegative")
        # grad g(W) = -2 S W + sigma W - anchor
        object.__setattr__(self, "sigma", self.beta1 + self.beta2 + self.tau1)
        object.__setattr__(
            self, "anchor",
            self.beta1 * self.u_prev + self.beta2 * self.v_prev + self.tau1 * self.w_prev,
        )

    @property
    def shape(self):
        return self.w_prev.shape


def _check(w, data: WSubproblemData):
    if w.shape != data.shape:
        raise ShapeMismatch(f"W has shape {w.shape}, expected {data.shape}")


def sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b))


def g_value(w, data: WSubproblemData) -> float:
    _check(w, data)
    val = -np.sum(w * (data.s @ w))
    val += 0.5 * data.beta1 * np.sum((w - data.u_prev) ** 2)
    val += 0.5 * data.beta2 * np.sum((w - data.v_prev) ** 2)
    val += 0.5 * data.tau1 * np.sum((w - data.w_prev) ** 2)
    return float(val)


def euclidean_grad_g(w, data: WSubproblemData) -> np.ndarray:
    _check(w, data)
    return -2.0 * (data.s @ w) + data.sigma * w - data.anchor


def euclidean_hess_vec(w, data: WSubproblemData, m_dir) -> np.ndarray:
    """Action of ``-2 I_m (x) S + sigma I`` on ``m_dir`` (independent of W)."""
    _check(w, data)
    _check(m_dir, data)
    return -2.0 * (data.s @ m_dir) + data.sigma * m_dir


def project_tangent(w, ambient) -> np.ndarray:
    if w.shape != ambient.shape:
        raise ShapeMismatch(f"shape {ambient.shape} does not match W {w.shape}")
    return ambient - w @ sym(w.T @ ambient)


def tangency_error(w, m_dir) -> float:
    a = w.T @ m_dir
    return float(np.linalg.norm(a + a.T))


def riemannian_grad(w, data: WSubproblemData) -> np.ndarray:
    return project_tangent(w, euclidean_grad_g(w, data))


def _hess_terms(w, egrad, ehess_m, m_dir):
    return project_tangent(
        w,
        ehess_m
        - m_dir @ sym(w.T @ egrad)
        - w @ sym(m_dir.T @ egrad)
        - w @ sym(w.T @ ehess_m),
    )


def riemannian_hess_apply(w, data: WSubproblemData, m_dir, tol: float = 1e-8) -> np.ndarray:
    """Riemannian Hessian of g at W applied to the tangent vector ``m_dir``."""
    _check(m_dir, data)
    scale = max(1.0, float(np.linalg.norm(m_dir)))
    if tangency_error(w, m_dir) > tol * scale:
        raise NotTangent("direction is not tangent to St(d, m) at W")
    egrad = euclidean_grad_g(w, data)
    return _hess_terms(w, egrad, euclidean_hess_vec(w, data, m_dir), m_dir)


def retract(w, m_dir) -> np.ndarray:
    """QR retraction: Q factor of ``W + M`` with a positive diagonal in R."""
    if w.shape != m_dir.shape:
        raise ShapeMismatch("W and M must have the same shape")
    q, r = np.linalg.qr(w + m_dir)
    diag = np.diag(r)
    tiny = np.finfo(float).eps * max(1.0, float(np.abs(diag).max(initial=0.0))) * max(w.shape)
    if np.any(np.abs(diag) <= tiny):
        raise RankDeficient("W + M does not have full column rank")
    return q * np.where(diag < 0, -1.0, 1.0)


class _LocalModel:
    """Quadratic model of g at a fixed W with the expensive pieces cached."""

    def __init__(self, w, data: WSubproblemData):
        self.w = w
        self.data = data
        self.sw = data.s @ w
        self.egrad = -2.0 * self.sw + data.sigma * w - data.anchor
        self.grad = project_tangent(w, self.egrad)
        self.sym_wg = sym(w.T @ self.egrad)
        self.value = (
            -np.sum(w * self.sw)
            + 0.5 * data.beta1 * np.sum((w - data.u_prev) ** 2)
            + 0.5 * data.beta2 * np.sum((w - data.v_prev) ** 2)
            + 0.5 * data.tau1 * np.sum((w - data.w_prev) ** 2)
        )

    def hess(self, m_dir):
        ehess = -2.0 * (self.data.s @ m_dir) + self.data.sigma * m_dir
        # the two W*sym(.) terms are normal and vanish under the projection
        return project_tangent(self.w, ehess - m_dir @ self.sym_wg)

    def predicted(self, eta, h_eta=None):
        if h_eta is None:
            h_eta = self.hess(eta)
        return inner(self.grad, eta) + 0.5 * inner(eta, h_eta)


@dataclass
class TcgResult:
    eta: np.ndarray
    h_eta: np.ndarray
    model_delta: float  # m_W(eta) - m_W(0), never positive
    iterations: int
    stop_reason: str


def _truncated_cg(model: _LocalModel, delta: float, max_inner: int,
                  kappa: float = 0.1, theta: float = 1.0) -> TcgResult:
    """Steihaug-Toint truncated conjugate gradients on the tangent space."""
    grad = model.grad
    eta = np.zeros_like(grad)
    h_eta = np.zeros_like(grad)
    r = grad.copy()
    r_r = inner(r, r)
    norm_r0 = math.sqrt(r_r)
    if norm_r0 == 0.0:
        return TcgResult(eta, h_eta, 0.0, 0, "zero gradient")
    direction = -r
    model_value = 0.0
    reason = "max inner iterations"
    j = 0
    for j in range(1, max_inner + 1):
        h_dir = model.hess(direction)
        d_hd = inner(direction, h_dir)
        e_pe, e_pd, d_pd = inner(eta, eta), inner(eta, direction), inner(direction, direction)
        alpha = r_r / d_hd if d_hd > 0 else math.inf
        e_pe_new = e_pe + 2.0 * alpha * e_pd + alpha * alpha * d_pd
        if d_hd <= 0 or e_pe_new >= delta * delta:
            tau = (-e_pd + math.sqrt(max(e_pd * e_pd + d_pd * (delta * delta - e_pe), 0.0))) / d_pd
            eta = eta + tau * direction
            h_eta = h_eta + tau * h_dir
            model_value = model.predicted(eta, h_eta)
            reason = "negative curvature" if d_hd <= 0 else "exceeded trust region"
            break
        new_eta = eta + alpha * direction
        new_h_eta = h_eta + alpha * h_dir
        new_value = inner(grad, new_eta) + 0.5 * inner(new_eta, new_h_eta)
        if new_value >= model_value:
            reason = "model increased"
            break
        eta, h_eta, model_value = new_eta, new_h_eta, new_value
        r = project_tangent(model.w, r + alpha * h_dir)
        r_r_old = r_r
        r_r = inner(r, r)
        if math.sqrt(r_r) <= norm_r0 * min(norm_r0 ** theta, kappa):
            reason = "reached target residual"
            break
        beta = r_r / r_r_old
        direction = project_tangent(model.w, -r + beta * direction)

    if model_value > 0.0 or not np.isfinite(model_value):
        eta, h_eta, model_value = _cauchy_step(model, delta)
        reason = "cauchy fallback"
    return TcgResult(eta, h_eta, model_value, j, reason)


def _cauchy_step(model: _LocalModel, delta: float):
    g = model.grad
    gn = math.sqrt(inner(g, g))
    hg = model.hess(g)
    ghg = inner(g, hg)
    t = delta / gn
    if ghg > 0:
        t = min(t, gn * gn / ghg)
    eta = -t * g
    h_eta = -t * hg
    return eta, h_eta, model.predicted(eta, h_eta)


def solve_tr_subproblem(w, data: WSubproblemData, delta: float, config: TrConfig) -> np.ndarray:
    """Approximate minimiser of the quadratic model inside ``||M|| <= delta``."""
    if delta <= 0:
        raise ValueError("trust-region radius must be positive")
    _check(w, data)
    model = _LocalModel(w, data)
    d, m = w.shape
    res = _truncated_cg(model, delta, config.inner_cap(d, m), config.kappa_cg, config.theta_cg)
    return res.eta


def _ratio(g_old: float, g_new: float, model_delta: float) -> float:
    pred = -model_delta
    if not pred > 0:
        return -math.inf
    actual = g_old - g_new
    if actual < 0:
        return actual / pred
    reg = max(1.0, abs(g_old)) * np.finfo(float).eps * _RHO_REGULARIZATION
    return (actual + reg) / (pred + reg)


def tr_ratio(w, data: WSubproblemData, m_dir) -> float:
    """Actual over predicted reduction for the step ``m_dir`` at W."""
    model = _LocalModel(w, data)
    model_delta = model.predicted(m_dir)
    if not -model_delta > 0:
        return -math.inf
    return _ratio(float(model.value), g_value(retract(w, m_dir), data), model_delta)


@dataclass
class TrResult:
    w: np.ndarray
    g: float
    grad_norm: float
    iterations: int
    accepted: int
    inner_iterations: int
    converged: bool


def solve_w_subproblem(data: WSubproblemData, w_init, config: TrConfig,
                       trace=None) -> TrResult:
    """Riemannian trust-region minimisation of g starting from ``w_init``.

    ``trace``, when given, is called with one dict per iteration.
    """
    _check(w_init, data)
    d, m = w_init.shape
    max_inner = config.inner_cap(d, m)
    w = w_init
    model = _LocalModel(w, data)
    grad_norm = math.sqrt(inner(model.grad, model.grad))
    if grad_norm < config.grad_tol:
        return TrResult(w, float(model.value), grad_norm, 0, 0, 0, True)

    delta = config.delta0
    accepted = inner_total = 0
    i = 0
    while True:
        tcg = _truncated_cg(model, delta, max_inner, config.kappa_cg, config.theta_cg)
        inner_total += tcg.iterations
        eta_norm = math.sqrt(inner(tcg.eta, tcg.eta))
        try:
            w_cand = retract(w, tcg.eta)
            g_cand = g_value(w_cand, data)
        except RankDeficient:
            w_cand, g_cand = None, math.inf
        g_old = float(model.value)
        rho = _ratio(g_old, g_cand, tcg.model_delta)

        if rho < 0.25:
            delta = delta / 4.0
        elif rho > 0.75 and eta_norm >= delta * (1.0 - 1e-8):
            delta = min(2.0 * delta, config.delta_bar)

        step_ok = rho > config.rho_prime and g_cand <= g_old
        if step_ok:
            w = w_cand
            model = _LocalModel(w, data)
            grad_norm = math.sqrt(inner(model.grad, model.grad))
            accepted += 1
        if trace is not None:
            trace({"i": i, "g": float(model.value), "grad_norm": grad_norm, "delta": delta,
                   "rho": rho, "accepted": step_ok, "inner": tcg.iterations,
                   "stop": tcg.stop_reason})
        i += 1
        if grad_norm < config.grad_tol or i >= config.max_outer:
            break
    return TrResult(w, float(model.value), grad_norm, i, accepted, inner_total,
                    grad_norm < config.grad_tol)
