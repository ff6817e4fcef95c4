import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsufs.errors import NotTangent, RankDeficient, ShapeMismatch
from bsufs.stiefel import (
    TrConfig, WSubproblemData, euclidean_grad_g, g_value, inner, project_tangent, retract,
    riemannian_grad, riemannian_hess_apply, solve_tr_subproblem, solve_w_subproblem, tr_ratio,
)
from oracles import random_psd_with_gap, random_stiefel


def make_problem(rng, d, m, weights=(1.0, 1.0, 1e-3)):
    a = rng.standard_normal((d, d))
    s = a @ a.T / d
    u, v, wk = (rng.standard_normal((d, m)) for _ in range(3))
    return WSubproblemData(s, u, v, wk, *weights)


def tangent(rng, w):
    return project_tangent(w, rng.standard_normal(w.shape))


def test_gradient_is_tangent(rng):
    data = make_problem(rng, 12, 3)
    w = random_stiefel(rng, 12, 3)
    g = riemannian_grad(w, data)
    a = w.T @ g
    assert np.linalg.norm(a + a.T) < 1e-12


def test_euclidean_gradient_finite_difference(rng):
    data = make_problem(rng, 8, 2)
    w = rng.standard_normal((8, 2))
    h = 1e-6
    fd = np.zeros_like(w)
    for idx in np.ndindex(w.shape):
        e = np.zeros_like(w)
        e[idx] = h
        fd[idx] = (g_value(w + e, data) - g_value(w - e, data)) / (2 * h)
    np.testing.assert_allclose(euclidean_grad_g(w, data), fd, rtol=1e-6, atol=1e-6)


def test_hessian_matches_gradient_derivative(rng):
    # P_W(d/dt grad g(R(W + t xi))) at t = 0 is the Riemannian Hessian applied to xi
    data = make_problem(rng, 10, 3)
    w = random_stiefel(rng, 10, 3)
    xi = tangent(rng, w)
    h = 1e-5
    dg = (riemannian_grad(retract(w, h * xi), data) - riemannian_grad(retract(w, -h * xi), data)) / (2 * h)
    fd = project_tangent(w, dg)
    hx = riemannian_hess_apply(w, data, xi)
    assert np.linalg.norm(fd - hx) / np.linalg.norm(hx) < 1e-6


def test_hessian_rejects_non_tangent(rng):
    data = make_problem(rng, 6, 2)
    w = random_stiefel(rng, 6, 2)
    with pytest.raises(NotTangent):
        riemannian_hess_apply(w, data, w)


def test_retract_zero_and_shapes(rng):
    w = random_stiefel(rng, 7, 3)
    np.testing.assert_allclose(retract(w, np.zeros_like(w)), w, atol=1e-14)
    with pytest.raises(ShapeMismatch):
        retract(w, np.zeros((7, 2)))
    with pytest.raises(RankDeficient):
        retract(w, -w)


def test_shape_checks(rng):
    with pytest.raises(ShapeMismatch):
        WSubproblemData(np.eye(3), np.zeros((3, 2)), np.zeros((3, 2)), np.zeros((4, 2)), 1, 1, 1)
    with pytest.raises(ShapeMismatch):
        WSubproblemData(np.zeros((3, 4)), *(np.zeros((3, 2)),) * 3, 1, 1, 1)


def test_tcg_matches_dense_newton_step_inside_region(rng):
    # near a nondegenerate minimiser the model is convex and a large radius
    # lets tCG reach the exact Newton step; compare against a dense solve
    d, m = 6, 2
    s, _ = random_psd_with_gap(rng, d, m)
    evecs = np.linalg.eigh(s)[1][:, ::-1][:, :m]
    # anchors at the minimiser break the W -> WQ invariance of the trace term
    data = WSubproblemData(s, evecs, evecs, evecs, 1.0, 1.0, 1e-3)
    w = retract(evecs, 0.01 * tangent(rng, evecs))
    basis = []
    for idx in np.ndindex(d, m):
        e = np.zeros((d, m))
        e[idx] = 1.0
        basis.append(project_tangent(w, e).ravel())
    # orthonormal basis of the tangent space
    q, sv, _ = np.linalg.svd(np.array(basis).T, full_matrices=False)
    q = q[:, sv > 1e-10]
    hmat = np.column_stack([riemannian_hess_apply(w, data, c.reshape(d, m)).ravel() for c in q.T])
    hred = q.T @ hmat
    gred = q.T @ riemannian_grad(w, data).ravel()
    assert np.all(np.linalg.eigvalsh(0.5 * (hred + hred.T)) > 0)
    newton = -(q @ np.linalg.solve(hred, gred)).reshape(d, m)
    cfg = TrConfig(delta_bar=100.0, delta0=100.0, kappa_cg=1e-12, theta_cg=1.0)
    eta = solve_tr_subproblem(w, data, 100.0, cfg)
    np.testing.assert_allclose(eta, newton, atol=1e-8 * max(1, np.linalg.norm(newton)))


def test_tcg_respects_radius(rng):
    data = make_problem(rng, 15, 3)
    w = random_stiefel(rng, 15, 3)
    for delta in (1e-3, 0.1, 1.0):
        eta = solve_tr_subproblem(w, data, delta, TrConfig.default(3))
        assert np.linalg.norm(eta) <= delta * (1 + 1e-10)
        assert inner(eta, riemannian_grad(w, data)) < 0


def test_ratio_close_to_one_for_small_steps(rng):
    data = make_problem(rng, 9, 2)
    w = random_stiefel(rng, 9, 2)
    eta = -1e-4 * riemannian_grad(w, data)
    assert tr_ratio(w, data, eta) == pytest.approx(1.0, abs=1e-2)


@pytest.mark.parametrize("seed", range(5))
def test_solver_reaches_top_eigenspace(seed):
    rng = np.random.default_rng(seed)
    d, m = 20, 3
    s, eig = random_psd_with_gap(rng, d, m)
    zero = np.zeros((d, m))
    w0 = random_stiefel(rng, d, m)
    data = WSubproblemData(s, zero, zero, w0, 0.0, 0.0, 0.0)
    res = solve_w_subproblem(data, w0, TrConfig.default(m, max_outer=500))
    assert res.converged
    assert -res.g == pytest.approx(eig[:m].sum(), rel=1e-10)
    assert np.linalg.norm(res.w.T @ res.w - np.eye(m)) < 1e-10


def test_solver_is_monotone_and_traced(rng):
    data = make_problem(rng, 14, 4)
    w0 = random_stiefel(rng, 14, 4)
    rows = []
    res = solve_w_subproblem(data, w0, TrConfig.default(4), trace=rows.append)
    gs = [g_value(w0, data)] + [r["g"] for r in rows]
    assert np.all(np.diff(gs) <= 1e-12)
    assert res.iterations == len(rows) <= 100
    assert res.g <= g_value(w0, data)


def test_solver_returns_immediately_at_critical_point(rng):
    s, _ = random_psd_with_gap(rng, 8, 2)
    w = np.linalg.eigh(s)[1][:, ::-1][:, :2]
    zero = np.zeros((8, 2))
    res = solve_w_subproblem(WSubproblemData(s, zero, zero, w, 0, 0, 0), w, TrConfig.default(2))
    assert res.iterations == 0 and res.converged


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(2, 25), m=st.integers(1, 5),
       scale=st.floats(1e-3, 10))
def test_retraction_stays_on_manifold(seed, d, m, scale):
    m = min(m, d)
    rng = np.random.default_rng(seed)
    w = random_stiefel(rng, d, m)
    r = retract(w, scale * tangent(rng, w))
    assert np.linalg.norm(r.T @ r - np.eye(m)) < 1e-10
    assert np.all(np.diag(np.linalg.qr(r)[1]) != 0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(2, 20), m=st.integers(1, 4))
def test_projection_idempotent(seed, d, m):
    m = min(m, d)
    rng = np.random.default_rng(seed)
    w = random_stiefel(rng, d, m)
    z = rng.standard_normal((d, m))
    p = project_tangent(w, z)
    np.testing.assert_allclose(project_tangent(w, p), p, atol=1e-12)
