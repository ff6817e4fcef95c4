import numpy as np

from bsufs.data import validate_data
from bsufs.pam import SolverConfig
from bsufs.synthetic import SyntheticSpec, generate
from bsufs.sweep import CellResult, SweepCell, best_cells, clamp_feature_counts, grid_cells, run_sweep


def test_grid_size_and_order():
    cells = grid_cells()
    assert len(cells) == 441
    assert cells[0] == SweepCell(0.0, 0.0, 1e-6, 1e-6)
    assert cells[1] == SweepCell(0.0, 0.0, 1e-6, 1e-4)
    assert cells[-1] == SweepCell(2 / 3, 2 / 3, 1e6, 1e6)


def test_clamp_feature_counts():
    assert clamp_feature_counts(range(10, 101, 10), 9) == [9]
    assert clamp_feature_counts([0, 2, 3, 3], 5) == [2, 3]


def _result(index, scores):
    scores = np.asarray(scores, dtype=float)
    ranked = np.argsort(-scores, kind="stable")
    cell = SweepCell(0.5, 0.5, 1.0, 1.0)
    return CellResult(index, cell, SolverConfig(1, 1, 0.5, 0.5, 1), scores, ranked, 1, True, True)


def test_decisive():
    assert _result(0, [3, 2, 1]).decisive(2)
    assert not _result(0, [3, 1, 1]).decisive(2)
    assert not _result(0, [0, 0, 0]).decisive(1)
    assert _result(0, [1, 1, 1]).decisive(3)


def test_best_cells_prefers_decisive():
    class Rep:
        def __init__(self, a):
            self.acc_mean = a

    lucky, honest, later = _result(0, [0, 0, 0]), _result(1, [1, 2, 0]), _result(2, [2, 1, 0])
    lucky.evals[2], honest.evals[2], later.evals[2] = Rep(0.9), Rep(0.5), Rep(0.5)
    assert best_cells([lucky, honest, later])[2] is honest
    assert best_cells([lucky])[2] is lucky


def test_run_sweep_small():
    x, y = generate(SyntheticSpec("diamond9", n=450, seed=0))
    cells = grid_cells(lambdas=(1e-2, 1e6), ps=(0.5,), qs=(0.5,))
    res = run_sweep(x, cells, m=2, feature_counts=[2], labels=y, reps=3)
    assert [r.index for r in res] == [0, 1, 2, 3]
    assert all(r.monotone and r.converged for r in res)
    best = best_cells(res)[2]
    assert sorted(best.selected(2)) == [0, 1]
    # the all-zero cells share one cached evaluation
    assert res[2].evals[2] is res[3].evals[2]


def test_workers_give_same_result():
    x = validate_data(np.random.default_rng(0).normal(size=(5, 30)))
    cells = grid_cells(lambdas=(1e-2, 1.0), ps=(0.5,), qs=(0.0,))
    a = run_sweep(x, cells, m=2, workers=1)
    b = run_sweep(x, cells, m=2, workers=2)
    for ra, rb in zip(a, b):
        np.testing.assert_array_equal(ra.scores, rb.scores)
