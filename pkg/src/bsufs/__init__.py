"""Bi-sparse unsupervised feature selection.

Sparse PCA with a row-sparse l2,p penalty and an element-wise lq penalty
(p, q in [0, 1)), solved by proximal alternating minimization with a
Riemannian trust-region step on the Stiefel manifold.
"""
__version__ = "0.1.0"

from .data import DataMatrix, LabelVector, compute_scatter, make_labels, read_csv, read_labels, validate_data
from .evaluation import EvaluationReport, acc, kmeans, nmi, repeated_eval
from .pam import SelectionResult, SolverConfig, SolverState, objective, pam_solve, score_and_select
from .prox import matrix_prox_lq, matrix_row_prox_l2p, prox_thresholds, row_prox_l2p, scalar_prox_lq
from .stiefel import TrConfig, WSubproblemData, retract, riemannian_grad, riemannian_hess_apply, solve_w_subproblem
from .synthetic import NoiseSpec, SyntheticSpec, corrupt, gen_dartboard1, gen_diamond9

__all__ = [
    "DataMatrix", "LabelVector", "compute_scatter", "make_labels", "read_csv", "read_labels",
    "validate_data", "EvaluationReport", "acc", "kmeans", "nmi", "repeated_eval",
    "SelectionResult", "SolverConfig", "SolverState", "objective", "pam_solve", "score_and_select",
    "matrix_prox_lq", "matrix_row_prox_l2p", "prox_thresholds", "row_prox_l2p", "scalar_prox_lq",
    "TrConfig", "WSubproblemData", "retract", "riemannian_grad", "riemannian_hess_apply",
    "solve_w_subproblem", "NoiseSpec", "SyntheticSpec", "corrupt", "gen_dartboard1", "gen_diamond9",
]
