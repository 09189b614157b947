"""Sparse Gaussian graphical models for streamflow donor selection and gauge removal."""
from .glasso import GlassoError, PrecisionMatrix, SolverSettings, glasso_solve, glasso_solve_constrained
from .graphs import Graph, ParetoPoint, pareto_front, tau_for_edge_budget, threshold_graph
from .inference import coeffs_from_covariance, coeffs_from_precision, fit_ols_graph, predict_ols
from .metrics import nse, r_squared, score_and_error
from .panel import StreamflowPanel, load_panel, split
from .rg import RemovalPlan, run_rg
from .sgm import SgmConfig, SgmResult, best_point, run_sgm, select_graph

__version__ = "0.1.0"

__all__ = [
    "GlassoError", "PrecisionMatrix", "SolverSettings", "glasso_solve", "glasso_solve_constrained",
    "Graph", "ParetoPoint", "pareto_front", "tau_for_edge_budget", "threshold_graph",
    "coeffs_from_covariance", "coeffs_from_precision", "fit_ols_graph", "predict_ols",
    "nse", "r_squared", "score_and_error",
    "StreamflowPanel", "load_panel", "split",
    "RemovalPlan", "run_rg",
    "SgmConfig", "SgmResult", "best_point", "run_sgm", "select_graph",
]
