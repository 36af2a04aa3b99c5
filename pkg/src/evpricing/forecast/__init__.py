"""Regressors for conventional and EV load: boosted trees, polynomial, MLP."""

from .gbt import FlatTree, GbtModel, TreeNode, fit_gbt, leaf_weight, predict_gbt, split_gain
from .io import dump_model, load_model
from .metrics import Metrics, metrics
from .mlp import MlpRegressor, fit_mlp
from .poly import PolyModel, fit_poly, monomial_terms
from .search import ALGORITHMS, DEFAULT_GRIDS, GridResult, chronological_split, grid_search, write_metrics_csv

__all__ = [
    "ALGORITHMS", "DEFAULT_GRIDS", "FlatTree", "GbtModel", "GridResult", "Metrics", "MlpRegressor", "PolyModel", "TreeNode",
    "chronological_split", "dump_model", "fit_gbt", "fit_mlp", "fit_poly", "grid_search", "leaf_weight",
    "load_model", "metrics", "monomial_terms", "predict_gbt", "split_gain", "write_metrics_csv",
]
