"""Symbolic-regression GP with Levenberg-Marquardt local search and
Jacobian rank/conditioning telemetry."""
from .conditioning import JacobianReport, analyze, condition_numbers, numeric_rank, singular_values
from .data import Dataset, DatasetError, generate, load, load_csv
from .diff import evaluate_with_jacobian, jacobian
from .estimator import SymbolicRegressor
from .expr import (
    ContractError,
    ExprTree,
    build_case_study_trees,
    evaluate,
    extract_parameters,
    inject_parameters,
    parse_infix,
    to_infix,
    toy_tree,
)
from .gp import GPConfig, GPResult, evolve
from .nls import LMConfig, LocalOptResult, Termination, fit_tree, levenberg_marquardt, restart_experiment
from .telemetry import CandidateRecord, FinalSolutionRecord, GenerationStats, RunLog

__version__ = "0.1.0"

__all__ = [
    "CandidateRecord", "ContractError", "Dataset", "DatasetError", "ExprTree", "FinalSolutionRecord",
    "GPConfig", "GPResult", "GenerationStats", "JacobianReport", "LMConfig", "LocalOptResult", "RunLog",
    "SymbolicRegressor", "Termination", "analyze", "build_case_study_trees", "condition_numbers", "evaluate",
    "evaluate_with_jacobian", "evolve", "extract_parameters", "fit_tree", "generate", "inject_parameters",
    "jacobian", "levenberg_marquardt", "load", "load_csv", "numeric_rank", "parse_infix", "restart_experiment",
    "singular_values", "to_infix", "toy_tree",
]
