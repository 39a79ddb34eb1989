"""Bayesian optimization of mixed continuous/categorical functions with latent-variable GPs."""
from .algorithms import (ALGORITHMS, doe_size, run_algorithm, run_alv_ego, run_lv_ego,
                         run_ms_es, run_ms_mkes)
from .history import RunHistory, RunRecord
from .problems import PROBLEMS, DomainError, MixedPoint, MixedProblem, get_problem

__all__ = ["ALGORITHMS", "PROBLEMS", "DomainError", "MixedPoint", "MixedProblem", "RunHistory",
           "RunRecord", "doe_size", "get_problem", "run_algorithm", "run_alv_ego",
           "run_lv_ego", "run_ms_es", "run_ms_mkes"]
__version__ = "0.1.0"
