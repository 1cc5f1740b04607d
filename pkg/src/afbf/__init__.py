"""Adaptive forward-backward-forward splitting for ``0 in Ax + Bx + Cx``."""

from .baselines import LineSearchParams, fbf_thovuo_solve, tseng_solve
from .operators import GeneralizedLipschitzModel, OperatorTriple, check_lipschitz_model, check_resolvent_bound
from .solver import IterateRecord, RunReport, SolverConfig, afbf_step, certify_iteration, residual, solve
from .stepsize import CHOICE1, CHOICE2, StepsizeParams, compute_stepsize

__version__ = "0.1.0"

__all__ = [
    "CHOICE1",
    "CHOICE2",
    "GeneralizedLipschitzModel",
    "IterateRecord",
    "LineSearchParams",
    "OperatorTriple",
    "RunReport",
    "SolverConfig",
    "StepsizeParams",
    "afbf_step",
    "certify_iteration",
    "check_lipschitz_model",
    "check_resolvent_bound",
    "compute_stepsize",
    "fbf_thovuo_solve",
    "residual",
    "solve",
    "tseng_solve",
]
