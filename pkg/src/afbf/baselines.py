"""Backtracking forward-backward-forward baselines.

Both competitors share one iteration: starting from a fresh trial
stepsize ``sigma`` they shrink ``gamma`` geometrically until

    gamma * ||F x - F p(gamma)|| <= theta * ||x - p(gamma)||,
    p(gamma) = J_{gamma C}(x - gamma F x),  F = A + B,

then take the forward correction ``x+ = proj_dom(p - gamma (F p - F x))``.
Every trial costs one resolvent and one ``F`` evaluation and is counted
in ``line_search_evals``. If ``max_backtracks`` trials all fail, the
smallest trial is accepted and the iteration is flagged.

The two solvers differ in their parameter presets; the exact Armijo rules
of the original references are reconstructed from their standard form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import OperatorError, OperatorTriple
from .solver import ERROR, MAX_ITERS, TIME_LIMIT, IterateRecord, RunReport, SolverConfig, _Recorder
from .stepsize import RootFindingError


@dataclass(frozen=True)
class LineSearchParams:
    theta: float = 0.995
    sigma: float = 1.0
    beta: float = 0.5
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in ]0, 1[")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in ]0, 1[")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be >= 1")


TSENG_QCQP = LineSearchParams(theta=0.995, sigma=1.0, beta=0.5)
TSENG_SVM = LineSearchParams(theta=0.99, sigma=1.0, beta=0.1)
THOVUO_DEFAULT = LineSearchParams(theta=0.995, sigma=1.0, beta=0.001)


def backtrack(triple: OperatorTriple, x, Fx, ls: LineSearchParams):
    """Run the trial loop at ``x``; returns ``(gamma, z, p, Fp, trials, flagged)``."""
    gamma = ls.sigma
    for trial in range(1, ls.max_backtracks + 1):
        z = x - gamma * Fx
        p = triple.resolvent(gamma, z)
        Fp = triple.eval_A(p) + triple.eval_B(p)
        if gamma * np.linalg.norm(Fx - Fp) <= ls.theta * np.linalg.norm(x - p):
            return gamma, z, p, Fp, trial, False
        if trial < ls.max_backtracks:
            gamma *= ls.beta
    return gamma, z, p, Fp, ls.max_backtracks, True


def _fbf_backtracking(name: str, triple: OperatorTriple, x0, config: SolverConfig, ls: LineSearchParams,
                      reference_solution=None) -> RunReport:
    x = triple.proj_dom(np.asarray(x0, dtype=float))
    ref = None if reference_solution is None else np.asarray(reference_solution, dtype=float)
    rec = _Recorder(triple, config, name, x.copy())
    k = 0
    try:
        for k in range(config.max_iters):
            Fx = triple.eval_A(x) + triple.eval_B(x)
            gamma, z, p, Fp, trials, flagged = backtrack(triple, x, Fx, ls)
            rec.report.line_search_evals += trials
            x_hat = p - gamma * (Fp - Fx)
            x_next = triple.proj_dom(x_hat)
            u = (z - p) / gamma + Fp
            xp = float(np.linalg.norm(x - p))
            ratio_den = xp * xp
            ratio_num = gamma * gamma * float(np.sum((Fx - Fp) ** 2))
            record = IterateRecord(
                k=k, x=x, gamma=gamma, p=p, u_norm=float(np.linalg.norm(u)),
                lipschitz_certificate=(ratio_num / ratio_den) if ratio_den > 0 else 0.0,
                fejer_gap=None if ref is None else float(np.linalg.norm(x - ref)),
                xp_norm=xp, xhat_gap=float(np.linalg.norm(x - x_hat)),
                zq_norm=float(np.linalg.norm(x - x_hat)), trials=trials, flagged=flagged,
            )
            if rec.observe(record):
                return rec.finish(x_next, k)
            if not np.all(np.isfinite(x_next)):
                return rec.finish(x, k, ERROR, f"iteration {k}: non-finite iterate")
            x = x_next
            if config.time_limit_seconds is not None and rec.elapsed() > config.time_limit_seconds:
                return rec.finish(x, k + 1, TIME_LIMIT)
    except (OperatorError, RootFindingError, ValueError, FloatingPointError) as exc:
        return rec.finish(x, k, ERROR, f"iteration {k}: {exc}")
    return rec.finish(x, config.max_iters, MAX_ITERS)


def tseng_solve(triple: OperatorTriple, x0, config: SolverConfig = SolverConfig(), ls: LineSearchParams = TSENG_QCQP,
                reference_solution=None) -> RunReport:
    """Tseng's forward-backward-forward method with Armijo-type backtracking."""
    return _fbf_backtracking("tseng", triple, x0, config, ls, reference_solution)


def fbf_thovuo_solve(triple: OperatorTriple, x0, config: SolverConfig = SolverConfig(),
                     ls: LineSearchParams = THOVUO_DEFAULT, reference_solution=None) -> RunReport:
    """Thong-Vuong variant: acceptance factor ``mu`` (``theta``), initial ``gamma`` (``sigma``), ratio ``l`` (``beta``)."""
    return _fbf_backtracking("fbf-thovuo", triple, x0, config, ls, reference_solution)
