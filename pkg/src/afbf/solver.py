"""The adaptive forward-backward-forward (AFBF) iteration.

One step from ``x`` (in ``dom C``) with stepsize ``gamma``::

    z     = x - gamma * (A x + B x)
    p     = J_{gamma C}(z)
    q     = p - gamma * (A p + B p)
    x_hat = q - z + x
    x+    = proj_{dom C}(x_hat)

and ``u = (z - p)/gamma + A p + B p`` is an explicit element of
``(A + B + C) p`` whose norm is the stopping certificate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .operators import OperatorError, OperatorTriple
from .stepsize import RootFindingError, StepsizeParams, StepsizeResult, compute_stepsize

CONVERGED = "Converged"
MAX_ITERS = "MaxIters"
TIME_LIMIT = "TimeLimit"
ERROR = "Error"


@dataclass(frozen=True)
class SolverConfig:
    stepsize: StepsizeParams = field(default_factory=StepsizeParams)
    tol_residual: float = 1e-2
    max_iters: int = 100_000
    record_history: bool = False
    time_limit_seconds: Optional[float] = None
    history_limit: int = 10_000
    # Optional stopping rule ``(k, p, u_norm) -> bool`` replacing the residual test.
    stop_rule: Optional[Callable] = None

    def __post_init__(self):
        if self.tol_residual <= 0:
            raise ValueError("tol_residual must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.time_limit_seconds is not None and self.time_limit_seconds <= 0:
            raise ValueError("time_limit_seconds must be positive")


@dataclass
class IterateRecord:
    k: int
    x: np.ndarray
    gamma: float
    p: np.ndarray
    u_norm: float
    lipschitz_certificate: float
    fejer_gap: Optional[float] = None
    alpha: float = float("nan")
    gamma_bar: float = float("nan")
    xp_norm: float = 0.0        # ||x_k - p_k||
    xhat_gap: float = 0.0       # ||x_k - x_hat_k|| = gamma_k ||u_k||
    zq_norm: float = 0.0        # ||z_k - q_k||
    objective: Optional[float] = None
    elapsed: float = 0.0
    trials: int = 0             # line-search trials (baselines only)
    flagged: bool = False       # backtracking exhausted (baselines only)


@dataclass
class RunReport:
    solver: str
    status: str
    iterations: int
    final_x: np.ndarray
    final_u_norm: float
    history: list = field(default_factory=list)
    wall_time_seconds: float = 0.0
    line_search_evals: int = 0
    last_iterate: Optional[np.ndarray] = None
    message: str = ""
    gamma_min: float = float("inf")
    gamma_max: float = 0.0
    sum_xp_sq: float = 0.0
    flagged_iterations: int = 0
    x0: Optional[np.ndarray] = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def to_dict(self, include_history: bool = True, include_timing: bool = True) -> dict:
        out = {
            "solver": self.solver,
            "status": self.status,
            "iterations": int(self.iterations),
            "final_u_norm": _num(self.final_u_norm),
            "line_search_evals": int(self.line_search_evals),
            "message": self.message,
            "gamma_min": _num(self.gamma_min),
            "gamma_max": _num(self.gamma_max),
            "sum_xp_sq": _num(self.sum_xp_sq),
            "flagged_iterations": int(self.flagged_iterations),
            "final_x": [float(v) for v in self.final_x],
        }
        if self.last_iterate is not None:
            out["last_iterate"] = [float(v) for v in self.last_iterate]
        if include_timing:
            out["wall_time_seconds"] = float(self.wall_time_seconds)
        if include_history and self.history:
            traj = {
                "k": [r.k for r in self.history],
                "u_norm": [_num(r.u_norm) for r in self.history],
                "gamma": [_num(r.gamma) for r in self.history],
                "xp_norm": [_num(r.xp_norm) for r in self.history],
                "lipschitz_certificate": [_num(r.lipschitz_certificate) for r in self.history],
            }
            if any(r.objective is not None for r in self.history):
                traj["objective"] = [_num(r.objective) for r in self.history]
            if any(r.fejer_gap is not None for r in self.history):
                traj["fejer_gap"] = [_num(r.fejer_gap) for r in self.history]
            if include_timing:
                traj["elapsed"] = [float(r.elapsed) for r in self.history]
            out["trajectory"] = traj
        return out

    def table_row(self) -> dict:
        """Row with the benchmark table columns ITER, CPU, LSE."""
        return {
            "solver": self.solver,
            "ITER": int(self.iterations),
            "CPU": float(self.wall_time_seconds),
            "LSE": int(self.line_search_evals),
            "final_u": float(self.final_u_norm),
            "status": self.status,
        }


def _num(v):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


# ---------------------------------------------------------------------------


def residual(triple: OperatorTriple, x, z, p, gamma: float, ABp=None) -> np.ndarray:
    """``u = (z - p)/gamma + A p + B p``, an element of ``(A + B + C) p``.

    ``x`` is accepted for signature symmetry with the step; it does not
    enter the formula.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if ABp is None:
        ABp = triple.eval_A(p) + triple.eval_B(p)
    return (np.asarray(z) - np.asarray(p)) / gamma + ABp


def certify_iteration(triple: OperatorTriple, x, p, gamma: float, alpha: float, ABx=None, ABp=None) -> float:
    """``gamma^2 ||(A+B)x - (A+B)p||^2 / (alpha ||x - p||^2)`` with ``0/0 -> 0``."""
    if ABx is None:
        ABx = triple.eval_A(x) + triple.eval_B(x)
    if ABp is None:
        ABp = triple.eval_A(p) + triple.eval_B(p)
    num = gamma * gamma * float(np.sum((ABx - ABp) ** 2))
    den = alpha * float(np.sum((np.asarray(x) - np.asarray(p)) ** 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def afbf_step(triple: OperatorTriple, x, params: StepsizeParams, k: int = 0, *, gamma: Optional[float] = None,
              reference=None):
    """One AFBF step from ``x``; returns ``(x_next, record)``.

    Uses exactly two evaluations each of ``A`` and ``B``. ``gamma`` overrides
    the adaptive stepsize (for experiments and negative tests).
    """
    x = np.asarray(x, dtype=float)
    Ax, coeffs = triple.eval_A_and_coefficients(x)
    ABx = Ax + triple.eval_B(x)
    if gamma is None:
        step: StepsizeResult = compute_stepsize(triple, x, params, k, ABx=ABx, coefficients=coeffs)
        gamma, gamma_bar, alpha = step.gamma, step.gamma_bar, step.alpha
    else:
        gamma_bar, alpha = float("nan"), params.alpha(k)
    z = x - gamma * ABx
    p = triple.resolvent(gamma, z)
    ABp = triple.eval_A(p) + triple.eval_B(p)
    q = p - gamma * ABp
    x_hat = q - z + x
    x_next = triple.proj_dom(x_hat)
    u = (z - p) / gamma + ABp

    xp = float(np.linalg.norm(x - p))
    record = IterateRecord(
        k=k,
        x=x,
        gamma=gamma,
        p=p,
        u_norm=float(np.linalg.norm(u)),
        lipschitz_certificate=certify_iteration(triple, x, p, gamma, alpha, ABx, ABp),
        fejer_gap=None if reference is None else float(np.linalg.norm(x - reference)),
        alpha=alpha,
        gamma_bar=gamma_bar,
        xp_norm=xp,
        xhat_gap=float(np.linalg.norm(x - x_hat)),
        zq_norm=float(np.linalg.norm(z - q)),
    )
    return x_next, record


def _keep(k: int, limit: int) -> bool:
    if k < limit:
        return True
    return k % math.ceil(k / limit) == 0


class _Recorder:
    """Shared bookkeeping for AFBF and the line-search baselines."""

    def __init__(self, triple: OperatorTriple, config: SolverConfig, name: str, x0):
        self.triple = triple
        self.config = config
        self.report = RunReport(solver=name, status=MAX_ITERS, iterations=0, final_x=x0, final_u_norm=math.inf,
                                x0=x0)
        self.t0 = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def observe(self, rec: IterateRecord) -> bool:
        """Fold one iteration in; returns True when the run should stop."""
        rep, cfg = self.report, self.config
        rep.gamma_min = min(rep.gamma_min, rec.gamma)
        rep.gamma_max = max(rep.gamma_max, rec.gamma)
        rep.sum_xp_sq += rec.xp_norm**2
        rep.flagged_iterations += int(rec.flagged)
        rep.final_u_norm = rec.u_norm
        if cfg.record_history and _keep(rec.k, cfg.history_limit):
            rec.elapsed = self.elapsed()
            if self.triple.objective is not None:
                rec.objective = float(self.triple.objective(rec.x))
            rep.history.append(rec)
        if cfg.stop_rule is not None:
            done = bool(cfg.stop_rule(rec.k, rec.p, rec.u_norm))
        else:
            done = rec.u_norm <= cfg.tol_residual
        if done:
            rep.status = CONVERGED
            rep.iterations = rec.k
            rep.final_x = rec.p
            return True
        return False

    def finish(self, x, k_done: int, status: Optional[str] = None, message: str = "") -> RunReport:
        rep = self.report
        if status is not None:
            rep.status = status
        if rep.status != CONVERGED:
            rep.iterations = k_done
            rep.final_x = x
        rep.last_iterate = x
        rep.message = message
        rep.wall_time_seconds = self.elapsed()
        return rep


def solve(triple: OperatorTriple, x0, config: SolverConfig = SolverConfig(), reference_solution=None) -> RunReport:
    """Run AFBF from ``x0`` until ``||u_k|| <= tol``, the iteration cap or the time cap.

    ``x0`` is first projected onto ``dom C``. On convergence ``final_x`` is
    ``p_k`` (the point certified by ``u_k``) and ``iterations`` is ``k``;
    ``last_iterate`` holds the most recent ``x``.
    """
    x = triple.proj_dom(np.asarray(x0, dtype=float))
    ref = None if reference_solution is None else np.asarray(reference_solution, dtype=float)
    rec = _Recorder(triple, config, "afbf", x.copy())
    params = config.stepsize
    k = 0
    try:
        for k in range(config.max_iters):
            x_next, record = afbf_step(triple, x, params, k, reference=ref)
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


def with_tol(config: SolverConfig, tol: float, **kw) -> SolverConfig:
    return replace(config, tol_residual=tol, **kw)
