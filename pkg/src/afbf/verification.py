"""Independent checks: KKT residuals, reference solutions and rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import OperatorTriple
from .problems.qcqp import QcqpInstance
from .rates import recurrence_envelope, sublinear_envelope  # noqa: F401  (re-exported)
from .solver import SolverConfig, solve
from .stepsize import CHOICE1, CHOICE2, StepsizeParams


class OracleError(RuntimeError):
    """The reference solve did not reach its tolerance."""


@dataclass(frozen=True)
class KktReport:
    stationarity_residual: float
    primal_feasibility: float
    dual_feasibility: float
    complementarity: float

    def max(self) -> float:
        return max(self.stationarity_residual, self.primal_feasibility, self.dual_feasibility, self.complementarity)


def kkt_residual(inst: QcqpInstance, x, y) -> KktReport:
    """KKT residuals of a primal-dual pair for a QCQP.

    Stationarity is the distance of ``-(grad f + sum_i y_i grad g_i)`` to the
    normal cone of ``{x[nonneg] >= 0}`` at ``x``; coordinates with
    ``x_j <= 0`` in the sign-constrained block count as active.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (inst.n,) or y.shape != (inst.m,):
        raise ValueError(f"expected x of length {inst.n} and y of length {inst.m}")
    grad = np.asarray(inst.Q[0] @ x).ravel() + inst.b
    for i in range(inst.m):
        grad = grad + y[i] * (np.asarray(inst.Q[i + 1] @ x).ravel() + inst.l[i])
    v = -grad
    active = inst.nonneg & (x <= 0.0)
    dist = np.where(active, np.maximum(v, 0.0), np.abs(v))
    g = inst.constraints(x)
    mb = inst.m_bar
    viol = [0.0]
    if mb:
        viol.append(float(np.max(np.maximum(g[:mb], 0.0))))
    if inst.m > mb:
        viol.append(float(np.max(np.abs(g[mb:]))))
    if np.any(inst.nonneg):
        viol.append(float(np.max(np.maximum(-x[inst.nonneg], 0.0))))
    dual = float(np.max(np.maximum(-y[:mb], 0.0))) if mb else 0.0
    comp = float(np.max(np.abs(y[:mb] * g[:mb]))) if mb else 0.0
    return KktReport(float(np.linalg.norm(dist)), max(viol), dual, comp)


def oracle_solve_small(triple: OperatorTriple, x0, tol: float = 1e-10, max_iters: int = 10**7,
                       time_limit_seconds=None) -> np.ndarray:
    """Reference zero by a high-accuracy AFBF run.

    Uses the first stepsize strategy for ``mu = 2`` models and the second
    one (with ``epsilon = tol``) otherwise. Returns the certified point
    ``p_k``; raises :class:`OracleError` when the tolerance is not reached.
    """
    if triple.model.mu == 2.0:
        params = StepsizeParams(CHOICE1)
    else:
        params = StepsizeParams(CHOICE2, epsilon=tol)
    cfg = SolverConfig(stepsize=params, tol_residual=tol, max_iters=max_iters, time_limit_seconds=time_limit_seconds)
    rep = solve(triple, x0, cfg)
    if not rep.converged:
        raise OracleError(f"reference solve ended with {rep.status} after {rep.iterations} iterations "
                          f"(||u|| = {rep.final_u_norm:.3e}) {rep.message}")
    return rep.final_x


@dataclass(frozen=True)
class LinearRateFit:
    slope: float  # least-squares slope of log gap against k
    factor: float  # exp(slope), the fitted per-iteration contraction
    n_points: int
    exact_convergence: bool = False


def fit_linear_rate(gaps, ks=None) -> LinearRateFit:
    """Least-squares fit of ``log gap_k = c + slope * k``.

    ``gaps`` is a sequence of distances (for instance ``||x_k - z_ref||``).
    When a gap is exactly zero the fit is skipped and
    ``exact_convergence`` is set.
    """
    gaps = np.asarray(gaps, dtype=float)
    ks = np.arange(gaps.size, dtype=float) if ks is None else np.asarray(ks, dtype=float)
    if np.any(gaps == 0.0):
        return LinearRateFit(-math.inf, 0.0, int(gaps.size), True)
    if gaps.size < 10:
        raise ValueError("need at least 10 gaps for a rate fit")
    if np.any(gaps < 0.0) or not np.all(np.isfinite(gaps)):
        raise ValueError("gaps must be finite and positive")
    slope = float(np.polyfit(ks, np.log(gaps), 1)[0])
    return LinearRateFit(slope, math.exp(slope), int(gaps.size))


def distance_gaps(history, reference) -> tuple[np.ndarray, np.ndarray]:
    """``(k, ||x_k - reference||)`` over a recorded history."""
    ref = np.asarray(reference, dtype=float)
    return (np.array([r.k for r in history], dtype=float),
            np.array([np.linalg.norm(r.x - ref) for r in history]))
