import numpy as np
import pytest

from afbf.baselines import (
    THOVUO_DEFAULT,
    TSENG_QCQP,
    LineSearchParams,
    backtrack,
    fbf_thovuo_solve,
    tseng_solve,
)
from afbf.problems.fractional import encode_fractional, gen_fractional
from afbf.problems.qcqp import encode_qcqp, gen_synthetic_qcqp
from afbf.solver import CONVERGED, SolverConfig, solve

from conftest import identity_1d, linear_triple, zero_triple


def test_presets():
    assert (TSENG_QCQP.theta, TSENG_QCQP.sigma, TSENG_QCQP.beta) == (0.995, 1.0, 0.5)
    assert (THOVUO_DEFAULT.theta, THOVUO_DEFAULT.sigma, THOVUO_DEFAULT.beta) == (0.995, 1.0, 0.001)
    for bad in ({"theta": 1.0}, {"beta": 0.0}, {"sigma": -1.0}, {"max_backtracks": 0}):
        with pytest.raises(ValueError):
            LineSearchParams(**bad)


def test_backtracking_hand_trace():
    # B(x) = x, x = 2: gamma = 1 gives p = 0 and 1 * 2 > 0.995 * 2 (reject);
    # gamma = 0.5 gives p = 1 and 0.5 * 1 <= 0.995 * 1 (accept on the second trial)
    t = identity_1d()
    x = np.array([2.0])
    gamma, z, p, Fp, trials, flagged = backtrack(t, x, t.eval_B(x), TSENG_QCQP)
    assert gamma == 0.5 and trials == 2 and not flagged
    assert p[0] == pytest.approx(1.0)


def test_small_sigma_never_backtracks(rng):
    n = 5
    S = rng.standard_normal((n, n))
    M = S @ S.T + (S - S.T)
    L = np.linalg.norm(M, 2)
    t = linear_triple(M, rng.standard_normal(n), nonneg=np.ones(n, dtype=bool))
    ls = LineSearchParams(theta=0.9, sigma=0.9 / L, beta=0.5)
    rep = tseng_solve(t, rng.standard_normal(n), SolverConfig(tol_residual=1e-6, record_history=True), ls)
    assert rep.converged
    assert rep.line_search_evals == rep.iterations + 1
    assert all(r.trials == 1 for r in rep.history)


def test_lse_counts_every_trial():
    rep = tseng_solve(identity_1d(), np.array([2.0]), SolverConfig(tol_residual=1e-8, record_history=True))
    assert rep.line_search_evals == sum(r.trials for r in rep.history)
    assert rep.line_search_evals == 2 * len(rep.history)


def test_exhausted_line_search_is_flagged():
    ls = LineSearchParams(theta=0.5, sigma=1.0, beta=0.9, max_backtracks=2)
    t = linear_triple(np.array([[100.0]]), [0.0])
    rep = tseng_solve(t, np.array([1.0]), SolverConfig(tol_residual=1e-300, max_iters=3, record_history=True), ls)
    assert rep.flagged_iterations == 3
    assert all(r.flagged and r.trials == 2 for r in rep.history)
    assert rep.line_search_evals == 6


@pytest.mark.parametrize("solver", [tseng_solve, fbf_thovuo_solve])
def test_zero_operator_converges_immediately(solver):
    rep = solver(zero_triple(2), np.array([1.0, -1.0]))
    assert rep.status == CONVERGED and rep.iterations == 0


def test_tseng_and_afbf_on_qcqp():
    inst = gen_synthetic_qcqp(30, 30, 3, strongly_convex=True, seed=0)
    t = encode_qcqp(inst)
    cfg = SolverConfig(tol_residual=1e-2)
    a = solve(t, inst.start_point(), cfg)
    b = tseng_solve(t, inst.start_point(), cfg)
    assert a.converged and b.converged
    assert a.final_u_norm <= 1e-2 and b.final_u_norm <= 1e-2
    assert a.line_search_evals == 0 and b.line_search_evals > b.iterations


def test_afbf_monotone_on_fractional_family():
    inst = gen_fractional(100, 1.0, seed=0)
    rep = solve(encode_fractional(inst), inst.start_point(),
                SolverConfig(tol_residual=1e-6, max_iters=2000, record_history=True))
    f = np.array([r.objective for r in rep.history])
    assert np.all(np.diff(f) <= 1e-12 * (1 + np.abs(f[:-1])))


@pytest.mark.xfail(strict=True, reason="first-trial steps gamma = 1 pass the acceptance test and land on the "
                                       "halfspace boundary, where f jumps up; the family has no minimizer")
def test_thovuo_monotone_on_fractional_family():
    inst = gen_fractional(100, 1.0, seed=0)
    rep = fbf_thovuo_solve(encode_fractional(inst), inst.start_point(),
                           SolverConfig(tol_residual=1e-6, max_iters=2000, record_history=True))
    f = np.array([r.objective for r in rep.history])
    assert np.all(np.diff(f) <= 1e-12 * (1 + np.abs(f[:-1])))
