"""Hölder-continuous gradient: the second stepsize strategy.

Run ``python demos/holder_toy.py``. Solves ``min |x|^(1+nu)/(1+nu)`` on
``[-1, 1]`` for several ``nu`` and compares the first index with
``||u_k|| <= eps`` against the worst-case iteration budget.
"""

import numpy as np

from afbf import SolverConfig, solve
from afbf.problems.holder import encode_holder_toy
from afbf.rates import holder_iteration_budget
from afbf.stepsize import CHOICE2, StepsizeParams


def main(eps=1e-2, alpha=0.99):
    for nu in (0.5, 0.75, 0.9):
        params = StepsizeParams(CHOICE2, alpha_min=alpha, alpha_max=alpha, epsilon=eps)
        rep = solve(encode_holder_toy(nu), np.array([1.0]), SolverConfig(stepsize=params, tol_residual=eps,
                                                                         max_iters=10**6))
        budget = holder_iteration_budget(eps, alpha, rep.gamma_min, 1.0)
        print(f"nu={nu}: {rep.status} at k={rep.iterations}, gamma in [{rep.gamma_min:.2e}, {rep.gamma_max:.2e}], "
              f"budget={budget:.2e}")


if __name__ == "__main__":
    main()
