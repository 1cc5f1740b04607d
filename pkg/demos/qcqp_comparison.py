"""Compare AFBF with Tseng's backtracking FBF on random convex QCQPs.

Run ``python demos/qcqp_comparison.py``. Prints ITER / CPU / LSE per solver
and the KKT residual of each final primal-dual pair.
"""

import numpy as np

from afbf import SolverConfig, solve
from afbf.baselines import TSENG_QCQP, tseng_solve
from afbf.problems.qcqp import encode_qcqp, gen_synthetic_qcqp
from afbf.verification import kkt_residual


def main():
    print(f"{'instance':<22s} {'solver':<7s} {'ITER':>6s} {'CPU':>8s} {'LSE':>6s} {'KKT':>9s}")
    for n, m, sc in [(100, 10, True), (200, 20, True), (200, 20, False)]:
        inst = gen_synthetic_qcqp(n, n, m, strongly_convex=sc, seed=0)
        triple = encode_qcqp(inst)
        config = SolverConfig(tol_residual=1e-2)
        for name, rep in [("afbf", solve(triple, inst.start_point(), config)),
                          ("tseng", tseng_solve(triple, inst.start_point(), config, TSENG_QCQP))]:
            kkt = kkt_residual(inst, rep.final_x[:n], rep.final_x[n:]).max()
            label = f"n={n} m={m} sc={int(sc)}"
            print(f"{label:<22s} {name:<7s} {rep.iterations:>6d} {rep.wall_time_seconds:>8.3f} "
                  f"{rep.line_search_evals:>6d} {kkt:>9.2e}")


if __name__ == "__main__":
    main()
