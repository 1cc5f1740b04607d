"""Objective trajectories on linear fractional programs.

Run ``python demos/fractional_trajectory.py [out.csv]``. Uses the solvable
variant of the generator (known minimizer set ``d^T x = t*``) and writes
``k, solver, eta, f, u_norm`` rows for plotting.

The model constants bound ``1/(d^T w + d0)`` by ``1/d0`` on the whole
domain, so AFBF stepsizes are tiny when ``d0`` is small and ``||d||`` large;
the printed ``gamma`` range makes this visible.
"""

import csv
import sys

from afbf import SolverConfig, solve
from afbf.baselines import fbf_thovuo_solve
from afbf.problems.fractional import encode_fractional, gen_fractional


def main(out="fractional_trajectory.csv"):
    rows = []
    for eta in (1.0, 10.0):
        inst = gen_fractional(1000, eta, seed=0, solvable=True)
        triple = encode_fractional(inst)
        config = SolverConfig(tol_residual=1e-6, max_iters=20_000, record_history=True)
        for name, run in [("afbf", solve), ("fbf-thovuo", fbf_thovuo_solve)]:
            rep = run(triple, inst.start_point(), config)
            t = inst.d @ rep.final_x
            print(f"eta={eta:<5g} {name:<11s} {rep.status:<9s} ITER={rep.iterations:<6d} "
                  f"CPU={rep.wall_time_seconds:.3f}s gamma in [{rep.gamma_min:.1e}, {rep.gamma_max:.1e}] "
                  f"d^T x={t:.6f} (t*={inst.meta['t_star']:.6f})")
            rows += [(r.k, name, eta, r.objective, r.u_norm) for r in rep.history]
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "solver", "eta", "f", "u_norm"])
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
