"""Command-line front end: ``afbf gen | solve | bench | svm``.

Exit codes: 0 success, 1 iteration or time cap reached without
convergence, 2 argument error, 3 solver error, 4 I/O error. Relative output
paths are resolved against ``$AFBF_OUTPUT_DIR`` when it is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import THOVUO_DEFAULT, TSENG_QCQP, TSENG_SVM, LineSearchParams, fbf_thovuo_solve, tseng_solve
from .operators import OperatorTriple, nonneg_projector, normal_cone_resolvent
from .problems import fractional as frac
from .problems import qcqp
from .problems import svm as svmp
from .problems.holder import encode_holder_toy
from .solver import CONVERGED, ERROR, RunReport, SolverConfig, solve
from .stepsize import CHOICE1, CHOICE2, StepsizeParams

log = logging.getLogger("afbf")

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_USAGE, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4
OUTPUT_ENV = "AFBF_OUTPUT_DIR"
SOLVERS = ("afbf", "tseng", "fbf-thovuo")
TIMING_KEYS = ("wall_time_seconds", "elapsed")


class UsageError(Exception):
    pass


def output_path(path) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _write_text(path, text: str) -> Path:
    p = output_path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    return p


def strip_timing(obj):
    """Copy of a report dict without wall-clock fields (for determinism checks)."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# instances


def shifted_ray_toy() -> OperatorTriple:
    """``0 in x + 1 + N_[0,inf)(x)`` on the line; the zero is ``x = 0``."""
    proj = nonneg_projector(np.array([True]))
    return OperatorTriple(dim=1, B=lambda x: x + 1.0, L_B=1.0, resolvent=normal_cone_resolvent(proj),
                          proj_dom=proj, objective=lambda x: float(0.5 * x[0] ** 2 + x[0]), name="ray-toy")


def load_instance(spec: str):
    """``(triple, x0, kind, instance)`` from a file path or a built-in name.

    Built-ins: ``toy`` (the shifted ray problem, start 1) and
    ``holder[:nu]`` (start 1).
    """
    if spec == "toy":
        return shifted_ray_toy(), np.array([1.0]), "toy", None
    if spec.startswith("holder"):
        nu = float(spec.split(":", 1)[1]) if ":" in spec else 0.5
        return encode_holder_toy(nu), np.array([1.0]), "holder", None
    obj = json.loads(Path(spec).read_text())
    tag = obj.get("format", "")
    if tag == qcqp.FORMAT_TAG:
        inst = qcqp.qcqp_from_dict(obj)
        return qcqp.encode_qcqp(inst), inst.start_point(), "qcqp", inst
    if tag == frac.FORMAT_TAG:
        inst = frac.fractional_from_dict(obj)
        return frac.encode_fractional(inst), inst.start_point(), "fractional", inst
    raise ValueError(f"{spec}: unknown instance format {tag!r}")


def make_config(tol, max_iters, time_limit, strategy, epsilon, alpha, record_history=False, stop_rule=None):
    params = StepsizeParams(strategy, alpha_min=alpha, alpha_max=alpha, epsilon=epsilon)
    return SolverConfig(stepsize=params, tol_residual=tol, max_iters=max_iters, record_history=record_history,
                        time_limit_seconds=time_limit, stop_rule=stop_rule)


def run_solver(name: str, triple, x0, config: SolverConfig, ls: LineSearchParams | None = None) -> RunReport:
    if name == "afbf":
        return solve(triple, x0, config)
    if name == "tseng":
        return tseng_solve(triple, x0, config, ls or TSENG_QCQP)
    if name == "fbf-thovuo":
        return fbf_thovuo_solve(triple, x0, config, ls or THOVUO_DEFAULT)
    raise UsageError(f"unknown solver {name!r}")


def write_trajectory(report: RunReport, path) -> Path:
    p = output_path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "u_norm", "f", "elapsed"])
        for r in report.history:
            w.writerow([r.k, repr(float(r.u_norm)), "" if r.objective is None else repr(float(r.objective)),
                        repr(float(r.elapsed))])
    return p


def exit_code(report: RunReport) -> int:
    if report.status == CONVERGED:
        return EXIT_OK
    if report.status == ERROR:
        return EXIT_SOLVER
    return EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    if args.family == "qcqp":
        inst = qcqp.gen_synthetic_qcqp(args.n, args.p or args.n, args.m, args.strongly_convex, args.density,
                                       args.seed)
        text, dig = json.dumps(qcqp.qcqp_to_dict(inst)), qcqp.digest(inst)
    else:
        inst = frac.gen_fractional(args.n, args.eta, args.seed, args.perturbation, args.solvable)
        text, dig = json.dumps(frac.fractional_to_dict(inst)), frac.digest(inst)
    out = args.out or f"{args.family}_n{args.n}_seed{args.seed}.json"
    p = _write_text(out, text)
    dig["path"] = str(p)
    print(json.dumps(dig))
    return EXIT_OK


def cmd_solve(args) -> int:
    triple, x0, kind, _ = load_instance(args.instance)
    strategy = args.strategy or (CHOICE1 if triple.model.mu == 2.0 else CHOICE2)
    epsilon = args.epsilon if args.epsilon is not None else (args.tol if strategy == CHOICE2 else None)
    config = make_config(args.tol, args.max_iters, args.time_limit, strategy, epsilon, args.alpha,
                         record_history=bool(args.trajectory) or args.history)
    report = run_solver(args.solver, triple, x0, config)
    out = report.to_dict(include_history=args.history or bool(args.trajectory), include_timing=not args.no_timing)
    out["instance"] = args.instance if kind in ("toy", "holder") else Path(args.instance).name
    text = json.dumps(out, indent=1, sort_keys=True)
    if args.report:
        _write_text(args.report, text + "\n")
    if args.trajectory:
        write_trajectory(report, args.trajectory)
    summary = {"status": report.status, "iterations": report.iterations, "final_u_norm": report.final_u_norm,
               "wall_time_seconds": report.wall_time_seconds, "line_search_evals": report.line_search_evals}
    print(json.dumps(summary))
    if report.status == ERROR:
        print(f"error: {report.message}", file=sys.stderr)
    return exit_code(report)


BENCH_FIELDS = ["instance", "solver", "rep", "ITER", "CPU", "LSE", "final_u", "status"]


def _bench_instances(spec: dict, seed: int):
    family = spec.get("family", "qcqp")
    files = spec.get("files") or []
    for f in files:
        triple, x0, kind, _ = load_instance(f)
        yield Path(f).name, triple, x0
    entries = spec.get("instances") or []
    seeds = np.random.SeedSequence(seed).spawn(len(entries))
    for entry, ss in zip(entries, seeds):
        sub = int(ss.generate_state(1, dtype=np.uint32)[0])
        if family == "qcqp":
            inst = qcqp.gen_synthetic_qcqp(entry["n"], entry.get("p", entry["n"]), entry["m"],
                                           entry.get("strongly_convex", False), entry.get("density", 0.05), sub)
            name = f"qcqp_n{entry['n']}_m{entry['m']}_sc{int(entry.get('strongly_convex', False))}_s{sub}"
            yield name, qcqp.encode_qcqp(inst), inst.start_point()
        elif family == "fractional":
            inst = frac.gen_fractional(entry["n"], entry["eta"], sub, entry.get("perturbation", 0.01),
                                       entry.get("solvable", False))
            yield f"frac_n{entry['n']}_eta{entry['eta']}_s{sub}", frac.encode_fractional(inst), inst.start_point()
        else:
            raise UsageError(f"unknown family {family!r}")


def bench_spec_from_args(args) -> dict:
    if args.config:
        try:
            spec = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise OSError(f"cannot read bench config: {exc}") from exc
    else:
        spec = {"family": args.family, "files": args.instance or [], "solvers": args.solvers,
                "repetitions": args.repetitions, "seed": args.seed, "tol": args.tol, "max_iters": args.max_iters,
                "time_limit": args.time_limit, "out": args.out, "trajectory_dir": args.trajectory_dir,
                "instances": []}
        if args.n:
            spec["instances"] = [{"n": args.n, "p": args.p or args.n, "m": args.m, "eta": args.eta,
                                  "strongly_convex": args.strongly_convex, "solvable": args.solvable}]
    solvers = spec.get("solvers")
    if isinstance(solvers, str):
        solvers = [s for s in solvers.split(",") if s]
    if not solvers:
        raise UsageError("at least one solver is required")
    bad = [s for s in solvers if s not in SOLVERS]
    if bad:
        raise UsageError(f"unknown solver(s) {bad}; choose from {SOLVERS}")
    spec["solvers"] = solvers
    if int(spec.get("repetitions", 1)) < 1:
        raise UsageError("repetitions must be >= 1")
    if not spec.get("files") and not spec.get("instances"):
        raise UsageError("no instances: pass files, generator dimensions or a config")
    return spec


def cmd_bench(args) -> int:
    spec = bench_spec_from_args(args)
    seed = int(spec.get("seed", 0))
    reps = int(spec.get("repetitions", 1))
    tol = float(spec.get("tol", 1e-2))
    max_iters = int(spec.get("max_iters", 100_000))
    time_limit = spec.get("time_limit")
    traj_dir = spec.get("trajectory_dir")
    ls_over = spec.get("line_search", {})
    rows = []
    for name, triple, x0 in _bench_instances(spec, seed):
        for solver in spec["solvers"]:
            ls = LineSearchParams(**ls_over[solver]) if solver in ls_over else None
            for rep in range(reps):
                config = make_config(tol, max_iters, time_limit, CHOICE1, None, 0.99,
                                     record_history=bool(traj_dir))
                try:
                    report = run_solver(solver, triple, x0, config, ls)
                    row = report.table_row()
                except Exception as exc:  # recorded per row, the run continues
                    log.warning("%s/%s failed: %s", name, solver, exc)
                    row = {"ITER": 0, "CPU": float("nan"), "LSE": 0, "final_u": float("nan"), "status": ERROR}
                    report = None
                row.update({"instance": name, "solver": solver, "rep": rep})
                rows.append(row)
                if traj_dir and report is not None:
                    write_trajectory(report, Path(traj_dir) / f"{name}_{solver}_r{rep}.csv")
    rows.sort(key=lambda r: (r["instance"], r["solver"], r["rep"]))
    out = spec.get("out") or "bench.csv"
    p = output_path(out)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(r[k])) if k in ("CPU", "final_u") else r[k]) for k in BENCH_FIELDS})
    med = median_rows(rows)
    mp = p.with_name(p.stem + "_medians.csv")
    with open(mp, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["instance", "solver", "runs", "converged", "ITER", "CPU", "LSE"])
        w.writeheader()
        for r in med:
            w.writerow(r)
    for r in med:
        print(f"{r['instance']:<40s} {r['solver']:<11s} ITER={r['ITER']:<10g} CPU={r['CPU']:<10.4g} "
              f"LSE={r['LSE']:<10g} converged={r['converged']}/{r['runs']}")
    return EXIT_OK if all(r["status"] == CONVERGED for r in rows) else EXIT_NOT_CONVERGED


def median_rows(rows) -> list:
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["instance"], r["solver"]), []).append(r)
    out = []
    for (inst, solver), rs in sorted(groups.items()):
        out.append({"instance": inst, "solver": solver, "runs": len(rs),
                    "converged": sum(r["status"] == CONVERGED for r in rs),
                    "ITER": statistics.median(r["ITER"] for r in rs),
                    "CPU": statistics.median(r["CPU"] for r in rs),
                    "LSE": statistics.median(r["LSE"] for r in rs)})
    return out


def read_bench_csv(path) -> list:
    """Parse a bench CSV back into row dicts with numeric columns restored."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["rep"], r["ITER"], r["LSE"] = int(r["rep"]), int(r["ITER"]), int(r["LSE"])
        r["CPU"], r["final_u"] = float(r["CPU"]), float(r["final_u"])
    return rows


def run_svm(data_path, m_kernels: int, sigma_interval=(1e-1, 10.0), C_margin: float = 1.0, seed: int = 0,
            tol: float = 1e-4, max_iters: int = 10**6, solver: str = "afbf") -> dict:
    """Train the multi-kernel and single-kernel classifiers and report accuracies."""
    ds = svmp.load_dataset_csv(data_path)
    X_tr, l_tr, X_te, l_te = ds.split(seed)
    prob = svmp.build_svm_qcqp(X_tr, l_tr, m_kernels, sigma_interval, C_margin)
    inst = prob.instance
    triple = qcqp.encode_qcqp(inst)
    x0 = inst.start_point()
    pre = solve(triple, x0, SolverConfig(tol_residual=1e-8, max_iters=max_iters))
    if pre.status == ERROR:
        raise RuntimeError(f"reference solve failed: {pre.message}")
    f_star = inst.objective(pre.final_x)
    cfg = SolverConfig(tol_residual=tol, max_iters=max_iters, stop_rule=svmp.svm_stop_rule(prob, f_star, tol))
    report = run_solver(solver, triple, x0, cfg, TSENG_SVM if solver == "tseng" else None)
    x, _, y, y_eq = prob.split(report.final_x)
    bias = prob.bias(x, y, y_eq)
    g = inst.constraints(report.final_x[: inst.n])
    tsa = svmp.accuracy(svmp.svm_predict(x, bias, prob, y, X_te), l_te)
    train_acc = svmp.accuracy(svmp.svm_predict(x, bias, prob, y, X_tr), l_tr)

    single = svmp.single_kernel_svm(X_tr, l_tr, 7.0, C_margin)
    srep = solve(single.triple, np.zeros(single.triple.dim), SolverConfig(tol_residual=1e-6, max_iters=max_iters))
    sx = srep.final_x[:-1]
    sbias = single.bias(sx, srep.final_x[-1])
    tsa0 = svmp.accuracy(single.predict(sx, sbias, X_te), l_te)
    active = [i for i in range(m_kernels) if y[i] > 1e-6]
    return {
        "status": report.status,
        "iterations": report.iterations,
        "cpu": report.wall_time_seconds,
        "line_search_evals": report.line_search_evals,
        "f_star": f_star,
        "criterion": svmp.svm_criterion(inst, report.final_x, f_star),
        "TSA": tsa,
        "TSA0": tsa0,
        "train_accuracy": train_acc,
        "sigma2": prob.sigma2.tolist(),
        "active": [{"sigma2": float(prob.sigma2[i]), "y": float(y[i])} for i in active],
        "y": y.tolist(),
        "bias": bias,
        "complementarity": float(np.max(np.abs(y * g[:m_kernels]))),
        "single_kernel_status": srep.status,
        "n_train": int(X_tr.shape[0]),
        "n_test": int(X_te.shape[0]),
    }


def cmd_svm(args) -> int:
    data = args.data or svmp.bundled_toy_path()
    res = run_svm(data, args.m, tuple(args.sigma_interval), args.C, args.seed, args.tol, args.max_iters, args.solver)
    text = json.dumps(res, indent=1, sort_keys=True)
    if args.out:
        _write_text(args.out, text + "\n")
    print(text)
    return EXIT_OK if res["status"] == CONVERGED else (EXIT_SOLVER if res["status"] == ERROR else EXIT_NOT_CONVERGED)


# ---------------------------------------------------------------------------


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afbf", description="Adaptive forward-backward-forward solver toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance file")
    g.add_argument("family", choices=["qcqp", "fractional"])
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--p", type=_positive_int, help="rows of R_i (qcqp; default n)")
    g.add_argument("--m", type=_positive_int, default=1, help="constraints (qcqp)")
    g.add_argument("--strongly-convex", action="store_true")
    g.add_argument("--density", type=_positive_float, default=0.05)
    g.add_argument("--eta", type=float, default=1.0, help="r = eta d (fractional)")
    g.add_argument("--perturbation", type=float, default=0.01)
    g.add_argument("--solvable", action="store_true", help="fractional instance with a known minimizer set")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance file (or the built-ins 'toy', 'holder[:nu]')")
    s.add_argument("instance")
    s.add_argument("--solver", choices=SOLVERS, default="afbf")
    s.add_argument("--tol", type=_positive_float, default=1e-2)
    s.add_argument("--max-iters", type=_positive_int, default=100_000)
    s.add_argument("--time-limit", type=_positive_float)
    s.add_argument("--strategy", choices=[CHOICE1, CHOICE2])
    s.add_argument("--epsilon", type=_positive_float)
    s.add_argument("--alpha", type=float, default=0.99)
    s.add_argument("--report", help="JSON report path")
    s.add_argument("--trajectory", help="trajectory CSV path (k, u_norm, f, elapsed)")
    s.add_argument("--history", action="store_true", help="include trajectory arrays in the report")
    s.add_argument("--no-timing", action="store_true", help="omit wall-clock fields from the report")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="compare solvers; writes a CSV with ITER, CPU, LSE")
    b.add_argument("--config", help="JSON bench spec (overrides the flags below)")
    b.add_argument("--family", choices=["qcqp", "fractional"], default="qcqp")
    b.add_argument("--instance", action="append", help="instance file (repeatable)")
    b.add_argument("--n", type=_positive_int)
    b.add_argument("--p", type=_positive_int)
    b.add_argument("--m", type=_positive_int, default=1)
    b.add_argument("--eta", type=float, default=1.0)
    b.add_argument("--strongly-convex", action="store_true")
    b.add_argument("--solvable", action="store_true")
    b.add_argument("--solvers", default="afbf,tseng", help="comma-separated subset of " + ",".join(SOLVERS))
    b.add_argument("--repetitions", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--tol", type=_positive_float, default=1e-2)
    b.add_argument("--max-iters", type=_positive_int, default=100_000)
    b.add_argument("--time-limit", type=_positive_float)
    b.add_argument("--out", default="bench.csv")
    b.add_argument("--trajectory-dir")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("svm", help="multi-kernel SVM on a CSV dataset (default: bundled toy)")
    v.add_argument("--data")
    v.add_argument("--m", type=_positive_int, default=3)
    v.add_argument("--sigma-interval", type=_positive_float, nargs=2, default=[1e-1, 10.0])
    v.add_argument("--C", type=_positive_float, default=1.0)
    v.add_argument("--solver", choices=["afbf", "tseng"], default="afbf")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=_positive_float, default=1e-4)
    v.add_argument("--max-iters", type=_positive_int, default=10**6)
    v.add_argument("--out")
    v.set_defaults(func=cmd_svm)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"afbf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"afbf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"afbf: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"afbf: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
