"""Multi-kernel SVM on the bundled separable toy.

Run ``python demos/svm_toy.py``. Trains with 1, 3 and 5 Gaussian kernels
and reports test accuracy (TSA), the single-kernel baseline (TSA0) and the
kernel weights ``y``.
"""

from afbf.cli import run_svm
from afbf.problems.svm import bundled_toy_path


def main():
    for m in (1, 3, 5):
        res = run_svm(bundled_toy_path(), m)
        active = ", ".join(f"sigma2={a['sigma2']:.3g}: y={a['y']:.4f}" for a in res["active"])
        print(f"m={m}: {res['status']} in {res['iterations']} it, TSA={res['TSA']:.3f}, TSA0={res['TSA0']:.3f}, "
              f"sum y={sum(res['y']):.4f}, active [{active}]")


if __name__ == "__main__":
    main()
