"""Multiple-kernel SVM training as a QCQP, plus a single-kernel baseline QP.

Variables are the dual weights ``x >= 0`` of the training points and a free
scalar ``x0``. The program is

    min  1/2 x^T x / C - e^T x + m x0
    s.t. 1/2 x^T G_i x - x0 <= 0,  i = 1..m,    sum_j l_j x_j = 0,

with ``G_i[j, j'] = l_j l_j' K_i[j, j']`` and each Gaussian kernel matrix
scaled to unit trace on the training split. At a solution the duals
``y_i`` of the kernel constraints weight the kernels and the dual of the
equality constraint is the classifier bias.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..operators import OperatorTriple, box_projector, normal_cone_resolvent
from ..linalg import spectral_norm
from .qcqp import QcqpInstance

KERNEL_PSD_TOL = 1e-8


@dataclass
class SvmDataset:
    points: np.ndarray
    labels: np.ndarray
    train_fraction: float = 0.8

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        self.labels = remap_labels(self.labels)
        if self.points.shape[0] != self.labels.shape[0]:
            raise ValueError("points and labels have different lengths")
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError("train_fraction must lie in ]0, 1]")

    def split(self, seed: int = 0):
        """Seeded shuffle split; features standardized with training statistics.

        Returns ``(X_train, l_train, X_test, l_test)``.
        """
        n = self.points.shape[0]
        order = np.random.default_rng(seed).permutation(n)
        n_tr = n if self.train_fraction == 1.0 else max(1, int(round(self.train_fraction * n)))
        tr, te = order[:n_tr], order[n_tr:]
        X_tr, X_te = self.points[tr], self.points[te]
        mean = X_tr.mean(axis=0)
        std = X_tr.std(axis=0)
        std[std == 0] = 1.0
        l_tr = self.labels[tr]
        if len(np.unique(l_tr)) < 2:
            raise ValueError("degenerate dataset: the training split holds a single class")
        return (X_tr - mean) / std, l_tr, (X_te - mean) / std, self.labels[te]


def remap_labels(labels) -> np.ndarray:
    """Map labels in {-1, +1} or {0, 1} to {-1, +1}."""
    lab = np.asarray(labels, dtype=float).reshape(-1)
    values = set(np.unique(lab).tolist())
    if values <= {-1.0, 1.0}:
        return lab
    if values <= {0.0, 1.0}:
        return 2.0 * lab - 1.0
    raise ValueError(f"labels must lie in {{-1, +1}} or {{0, 1}}, got {sorted(values)}")


def load_dataset_csv(path, train_fraction: float = 0.8) -> SvmDataset:
    """CSV with a header row; the column named ``label`` holds the class."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if "label" not in header:
            raise ValueError(f"{path}: no 'label' column in header {header}")
        li = header.index("label")
        rows = [row for row in reader if row]
    data = np.array(rows, dtype=float)
    feats = np.delete(data, li, axis=1)
    return SvmDataset(points=feats, labels=data[:, li], train_fraction=train_fraction)


def bundled_toy_path() -> Path:
    return Path(__file__).resolve().parent.parent / "data" / "separable_toy.csv"


def gaussian_kernel(X, Y, sigma2: float) -> np.ndarray:
    """``exp(-||x - y||^2 / (2 sigma2))`` for all pairs of rows."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    sq = np.sum(X**2, axis=1)[:, None] + np.sum(Y**2, axis=1)[None, :] - 2.0 * X @ Y.T
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * sigma2))


def sigma_grid(m: int, interval=(1e-1, 10.0)) -> np.ndarray:
    lo, hi = interval
    if m == 1:
        return np.array([np.sqrt(lo * hi)])
    return np.geomspace(lo, hi, m)


@dataclass
class SvmProblem:
    """Encoded multi-kernel SVM together with what prediction needs."""

    instance: QcqpInstance
    X_train: np.ndarray
    l_train: np.ndarray
    sigma2: np.ndarray
    traces: np.ndarray  # trace of each raw training kernel; kernels are divided by it
    C: float

    @property
    def n_train(self) -> int:
        return self.X_train.shape[0]

    def split(self, z):
        """``(x, x0, y_kernels, y_eq)`` from a primal-dual point."""
        n = self.n_train
        z = np.asarray(z, dtype=float)
        return z[:n], z[n], z[n + 1:-1], z[-1]

    def combined_kernel(self, X, y) -> np.ndarray:
        """``sum_i y_i K_i(X, X_train) / trace_i``."""
        K = np.zeros((np.asarray(X).shape[0], self.n_train))
        for yi, s2, tr in zip(y, self.sigma2, self.traces):
            if yi != 0.0:
                K += yi * gaussian_kernel(X, self.X_train, s2) / tr
        return K

    def bias(self, x, y, y_eq: Optional[float] = None, rel_tol: float = 1e-6) -> float:
        """Average of ``l_j (1 - x_j/C) - sum_k x_k l_k K(d_k, d_j)`` over support vectors.

        Falls back to the equality dual ``y_eq`` when no support vector exists.
        """
        x = np.asarray(x, dtype=float)
        sv = x > rel_tol * max(float(x.max(initial=0.0)), 1e-300)
        if not np.any(sv):
            return 0.0 if y_eq is None else float(y_eq)
        K = self.combined_kernel(self.X_train[sv], y)
        vals = self.l_train[sv] * (1.0 - x[sv] / self.C) - K @ (x * self.l_train)
        return float(np.mean(vals))


def build_svm_qcqp(X_train, l_train, m_kernels: int, sigma_interval=(1e-1, 10.0), C_margin: float = 1.0) -> SvmProblem:
    """Encode the multi-kernel SVM on a (standardized) training split."""
    X_train = np.asarray(X_train, dtype=float)
    l_train = remap_labels(l_train)
    if m_kernels < 1:
        raise ValueError("m_kernels must be >= 1")
    n_tr = X_train.shape[0]
    if n_tr < 1:
        raise ValueError("empty training split")
    if C_margin <= 0:
        raise ValueError("C_margin must be positive")
    sig = sigma_grid(m_kernels, sigma_interval)
    n = n_tr + 1
    Q = [np.zeros((n, n))]
    Q[0][:n_tr, :n_tr] = np.eye(n_tr) / C_margin
    traces = []
    LL = np.outer(l_train, l_train)
    for s2 in sig:
        K = gaussian_kernel(X_train, X_train, s2)
        tr = float(np.trace(K))
        K = K / tr
        w = np.linalg.eigvalsh(K)
        if w[0] < -KERNEL_PSD_TOL:
            raise ValueError(f"kernel with sigma^2={s2} is not PSD (min eigenvalue {w[0]})")
        Qi = np.zeros((n, n))
        Qi[:n_tr, :n_tr] = LL * K
        Q.append(Qi)
        traces.append(tr)
    m = m_kernels + 1
    Q.append(np.zeros((n, n)))  # equality constraint
    b = np.concatenate([-np.ones(n_tr), [float(m_kernels)]])
    l = np.zeros((m, n))
    l[:m_kernels, n_tr] = -1.0
    l[m_kernels, :n_tr] = l_train
    r = np.zeros(m)
    nonneg = np.concatenate([np.ones(n_tr, dtype=bool), [False]])
    inst = QcqpInstance(n=n, m=m, m_bar=m_kernels, Q=Q, b=b, l=l, r=r, nonneg=nonneg, x0=np.zeros(n + m),
                        meta={"generator": "svm", "m_kernels": m_kernels, "C": C_margin,
                              "sigma2": sig.tolist()})
    return SvmProblem(instance=inst, X_train=X_train, l_train=l_train, sigma2=sig, traces=np.array(traces),
                      C=C_margin)


def svm_predict(x, bias: float, problem: SvmProblem, y, X) -> np.ndarray:
    """Labels ``sign(sum_k x_k l_k K(d_k, .) + bias)`` (ties go to +1)."""
    K = problem.combined_kernel(X, y)
    score = K @ (np.asarray(x) * problem.l_train) + bias
    return np.where(score >= 0.0, 1.0, -1.0)


def accuracy(pred, labels) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        return float("nan")
    return float(np.mean(np.asarray(pred) == labels))


def svm_stop_rule(problem: SvmProblem, f_star: float, tol: float = 1e-4):
    """Composite rule ``max(|f - f*|, |sum l_j x_j|, max_i max(0, g_i)) <= tol`` on ``p_k``."""
    inst = problem.instance
    mk = inst.m_bar

    def rule(k, p, u_norm):
        return svm_criterion(inst, p, f_star, mk) <= tol

    return rule


def svm_criterion(inst: QcqpInstance, z, f_star: float, m_kernels: Optional[int] = None) -> float:
    mk = inst.m_bar if m_kernels is None else m_kernels
    x = np.asarray(z)[: inst.n]
    g = inst.constraints(x)
    return max(abs(inst.objective(x) - f_star), abs(float(g[mk])), float(np.max(np.maximum(g[:mk], 0.0))))


# ---------------------------------------------------------------------------
# single-kernel baseline


@dataclass
class SingleKernelSvm:
    triple: OperatorTriple
    G: np.ndarray
    K: np.ndarray
    X_train: np.ndarray
    l_train: np.ndarray
    sigma2: float
    C: float

    def bias(self, x, lam: Optional[float] = None, rel_tol: float = 1e-6) -> float:
        """Average ``l_j - sum_k x_k l_k K_jk`` over ``0 < x_j < C`` (equality dual as fallback)."""
        x = np.asarray(x, dtype=float)
        free = (x > rel_tol * self.C) & (x < (1.0 - rel_tol) * self.C)
        if not np.any(free):
            return 0.0 if lam is None else float(lam)
        return float(np.mean(self.l_train[free] - self.K[free] @ (x * self.l_train)))

    def predict(self, x, bias: float, X) -> np.ndarray:
        score = gaussian_kernel(X, self.X_train, self.sigma2) @ (np.asarray(x) * self.l_train) + bias
        return np.where(score >= 0.0, 1.0, -1.0)


def single_kernel_svm(X_train, l_train, sigma2: float = 7.0, C_margin: float = 1.0) -> SingleKernelSvm:
    """Box-constrained SVM dual as a primal-dual linear inclusion.

    Unknowns ``(x, lam)``: ``B(x, lam) = (G x - e + lam l, -l^T x)`` is
    monotone (PSD plus skew) and ``C`` is the normal cone of ``[0, C]^n x R``.
    """
    X_train = np.asarray(X_train, dtype=float)
    l_train = remap_labels(l_train)
    n = X_train.shape[0]
    K = gaussian_kernel(X_train, X_train, sigma2)
    G = np.outer(l_train, l_train) * K
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = G
    M[:n, n] = l_train
    M[n, :n] = -l_train
    shift = np.concatenate([-np.ones(n), [0.0]])

    def B(z):
        return M @ z + shift

    def objective(z):
        x = z[:n]
        return float(0.5 * x @ G @ x - x.sum())

    proj = box_projector(np.concatenate([np.zeros(n), [-np.inf]]), np.concatenate([np.full(n, C_margin), [np.inf]]))
    triple = OperatorTriple(dim=n + 1, B=B, L_B=spectral_norm(M.T @ M) ** 0.5, resolvent=normal_cone_resolvent(proj),
                            proj_dom=proj, objective=objective, name="single-kernel-svm")
    return SingleKernelSvm(triple=triple, G=G, K=K, X_train=X_train, l_train=l_train, sigma2=sigma2, C=C_margin)
