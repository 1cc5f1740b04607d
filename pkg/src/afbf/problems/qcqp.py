"""Convex QCQPs in Lagrangian primal-dual form.

The program

    min  1/2 x^T Q_0 x + b^T x
    s.t. g_i(x) = 1/2 x^T Q_i x + l_i^T x - r_i <= 0,   i <= m_bar
         g_i(x) = l_i^T x - r_i = 0,                    i >  m_bar
         x[nonneg] >= 0

becomes ``0 in A(x,y) + B(x,y) + C(x,y)`` on ``(x, y)`` with

    A(x, y) = (sum_i y_i grad g_i(x), -g(x)),   B(x, y) = (Q_0 x + b, 0),

and ``C`` the normal cone of ``{x[nonneg] >= 0} x [0,inf)^m_bar x R^(m-m_bar)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ..linalg import as_matrix, is_zero, min_rayleigh, spectral_norm
from ..operators import (
    TINY_LIPSCHITZ,
    GeneralizedLipschitzModel,
    OperatorTriple,
    constant,
    nonneg_projector,
    normal_cone_resolvent,
)

FORMAT_TAG = "afbf-qcqp/1"


@dataclass
class QcqpInstance:
    """Data of a convex QCQP. ``Q[0]`` is the objective matrix, ``Q[i]`` belongs to ``g_i``."""

    n: int
    m: int
    m_bar: int
    Q: list
    b: np.ndarray
    l: np.ndarray  # shape (m, n)
    r: np.ndarray  # shape (m,)
    nonneg: Optional[np.ndarray] = None  # bool mask over x; None means all of x >= 0
    x0: Optional[np.ndarray] = None  # suggested start point of length n + m
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.Q = [as_matrix(Q) for Q in self.Q]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.l = np.asarray(self.l, dtype=float).reshape(self.m, self.n)
        self.r = np.asarray(self.r, dtype=float).reshape(-1)
        if self.nonneg is None:
            self.nonneg = np.ones(self.n, dtype=bool)
        self.nonneg = np.asarray(self.nonneg, dtype=bool)
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)
        self.validate(check_psd=False)

    @property
    def dim(self) -> int:
        return self.n + self.m

    def validate(self, check_psd: bool = True) -> None:
        n, m = self.n, self.m
        if n < 1 or m < 0 or not 0 <= self.m_bar <= m:
            raise ValueError(f"bad dimensions n={n}, m={m}, m_bar={self.m_bar}")
        if len(self.Q) != m + 1:
            raise ValueError(f"expected {m + 1} matrices Q_0..Q_m, got {len(self.Q)}")
        for i, Q in enumerate(self.Q):
            if Q.shape != (n, n):
                raise ValueError(f"Q_{i} has shape {Q.shape}, expected {(n, n)}")
        if self.b.shape != (n,) or self.r.shape != (m,) or self.nonneg.shape != (n,):
            raise ValueError("b, r or nonneg mask has the wrong length")
        if self.x0 is not None and self.x0.shape != (n + m,):
            raise ValueError(f"x0 must have length {n + m}")
        for i in range(self.m_bar + 1, m + 1):
            if not is_zero(self.Q[i]):
                raise ValueError(f"equality constraint {i} must have Q_{i} = 0")
        if check_psd:
            for i, Q in enumerate(self.Q):
                asym = Q - Q.T
                if (asym.count_nonzero() if sp.issparse(asym) else np.count_nonzero(asym)) and \
                        spectral_norm(asym) > 1e-12 * max(spectral_norm(Q), 1.0):
                    raise ValueError(f"Q_{i} is not symmetric")
                norm = spectral_norm(Q)
                if norm and min_rayleigh(Q, seed=i) < -1e-10 * norm:
                    raise ValueError(f"Q_{i} is not positive semidefinite")

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)[: self.n]
        return float(0.5 * x @ (self.Q[0] @ x) + self.b @ x)

    def constraints(self, x) -> np.ndarray:
        """Values ``g_i(x)`` for ``i = 1..m``."""
        x = np.asarray(x, dtype=float)[: self.n]
        quad = np.array([x @ (Q @ x) for Q in self.Q[1:]]) if self.m else np.zeros(0)
        return 0.5 * quad + self.l @ x - self.r

    def split(self, z):
        z = np.asarray(z, dtype=float)
        return z[: self.n], z[self.n:]

    def start_point(self) -> np.ndarray:
        return self.x0.copy() if self.x0 is not None else np.zeros(self.dim)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QcqpInstance):
            return NotImplemented
        if (self.n, self.m, self.m_bar) != (other.n, other.m, other.m_bar):
            return False
        for P, R in zip(self.Q, other.Q):
            if sp.issparse(P) != sp.issparse(R):
                return False
            if sp.issparse(P):
                if (P != R).nnz:
                    return False
            elif not np.array_equal(P, R):
                return False
        same_x0 = (self.x0 is None and other.x0 is None) or (
            self.x0 is not None and other.x0 is not None and np.array_equal(self.x0, other.x0))
        return (np.array_equal(self.b, other.b) and np.array_equal(self.l, other.l)
                and np.array_equal(self.r, other.r) and np.array_equal(self.nonneg, other.nonneg) and same_x0)


def _stack(mats: Sequence):
    """Vertically stacked constraint matrices, dense when that is cheap."""
    if not any(sp.issparse(M) for M in mats):
        return np.vstack(mats)
    S = sp.vstack(mats, format="csr")
    if S.shape[0] * S.shape[1] <= 4_000_000 and S.nnz > 0.1 * S.shape[0] * S.shape[1]:
        return S.toarray()
    return S


def encode_qcqp(inst: QcqpInstance) -> OperatorTriple:
    """Primal-dual operator triple with the generalized Lipschitz model (mu=2, theta=4).

    The model coefficients are ``b = 5/2 sum ||Q_i||^2`` and
    ``a(x, y) = 2 (rho + sum ||grad g_i(x)||^2)`` with
    ``rho = 2 max(m max_i ||grad g_i(x)||^2, (sum_i ||Q_i|| |y_i|)^2)``.
    The triple's ``model`` attribute carries them.
    """
    n, m = inst.n, inst.m
    Q0 = inst.Q[0]
    b0 = inst.b
    norms = np.array([spectral_norm(Q) for Q in inst.Q[1:]])
    L_B = spectral_norm(Q0)
    if L_B == 0.0:
        L_B = TINY_LIPSCHITZ
    b_coef = 2.5 * float(np.sum(norms**2))
    stack = _stack(inst.Q[1:]) if m else None
    l, r = inst.l, inst.r

    def _grads(x):
        QX = np.asarray(stack @ x).reshape(m, n)
        return QX, QX + l

    def A_and_coeffs(z):
        x, y = z[:n], z[n:]
        if m == 0:
            return np.zeros(n), (0.0, 0.0, 0.0)
        QX, G = _grads(x)
        g = 0.5 * (QX @ x) + l @ x - r
        out = np.concatenate([G.T @ y, -g])
        gn2 = np.einsum("ij,ij->i", G, G)
        rho = 2.0 * max(m * float(gn2.max()), float(norms @ np.abs(y)) ** 2)
        return out, (2.0 * (rho + float(gn2.sum())), b_coef, 0.0)

    def A(z):
        return A_and_coeffs(z)[0]

    def a_coef(z):
        return A_and_coeffs(z)[1][0]

    def B(z):
        out = np.zeros(n + m)
        out[:n] = np.asarray(Q0 @ z[:n]).ravel() + b0
        return out

    mask = np.concatenate([inst.nonneg, np.arange(m) < inst.m_bar])
    proj = nonneg_projector(mask)
    model = GeneralizedLipschitzModel(mu=2.0, theta=4.0, beta=4.0, a=a_coef, b=constant(b_coef))
    return OperatorTriple(
        dim=n + m,
        A=A,
        B=B,
        L_B=L_B,
        resolvent=normal_cone_resolvent(proj),
        proj_dom=proj,
        zeta=1.0,
        model=model,
        objective=inst.objective,
        A_with_coefficients=A_and_coeffs,
        name=f"qcqp(n={n}, m={m})",
    )


# ---------------------------------------------------------------------------
# generator


def gen_synthetic_qcqp(n: int, p: int, m: int, strongly_convex: bool = False, density: float = 0.05,
                       seed: int = 0) -> QcqpInstance:
    """Random convex QCQP with ``Q_i = R_i^T R_i`` for sparse ``R_i`` in ``R^(p x n)``.

    Nonzeros of ``R_i`` are U[0,1] on a ``density`` fraction of entries;
    ``b`` and ``l_i`` are N(0,1); ``r_i`` is U[0,1] (so ``x = 0`` is strictly
    feasible); the start point is U[0,1]. With ``strongly_convex`` each
    ``Q_i`` gets ``delta I`` added, ``delta = 1e-3 ||Q_i||``. All draws come
    from numpy's PCG64 seeded with ``seed``.
    """
    if min(n, p, m) < 1:
        raise ValueError("n, p and m must be >= 1")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in ]0, 1]")
    rng = np.random.default_rng(seed)
    Q = []
    for _ in range(m + 1):
        R = sp.random(p, n, density=density, format="csr", random_state=rng, data_rvs=rng.random)
        Qi = (R.T @ R).tocsr()
        if strongly_convex:
            delta = 1e-3 * spectral_norm(Qi)
            Qi = (Qi + delta * sp.identity(n, format="csr")).tocsr()
        Qi.sort_indices()
        Q.append(Qi)
    b = rng.standard_normal(n)
    l = rng.standard_normal((m, n))
    r = rng.random(m)
    x0 = rng.random(n + m)
    meta = {"generator": "synthetic", "n": n, "p": p, "m": m, "strongly_convex": bool(strongly_convex),
            "density": density, "seed": int(seed)}
    return QcqpInstance(n=n, m=m, m_bar=m, Q=Q, b=b, l=l, r=r, x0=x0, meta=meta)


# ---------------------------------------------------------------------------
# JSON I/O


def _matrix_to_json(M) -> dict:
    if sp.issparse(M):
        C = M.tocoo()
        return {"shape": list(C.shape), "row": C.row.tolist(), "col": C.col.tolist(), "val": C.data.tolist()}
    return {"dense": np.asarray(M).tolist()}


def _matrix_from_json(obj: dict):
    if "dense" in obj:
        return np.array(obj["dense"], dtype=float)
    M = sp.coo_matrix((np.array(obj["val"], dtype=float), (np.array(obj["row"], dtype=np.int64),
                                                           np.array(obj["col"], dtype=np.int64))),
                      shape=tuple(obj["shape"])).tocsr()
    M.sort_indices()
    return M


def qcqp_to_dict(inst: QcqpInstance) -> dict:
    return {
        "format": FORMAT_TAG,
        "n": inst.n,
        "m": inst.m,
        "m_bar": inst.m_bar,
        "Q": [_matrix_to_json(Q) for Q in inst.Q],
        "b": inst.b.tolist(),
        "l": inst.l.tolist(),
        "r": inst.r.tolist(),
        "nonneg": inst.nonneg.astype(int).tolist(),
        "x0": None if inst.x0 is None else inst.x0.tolist(),
        "meta": inst.meta,
    }


def qcqp_from_dict(obj: dict) -> QcqpInstance:
    if obj.get("format") != FORMAT_TAG:
        raise ValueError(f"not a QCQP instance file (format tag {obj.get('format')!r})")
    return QcqpInstance(
        n=int(obj["n"]),
        m=int(obj["m"]),
        m_bar=int(obj["m_bar"]),
        Q=[_matrix_from_json(q) for q in obj["Q"]],
        b=obj["b"],
        l=np.array(obj["l"], dtype=float).reshape(int(obj["m"]), int(obj["n"])),
        r=obj["r"],
        nonneg=np.array(obj["nonneg"], dtype=bool),
        x0=obj.get("x0"),
        meta=obj.get("meta", {}),
    )


def save_qcqp(inst: QcqpInstance, path) -> None:
    Path(path).write_text(json.dumps(qcqp_to_dict(inst)))


def load_qcqp(path) -> QcqpInstance:
    return qcqp_from_dict(json.loads(Path(path).read_text()))


def digest(inst: QcqpInstance) -> dict:
    nnz = [int(Q.nnz) if sp.issparse(Q) else int(np.count_nonzero(Q)) for Q in inst.Q]
    return {"kind": "qcqp", "n": inst.n, "m": inst.m, "m_bar": inst.m_bar, "blocks": len(inst.Q),
            "nnz": int(sum(nnz)), "SC": bool(inst.meta.get("strongly_convex", False)),
            "seed": inst.meta.get("seed")}
