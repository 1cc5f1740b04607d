"""Fractional programs over the halfspace ``D = {x : d^T x >= 0}``.

Two objectives are supported::

    linear     f(x) = r^T x + (h^T x + h0) / (d^T x + d0)
    quadratic  f(x) = (1/2 x^T Q x - h^T x + h0) / (d^T x + d0)

with ``d0 > 0``. The inclusion is ``0 in grad f(x) + N_D(x)``, i.e. ``A = grad f``,
``B = 0`` and the resolvent of ``C = N_D`` is the halfspace projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..linalg import spectral_norm
from ..operators import (
    GeneralizedLipschitzModel,
    OperatorError,
    OperatorTriple,
    constant,
    halfspace_projector,
    normal_cone_resolvent,
)

LINEAR = "LinearFractional"
QUADRATIC = "QuadraticFractional"
FORMAT_TAG = "afbf-fractional/1"


@dataclass
class FractionalInstance:
    variant: str
    h: np.ndarray
    h0: float
    d: np.ndarray
    d0: float
    r: Optional[np.ndarray] = None
    Q: Optional[np.ndarray] = None
    x0: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in (LINEAR, QUADRATIC):
            raise ValueError(f"unknown variant {self.variant!r}")
        self.h = np.asarray(self.h, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        self.h0, self.d0 = float(self.h0), float(self.d0)
        n = self.h.shape[0]
        if self.d.shape != (n,):
            raise ValueError("h and d must have the same length")
        if not self.d0 > 0:
            raise ValueError("d0 must be positive")
        if not np.any(self.d):
            raise ValueError("d must be nonzero")
        if self.variant == LINEAR:
            self.r = np.zeros(n) if self.r is None else np.asarray(self.r, dtype=float)
            if self.r.shape != (n,):
                raise ValueError("r has the wrong length")
        else:
            if self.Q is None:
                raise ValueError("the quadratic variant needs Q")
            self.Q = np.asarray(self.Q, dtype=float)
            if self.Q.shape != (n, n) or not np.allclose(self.Q, self.Q.T):
                raise ValueError("Q must be a symmetric n x n matrix")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def denominator(self, x) -> float:
        s = float(self.d @ x) + self.d0
        if not s > 0:
            raise OperatorError(f"d^T x + d0 = {s} <= 0: point outside the domain of f")
        return s

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        s = self.denominator(x)
        if self.variant == LINEAR:
            return float(self.r @ x) + (float(self.h @ x) + self.h0) / s
        return (0.5 * float(x @ (self.Q @ x)) - float(self.h @ x) + self.h0) / s

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = self.denominator(x)
        if self.variant == LINEAR:
            return self.r + self.h / s - ((float(self.h @ x) + self.h0) / (s * s)) * self.d
        Qx = self.Q @ x
        num = 0.5 * float(x @ Qx) - float(self.h @ x) + self.h0
        return (Qx - self.h) / s - (num / (s * s)) * self.d

    def start_point(self) -> np.ndarray:
        if self.x0 is not None:
            return self.x0.copy()
        return np.zeros(self.n)


def linear_fractional_constants(inst: FractionalInstance, literal: bool = False):
    """``(a(.), b)`` of the bound ``||grad f(x) - grad f(y)||^2 <= a(x) r^2 + b r^4``.

    The Hessian term ``(d h^T + h d^T)/s^2`` has spectral norm
    ``(|d^T h| + ||d|| ||h||)/s^2``. The default uses
    ``kappa = (|d^T h| + ||d|| ||h||)/2`` where the literal form uses
    ``|d^T h|``; both coincide when ``h`` is parallel to ``d``, and only the
    default is a valid bound for general ``h``.
    """
    d, h, d0 = inst.d, inst.h, inst.d0
    nd2 = float(d @ d)
    dh = abs(float(d @ h))
    kappa = dh if literal else 0.5 * (dh + np.sqrt(nd2) * float(np.linalg.norm(h)))
    b = 8.0 * nd2**2 * float(h @ h) / d0**6
    scale = 8.0 / d0**4

    def a(x):
        return scale * ((nd2 / d0) * abs(float(h @ x) + inst.h0) + kappa) ** 2

    return a, b


def quadratic_fractional_constants(inst: FractionalInstance):
    """``(a(.), b, c)`` with exponents ``(2, 4, 6)`` for the quadratic-over-linear objective."""
    d, h, d0, Q = inst.d, inst.h, inst.d0, inst.Q
    nd = float(np.linalg.norm(d))
    nh = float(np.linalg.norm(h))
    nQ = spectral_norm(Q)
    c = 12.0 * nd**4 * nQ**2 / d0**6
    b = 12.0 * (nd**2 * nh / d0**3 + nd * nQ / d0**2) ** 2

    def a(x):
        x = np.asarray(x, dtype=float)
        term = (nQ / d0 + 2.0 * nd**2 / d0**3 * (nQ * float(x @ x) + abs(float(h @ x) - inst.h0))
                + 2.0 * nd / d0**2 * float(np.linalg.norm(Q @ x - h)))
        return 3.0 * term * term

    return a, b, c


def encode_fractional(inst: FractionalInstance, literal_constants: bool = False) -> OperatorTriple:
    """Triple ``A = grad f``, ``B = 0``, ``C = N_D`` with the matching Lipschitz model."""
    if inst.variant == LINEAR:
        a, b = linear_fractional_constants(inst, literal=literal_constants)
        model = GeneralizedLipschitzModel(mu=2.0, theta=4.0, beta=4.0, a=a, b=constant(b))
    else:
        a, b, c = quadratic_fractional_constants(inst)
        model = GeneralizedLipschitzModel(mu=2.0, theta=4.0, beta=6.0, a=a, b=constant(b), c=constant(c))
    proj = halfspace_projector(inst.d, 0.0)
    return OperatorTriple(
        dim=inst.n,
        A=inst.gradient,
        resolvent=normal_cone_resolvent(proj),
        proj_dom=proj,
        zeta=1.0,
        model=model,
        objective=inst.objective,
        name=f"{inst.variant}(n={inst.n})",
    )


def gen_fractional(n: int, eta: float, seed: int = 0, perturbation: float = 0.01,
                   solvable: bool = False) -> FractionalInstance:
    """Random linear-fractional instance with ``r = eta d``.

    ``d`` and ``h0`` are N(0,1), ``d0`` is U[0,1], ``h = d + perturbation * nu``
    with ``nu`` U[0,1], and the start point is the projection of an N(0,1)
    vector onto ``D``. For ``h != d`` the objective is unbounded below on
    ``D``, so such instances are used for trajectory comparisons only.

    With ``solvable=True`` the instance instead takes ``h = d`` and
    ``h0 = d0 + eta (t* + d0)^2`` for a drawn ``t*`` in [0.5, 1.5]; then ``f``
    depends on ``t = d^T x`` only, is convex in ``t`` and every ``x`` with
    ``d^T x = t*`` is a minimizer.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if eta < 0:
        raise ValueError("eta must be >= 0")
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(n)
    h0 = float(rng.standard_normal())
    nu = rng.random(n)
    d0 = float(rng.random())
    # keep d0 away from 0, where every constant blows up
    d0 = max(d0, 1e-3)
    t = rng.standard_normal(n)
    t_star = float(rng.uniform(0.5, 1.5))
    meta = {"generator": "fractional", "n": n, "eta": eta, "seed": int(seed), "perturbation": perturbation,
            "solvable": bool(solvable)}
    if solvable:
        if eta <= 0:
            raise ValueError("the solvable variant needs eta > 0")
        h = d.copy()
        h0 = d0 + eta * (t_star + d0) ** 2
        meta["t_star"] = t_star
    else:
        h = d + perturbation * nu
    x0 = halfspace_projector(d)(t)
    return FractionalInstance(variant=LINEAR, h=h, h0=h0, d=d, d0=d0, r=eta * d, x0=x0, meta=meta)


def fractional_to_dict(inst: FractionalInstance) -> dict:
    return {
        "format": FORMAT_TAG,
        "variant": inst.variant,
        "h": inst.h.tolist(),
        "h0": inst.h0,
        "d": inst.d.tolist(),
        "d0": inst.d0,
        "r": None if inst.r is None else inst.r.tolist(),
        "Q": None if inst.Q is None else inst.Q.tolist(),
        "x0": None if inst.x0 is None else inst.x0.tolist(),
        "meta": inst.meta,
    }


def fractional_from_dict(obj: dict) -> FractionalInstance:
    if obj.get("format") != FORMAT_TAG:
        raise ValueError(f"not a fractional instance file (format tag {obj.get('format')!r})")
    return FractionalInstance(variant=obj["variant"], h=obj["h"], h0=obj["h0"], d=obj["d"], d0=obj["d0"],
                              r=obj.get("r"), Q=obj.get("Q"), x0=obj.get("x0"), meta=obj.get("meta", {}))


def save_fractional(inst: FractionalInstance, path) -> None:
    Path(path).write_text(json.dumps(fractional_to_dict(inst)))


def load_fractional(path) -> FractionalInstance:
    return fractional_from_dict(json.loads(Path(path).read_text()))


def digest(inst: FractionalInstance) -> dict:
    return {"kind": "fractional", "variant": inst.variant, "n": inst.n, "eta": inst.meta.get("eta"),
            "solvable": inst.meta.get("solvable", False), "seed": inst.meta.get("seed")}
