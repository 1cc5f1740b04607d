"""Operator triples ``0 in Ax + Bx + Cx`` and their generalized Lipschitz models.

An :class:`OperatorTriple` bundles the single-valued operators ``A`` and
``B``, the resolvent of ``gamma * C`` and the projection onto ``dom C``,
together with the constants the adaptive stepsize needs:

* ``L_B`` -- Lipschitz constant of ``B`` on ``dom C``;
* ``zeta``, ``tau`` -- resolvent displacement constants, i.e. with
  ``q = proj_dom(w)`` and ``z = q - gamma*u`` one has
  ``||q - J_{gamma C}(z)|| <= gamma * (zeta*||u|| + tau)``;
* ``model`` -- a :class:`GeneralizedLipschitzModel` bounding
  ``||A z1 - A z2||^2`` by ``a(z1) r^mu + b(z1) r^theta + c(z1) r^beta``
  with ``r = ||z1 - z2||``.

Everything here is immutable and evaluation is pure, so one triple can be
shared by concurrent solver runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

Vector = np.ndarray
Coefficient = Callable[[Vector], float]

# Default tau when C carries no Lipschitz term (any tau > 0 is admissible).
DEFAULT_TAU = 1e-8
# Stand-in Lipschitz constant when B = 0.
TINY_LIPSCHITZ = 1e-8


class OperatorError(ValueError):
    """Raised for dimension mismatches and ill-posed evaluations."""


def constant(value: float) -> Coefficient:
    """Coefficient evaluator returning ``value`` everywhere."""
    value = float(value)

    def _const(x: Vector) -> float:
        return value

    _const.value = value  # type: ignore[attr-defined]
    return _const


ZERO = constant(0.0)


@dataclass(frozen=True)
class GeneralizedLipschitzModel:
    """Exponents and coefficient evaluators of the generalized Lipschitz bound."""

    mu: float
    theta: float
    beta: float
    a: Coefficient = ZERO
    b: Coefficient = ZERO
    c: Coefficient = ZERO

    def __post_init__(self):
        if not 0.0 < self.mu <= 2.0:
            raise ValueError(f"mu must lie in ]0, 2], got {self.mu}")
        if self.theta < 2.0 or self.beta < 2.0:
            raise ValueError("theta and beta must be >= 2")

    def coefficients(self, x: Vector) -> tuple[float, float, float]:
        a, b, c = float(self.a(x)), float(self.b(x)), float(self.c(x))
        if min(a, b, c) < 0.0 or not np.isfinite([a, b, c]).all():
            raise OperatorError(f"model coefficients must be finite and >= 0, got {(a, b, c)}")
        return a, b, c

    def bound(self, z1: Vector, dist: float) -> float:
        """Right-hand side of the bound at ``z1`` for a displacement of length ``dist``."""
        a, b, c = self.coefficients(z1)
        return a * dist**self.mu + b * dist**self.theta + c * dist**self.beta


def _zero_operator(x: Vector) -> Vector:
    return np.zeros_like(x)


def _identity_resolvent(gamma: float, z: Vector) -> Vector:
    return np.array(z, dtype=float, copy=True)


def _identity(z: Vector) -> Vector:
    return np.array(z, dtype=float, copy=True)


@dataclass(frozen=True)
class OperatorTriple:
    """Evaluators and constants for ``0 in Ax + Bx + Cx``.

    ``A_with_coefficients`` is an optional fused evaluator returning
    ``(Ax, (a, b, c))``. Encoders whose model coefficients share work with
    ``A`` (the QCQP gradients ``Q_i x + l_i`` for instance) provide it so a
    solver step does not repeat matrix products.
    """

    dim: int
    A: Callable[[Vector], Vector] = _zero_operator
    B: Callable[[Vector], Vector] = _zero_operator
    L_B: float = TINY_LIPSCHITZ
    resolvent: Callable[[float, Vector], Vector] = _identity_resolvent
    proj_dom: Callable[[Vector], Vector] = _identity
    zeta: float = 1.0
    tau: float = DEFAULT_TAU
    model: GeneralizedLipschitzModel = field(
        default_factory=lambda: GeneralizedLipschitzModel(mu=2.0, theta=2.0, beta=2.0)
    )
    objective: Optional[Callable[[Vector], float]] = None
    A_with_coefficients: Optional[Callable[[Vector], tuple]] = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not (self.L_B > 0 and self.zeta > 0 and self.tau > 0):
            raise ValueError("L_B, zeta and tau must be positive")

    def _check(self, x: Vector) -> Vector:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise OperatorError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x

    def eval_A(self, x: Vector) -> Vector:
        x = self._check(x)
        out = np.asarray(self.A(x), dtype=float)
        if not np.all(np.isfinite(out)):
            raise OperatorError("A returned non-finite values; the instance is ill-posed at this point")
        return out

    def eval_B(self, x: Vector) -> Vector:
        x = self._check(x)
        out = np.asarray(self.B(x), dtype=float)
        if not np.all(np.isfinite(out)):
            raise OperatorError("B returned non-finite values")
        return out

    def eval_A_and_coefficients(self, x: Vector) -> tuple[Vector, tuple[float, float, float]]:
        """``Ax`` together with the model coefficients ``(a, b, c)`` at ``x``."""
        if self.A_with_coefficients is None:
            return self.eval_A(x), self.model.coefficients(x)
        x = self._check(x)
        Ax, coeffs = self.A_with_coefficients(x)
        Ax = np.asarray(Ax, dtype=float)
        if not np.all(np.isfinite(Ax)):
            raise OperatorError("A returned non-finite values; the instance is ill-posed at this point")
        a, b, c = (float(v) for v in coeffs)
        if min(a, b, c) < 0.0 or not np.isfinite([a, b, c]).all():
            raise OperatorError(f"model coefficients must be finite and >= 0, got {(a, b, c)}")
        return Ax, (a, b, c)


def eval_A(triple: OperatorTriple, x: Vector) -> Vector:
    return triple.eval_A(x)


# ---------------------------------------------------------------------------
# sampled certificates


@dataclass(frozen=True)
class SampleCheck:
    """Worst ratio found over a sample; ``<= 1`` certifies the bound on it."""

    worst_ratio: float
    n_samples: int
    worst_index: int

    def holds(self, tol: float = 0.0) -> bool:
        return self.worst_ratio <= 1.0 + tol


def _as_samples(sampler, n_samples: int, seed: int) -> Iterable:
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if callable(sampler):
        rng = np.random.default_rng(seed)
        return (sampler(rng) for _ in range(n_samples))
    samples = list(sampler)[:n_samples]
    if not samples:
        raise ValueError("empty sample set")
    return samples


def _safe_ratio(num: float, den: float) -> float:
    if den > 0.0:
        return num / den
    return 0.0 if num == 0.0 else np.inf


def check_lipschitz_model(triple: OperatorTriple, sampler, n_samples: int = 1000, seed: int = 0) -> SampleCheck:
    """Worst ratio ``||A z1 - A z2||^2 / bound(z1, ||z1 - z2||)`` over sampled pairs.

    ``sampler`` is either a callable ``rng -> (z1, z2)`` (called ``n_samples``
    times with a generator seeded by ``seed``) or an iterable of pairs. Both
    points must lie in ``dom C``.
    """
    worst, worst_i, count = 0.0, -1, 0
    for i, (z1, z2) in enumerate(_as_samples(sampler, n_samples, seed)):
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        num = float(np.sum((triple.eval_A(z1) - triple.eval_A(z2)) ** 2))
        den = triple.model.bound(z1, float(np.linalg.norm(z1 - z2)))
        r = _safe_ratio(num, den)
        if r > worst or worst_i < 0:
            worst, worst_i = r, i
        count += 1
    return SampleCheck(worst, count, worst_i)


def check_resolvent_bound(triple: OperatorTriple, sampler, n_samples: int = 1000, seed: int = 0) -> SampleCheck:
    """Worst ratio ``||q - J_{gamma C}(q - gamma u)|| / (gamma (zeta ||u|| + tau))``.

    ``sampler`` yields triples ``(u, w, gamma)`` with ``gamma > 0``;
    ``q = proj_dom(w)``. The bound is only certified on the sample.
    """
    worst, worst_i, count = 0.0, -1, 0
    for i, (u, w, gamma) in enumerate(_as_samples(sampler, n_samples, seed)):
        u = triple._check(u)
        w = triple._check(w)
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        q = triple.proj_dom(w)
        disp = float(np.linalg.norm(q - triple.resolvent(gamma, q - gamma * u)))
        r = _safe_ratio(disp, gamma * (triple.zeta * float(np.linalg.norm(u)) + triple.tau))
        if r > worst or worst_i < 0:
            worst, worst_i = r, i
        count += 1
    return SampleCheck(worst, count, worst_i)


# ---------------------------------------------------------------------------
# resolvents of normal cones


def nonneg_projector(mask: Vector) -> Callable[[Vector], Vector]:
    """Projection onto ``{x : x[mask] >= 0}``; unmasked coordinates are free."""
    mask = np.asarray(mask, dtype=bool).copy()
    mask.setflags(write=False)

    def proj(z: Vector) -> Vector:
        out = np.array(z, dtype=float, copy=True)
        out[mask] = np.maximum(out[mask], 0.0)
        return out

    return proj


def box_projector(lower: Vector, upper: Vector) -> Callable[[Vector], Vector]:
    """Projection onto the box ``[lower, upper]`` (infinite bounds allowed)."""
    lower = np.array(lower, dtype=float)
    upper = np.array(upper, dtype=float)
    if np.any(lower > upper):
        raise ValueError("empty box")

    def proj(z: Vector) -> Vector:
        return np.clip(np.asarray(z, dtype=float), lower, upper)

    return proj


def halfspace_projector(d: Vector, offset: float = 0.0) -> Callable[[Vector], Vector]:
    """Projection onto ``{x : d^T x >= offset}``."""
    d = np.array(d, dtype=float)
    dd = float(d @ d)
    if dd == 0.0:
        raise ValueError("halfspace normal must be nonzero")

    def proj(z: Vector) -> Vector:
        z = np.asarray(z, dtype=float)
        slack = float(d @ z) - offset
        if slack >= 0.0:
            return z.copy()
        return z - (slack / dd) * d

    return proj


def normal_cone_resolvent(proj: Callable[[Vector], Vector]) -> Callable[[float, Vector], Vector]:
    """Resolvent of ``gamma * N_D``, which is ``proj_D`` for every ``gamma``."""

    def resolvent(gamma: float, z: Vector) -> Vector:
        return proj(z)

    return resolvent
