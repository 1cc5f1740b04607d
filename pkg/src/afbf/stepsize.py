"""Adaptive stepsizes for the forward-backward-forward iteration.

Both strategies reduce to finding the positive root of a sum of positive
power terms ``sum_j K_j * gamma**e_j = rhs``, which is strictly increasing
in ``gamma``, negative at zero and hence has exactly one positive root.

* ``choice1`` (model exponent ``mu == 2``)::

      b d^(theta-2) g^theta + c d^(beta-2) g^beta + (L_B^2 + a) g^2 = alpha / 2

* ``choice2`` (``0 < mu < 2``, target accuracy ``epsilon``) takes the
  smaller root of::

      L_B^2 g^2 + b d^(theta-2) g^theta + c d^(beta-2) g^beta
          + 2^(2-mu) a eps^(mu-2) g^mu = alpha / 2
      L_B^2 d^(2-mu) g^2 + b d^(theta-mu) g^theta + c d^(beta-mu) g^beta
          + a g^mu = eps^(2-mu) alpha / 2^(3-mu)

where ``d = zeta * ||Ax + Bx|| + tau``. Coefficients are combined in log
space so large ``d`` or extreme exponents neither overflow nor underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .operators import OperatorTriple

CHOICE1 = "choice1"
CHOICE2 = "choice2"


class RootFindingError(RuntimeError):
    """The scalar root finder could not bracket or resolve the root."""


@dataclass(frozen=True)
class StepsizeParams:
    strategy: str = CHOICE1
    alpha_min: float = 0.99
    alpha_max: float = 0.99
    sigma: float = 0.0
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.strategy not in (CHOICE1, CHOICE2):
            raise ValueError(f"unknown stepsize strategy {self.strategy!r}")
        if not 0.0 < self.alpha_min <= self.alpha_max < 1.0:
            raise ValueError("need 0 < alpha_min <= alpha_max < 1")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.strategy == CHOICE2 and not (self.epsilon is not None and 0.0 < self.epsilon < 1.0):
            raise ValueError("choice2 needs epsilon in ]0, 1[")

    def alpha(self, k: int) -> float:
        """The ``alpha_k`` schedule: constant ``alpha_max``."""
        return self.alpha_max


@dataclass(frozen=True)
class StepsizeResult:
    gamma: float
    gamma_bar: float
    alpha: float
    d_x: float
    root_residual: float
    gamma_bar1: Optional[float] = None
    gamma_bar2: Optional[float] = None
    root_residual2: Optional[float] = None


# ---------------------------------------------------------------------------
# scalar root finding


def root_increasing(
    f: Callable[[float], float],
    hi: float,
    fprime: Optional[Callable[[float], float]] = None,
    *,
    lo: float = 0.0,
    ftol: Optional[float] = None,
    max_iter: int = 200,
) -> float:
    """Root of a continuous, strictly increasing ``f`` on ``[lo, hi]``.

    Bisection safeguarded with Newton steps when ``fprime`` is given. The
    returned point always satisfies ``f(gamma) <= 0``, so stepsizes built
    from it never overshoot the defining equation. Stops when
    ``|f(gamma)| <= ftol`` (default ``1e-12 * max(1, |f(hi)|)``) or the
    bracket has shrunk to ``1e-15`` relative width.
    """
    flo = f(lo)
    fhi = f(hi)
    if not flo < 0.0:
        raise RootFindingError(f"need f(lo) < 0, got f({lo}) = {flo}")
    if not fhi >= 0.0:
        raise RootFindingError(f"need f(hi) >= 0, got f({hi}) = {fhi}")
    if ftol is None:
        ftol = 1e-12 * max(1.0, abs(fhi))
    if fhi == 0.0:
        return hi

    width = hi - lo
    use_newton = fprime is not None
    for _ in range(max_iter):
        c = None
        if use_newton:
            # Newton from the endpoint with the smaller residual.
            x0, f0 = (hi, fhi) if fhi <= -flo else (lo, flo)
            slope = fprime(x0)
            if slope > 0.0 and np.isfinite(slope):
                step = x0 - f0 / slope
                if lo < step < hi:
                    c = step
        if c is None:
            c = 0.5 * (lo + hi)
        fc = f(c)
        if fc <= 0.0:
            lo, flo = c, fc
        else:
            hi, fhi = c, fc
        if -flo <= ftol:
            return lo
        if fhi <= ftol and fprime is not None:
            # Newton from the right converges from above; hop to the left side.
            slope = fprime(hi)
            if slope > 0.0:
                c2 = hi - 2.0 * fhi / slope
                if lo < c2 < hi:
                    f2 = f(c2)
                    if f2 <= 0.0:
                        lo, flo = c2, f2
                        if -flo <= ftol:
                            return lo
        if hi - lo <= 1e-15 * hi:
            return lo
        new_width = hi - lo
        # Fall back to a bisection step when Newton stalls.
        use_newton = fprime is not None and new_width <= 0.5 * width
        width = new_width
    raise RootFindingError(f"no convergence after {max_iter} iterations; bracket [{lo}, {hi}]")


class PowerSum:
    """``g -> sum_j K_j g**e_j - rhs`` with positive ``K_j`` kept as logs."""

    def __init__(self, terms: Sequence[tuple[float, float]], rhs: float):
        # terms: (coefficient, exponent); zero coefficients are dropped.
        if rhs <= 0.0:
            raise ValueError("right-hand side must be positive")
        self.log_k = []
        self.exps = []
        for coef, e in terms:
            if coef < 0.0 or not math.isfinite(coef):
                raise ValueError(f"coefficients must be finite and >= 0, got {coef}")
            if coef > 0.0:
                self.log_k.append(math.log(coef))
                self.exps.append(float(e))
        if not self.log_k:
            raise ValueError("at least one positive coefficient is required")
        self.rhs = float(rhs)

    @classmethod
    def from_logs(cls, log_terms: Sequence[tuple[Optional[float], float]], rhs: float) -> "PowerSum":
        obj = cls.__new__(cls)
        obj.log_k = [lk for lk, _ in log_terms if lk is not None]
        obj.exps = [float(e) for lk, e in log_terms if lk is not None]
        if not obj.log_k:
            raise ValueError("at least one positive coefficient is required")
        obj.rhs = float(rhs)
        return obj

    def __call__(self, g: float) -> float:
        if g <= 0.0:
            return -self.rhs
        lg = math.log(g)
        return math.fsum(math.exp(lk + e * lg) for lk, e in zip(self.log_k, self.exps)) - self.rhs

    def derivative(self, g: float) -> float:
        if g <= 0.0:
            return 0.0
        lg = math.log(g)
        return math.fsum(e * math.exp(lk + (e - 1.0) * lg) for lk, e in zip(self.log_k, self.exps))

    def upper_bracket(self) -> float:
        """Smallest ``g`` at which a single term alone reaches ``rhs``."""
        lr = math.log(self.rhs)
        # min in log space: a single negligible term must not overflow exp
        return math.exp(min(min((lr - lk) / e for lk, e in zip(self.log_k, self.exps)), 709.0))

    def root(self) -> float:
        hi = self.upper_bracket() * (1.0 + 1e-12)
        while self(hi) < 0.0:
            hi *= 2.0
        return root_increasing(self, hi, self.derivative, ftol=1e-13 * self.rhs)


def _log_coef(k: float, log_d: float, d_exp: float) -> Optional[float]:
    """log of ``k * d**d_exp``, or None when ``k == 0``."""
    if k < 0.0 or not math.isfinite(k):
        raise ValueError(f"coefficient must be finite and >= 0, got {k}")
    if k == 0.0:
        return None
    return math.log(k) + d_exp * log_d


# ---------------------------------------------------------------------------
# scalar stepsize equations


def choice1_equation(L_B: float, a: float, b: float, c: float, d: float, theta: float, beta: float, alpha: float) -> PowerSum:
    if L_B <= 0.0 or d <= 0.0:
        raise ValueError("L_B and d must be positive")
    log_d = math.log(d)
    return PowerSum.from_logs(
        [
            (_log_coef(L_B * L_B + a, log_d, 0.0), 2.0),
            (_log_coef(b, log_d, theta - 2.0), theta),
            (_log_coef(c, log_d, beta - 2.0), beta),
        ],
        alpha / 2.0,
    )


def quartic_closed_form(P: float, b: float, d: float, alpha: float) -> float:
    """Positive root of ``b d^2 g^4 + P g^2 = alpha/2`` (``P = L_B^2 + a``).

    Written as ``g^2 = alpha / (P + sqrt(P^2 + 2 alpha b d^2))``, the
    cancellation-free form of the quadratic formula in ``g^2``.
    """
    return math.sqrt(alpha / (P + math.sqrt(P * P + 2.0 * alpha * b * d * d)))


def _pull_below(eq: PowerSum, g: float) -> float:
    # Rounding can leave a closed-form root a few ulps above the true one.
    for _ in range(8):
        if eq(g) <= 0.0:
            return g
        g = math.nextafter(g, 0.0) * (1.0 - 2.0**-52)
    return g


def choice1_gamma_bar(L_B, a, b, c, d, theta, beta, alpha, method: str = "auto") -> tuple[float, float]:
    """``(gamma_bar, residual)`` for the first strategy from scalar inputs."""
    eq = choice1_equation(L_B, a, b, c, d, theta, beta, alpha)
    closed = (c == 0.0 or beta == 2.0) and theta in (2.0, 4.0)
    if method == "closed" or (method == "auto" and closed):
        if not closed:
            raise ValueError("closed form needs theta in {2, 4} and a vanishing beta term")
        P = L_B * L_B + a + (b if theta == 2.0 else 0.0) + (c if beta == 2.0 else 0.0)
        bq = b if theta == 4.0 else 0.0
        g = _pull_below(eq, quartic_closed_form(P, bq, d, alpha))
    elif method in ("auto", "root"):
        g = eq.root()
    else:
        raise ValueError(f"unknown method {method!r}")
    return g, eq(g)


def choice2_equations(L_B, a, b, c, d, mu, theta, beta, alpha, epsilon) -> tuple[PowerSum, PowerSum]:
    if not 0.0 < mu < 2.0:
        raise ValueError("choice2 needs 0 < mu < 2")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in ]0, 1[")
    log_d = math.log(d)
    log_eps = math.log(epsilon)
    la = _log_coef(a, log_d, 0.0)
    eq1 = PowerSum.from_logs(
        [
            (_log_coef(L_B * L_B, log_d, 0.0), 2.0),
            (_log_coef(b, log_d, theta - 2.0), theta),
            (_log_coef(c, log_d, beta - 2.0), beta),
            (None if la is None else la + (2.0 - mu) * math.log(2.0) + (mu - 2.0) * log_eps, mu),
        ],
        alpha / 2.0,
    )
    eq2 = PowerSum.from_logs(
        [
            (_log_coef(L_B * L_B, log_d, 2.0 - mu), 2.0),
            (_log_coef(b, log_d, theta - mu), theta),
            (_log_coef(c, log_d, beta - mu), beta),
            (la, mu),
        ],
        epsilon ** (2.0 - mu) * alpha / 2.0 ** (3.0 - mu),
    )
    return eq1, eq2


def choice2_gamma_bars(L_B, a, b, c, d, mu, theta, beta, alpha, epsilon):
    """``(gamma_bar1, residual1, gamma_bar2, residual2)`` for the second strategy."""
    eq1, eq2 = choice2_equations(L_B, a, b, c, d, mu, theta, beta, alpha, epsilon)
    g1 = eq1.root()
    g2 = eq2.root()
    return g1, eq1(g1), g2, eq2(g2)


def select_gamma(gamma_bar: float, sigma: float) -> float:
    """Pick ``gamma`` from ``[sigma, gamma_bar]`` (or ``gamma_bar`` when ``sigma > gamma_bar``).

    The right endpoint is always admissible and is the largest choice.
    """
    return gamma_bar


# ---------------------------------------------------------------------------
# triple-level API


def d_of_x(triple: OperatorTriple, x, ABx=None) -> float:
    """``zeta * ||Ax + Bx|| + tau``."""
    if ABx is None:
        ABx = triple.eval_A(x) + triple.eval_B(x)
    nrm = float(np.linalg.norm(ABx))
    if not math.isfinite(nrm):
        raise ValueError("non-finite operator value")
    return triple.zeta * nrm + triple.tau


def solve_choice1(triple: OperatorTriple, x, alpha: float, sigma: float = 0.0, *, ABx=None, coefficients=None,
                  method: str = "auto") -> StepsizeResult:
    model = triple.model
    if model.mu != 2.0:
        raise ValueError("choice1 requires a model with mu == 2")
    if coefficients is None:
        coefficients = model.coefficients(x)
    a, b, c = coefficients
    d = d_of_x(triple, x, ABx)
    g_bar, res = choice1_gamma_bar(triple.L_B, a, b, c, d, model.theta, model.beta, alpha, method=method)
    return StepsizeResult(select_gamma(g_bar, sigma), g_bar, alpha, d, res)


def solve_choice2(triple: OperatorTriple, x, alpha: float, sigma: float, epsilon: float, *, ABx=None,
                  coefficients=None) -> StepsizeResult:
    model = triple.model
    if not 0.0 < model.mu < 2.0:
        raise ValueError("choice2 requires a model with 0 < mu < 2")
    if coefficients is None:
        coefficients = model.coefficients(x)
    a, b, c = coefficients
    d = d_of_x(triple, x, ABx)
    g1, r1, g2, r2 = choice2_gamma_bars(triple.L_B, a, b, c, d, model.mu, model.theta, model.beta, alpha, epsilon)
    if g1 <= g2:
        g_bar, res = g1, r1
    else:
        g_bar, res = g2, r2
    return StepsizeResult(select_gamma(g_bar, sigma), g_bar, alpha, d, res, g1, g2, r2)


def compute_stepsize(triple: OperatorTriple, x, params: StepsizeParams, k: int = 0, *, ABx=None,
                     coefficients=None) -> StepsizeResult:
    alpha = params.alpha(k)
    if params.strategy == CHOICE1:
        return solve_choice1(triple, x, alpha, params.sigma, ABx=ABx, coefficients=coefficients)
    return solve_choice2(triple, x, alpha, params.sigma, params.epsilon, ABx=ABx, coefficients=coefficients)


def eta_bound(alpha_max: float, L_B: float) -> float:
    """Upper bound ``sqrt(alpha_max / (2 L_B^2))`` on every first-strategy stepsize."""
    return math.sqrt(alpha_max / (2.0 * L_B * L_B))


def eta_bar_bound(alpha_max: float, L_B: float, tau: float, mu: float, epsilon: float) -> float:
    """Upper bound on ``gamma_bar2`` of the second strategy (uses ``d >= tau``)."""
    return math.sqrt(epsilon ** (2.0 - mu) * alpha_max / (2.0 ** (3.0 - mu) * L_B**2 * tau ** (2.0 - mu)))
