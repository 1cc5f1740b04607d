"""Rate envelopes and diagnostics evaluated on recorded AFBF histories.

All functions take a run's history (a list of ``IterateRecord``) plus the
reference zero ``z_ref``. When histories are down-sampled the minima and
suprema below are taken over the recorded iterates only.
"""

from __future__ import annotations

import math

import numpy as np


def min_residual_envelope(history, k0: int, alpha_max: float, reference):
    """Sublinear min-residual bound on the window starting at ``k0``.

    Returns ``(bound, observed)`` indexed by window length ``k = 1, 2, ...``::

        observed[k-1] = (1 + sqrt(alpha_max)) * min_{k0 <= j < k0+k} ||x_j - p_j||
        bound[k-1]    = ||x_{k0} - z_ref|| / (sqrt(1 - alpha_max) * sqrt(k))
    """
    if not history:
        raise ValueError("history is empty; run with record_history=True")
    recs = [r for r in history if r.k >= k0]
    if not recs:
        raise ValueError(f"no recorded iterate at or after k0={k0}")
    ref = np.asarray(reference, dtype=float)
    eps = float(np.linalg.norm(recs[0].x - ref)) / math.sqrt(1.0 - alpha_max)
    ks = np.array([r.k - k0 + 1 for r in recs], dtype=float)
    observed = (1.0 + math.sqrt(alpha_max)) * np.minimum.accumulate([r.xp_norm for r in recs])
    bound = eps / np.sqrt(ks)
    return bound, observed


def xhat_envelope(history, alpha_max: float, reference):
    """``(bound, observed)`` with ``observed[k] = min_{j <= k} ||x_j - x_hat_j|| * sqrt(k)``.

    ``bound`` is the constant ``||x_0 - z_ref|| / sqrt(1 - alpha_max)``.
    """
    ref = np.asarray(reference, dtype=float)
    eps0 = float(np.linalg.norm(history[0].x - ref)) / math.sqrt(1.0 - alpha_max)
    ks = np.array([max(r.k, 1) for r in history], dtype=float)
    observed = np.minimum.accumulate([r.xhat_gap for r in history]) * np.sqrt(ks)
    return eps0, observed


def uniform_rate_constant(alpha_max: float, gamma_min: float, nu: float, R: float, q: float) -> float:
    """``r = min(1 - alpha_max, gamma_min * nu * R^(q-2))``."""
    if R == 0.0:
        return 1.0 - alpha_max
    return min(1.0 - alpha_max, gamma_min * nu * R ** (q - 2.0))


def rate_envelopes_uniform(history, q: float, nu: float, gamma_min: float, alpha_max: float, reference):
    """Envelope for ``||x_k - z_ref||`` under uniform pseudo-monotonicity.

    Returns a dict with ``k``, ``observed``, ``envelope``, ``r`` and ``R``
    where ``R = max_k ||p_k - z_ref||`` over the history. For ``q <= 2``
    the envelope is ``(1 - r/2)^(k/2) ||x_0 - z_ref||``; for ``q > 2`` it is
    the sublinear bound with ``r_bar = r / (2^(q-1) R^(q-2))``.
    """
    if q < 1:
        raise ValueError("modulus q must be >= 1")
    ref = np.asarray(reference, dtype=float)
    ks = np.array([r.k for r in history], dtype=float)
    observed = np.array([np.linalg.norm(r.x - ref) for r in history])
    R = max(float(np.linalg.norm(r.p - ref)) for r in history)
    dist0 = float(np.linalg.norm(history[0].x - ref))
    if dist0 == 0.0:
        return {"k": ks, "observed": observed, "envelope": np.zeros_like(ks), "r": float("nan"), "R": R}
    r = uniform_rate_constant(alpha_max, gamma_min, nu, R, q)
    if q <= 2.0:
        env = (1.0 - r / 2.0) ** (ks / 2.0) * dist0
    else:
        rbar = r / (2.0 ** (q - 1.0) * R ** (q - 2.0))
        env = np.array([sublinear_envelope(dist0, rbar, q, k) for k in ks])
    return {"k": ks, "observed": observed, "envelope": env, "r": r, "R": R}


def sublinear_envelope(delta0: float, rbar: float, q: float, k) -> float:
    """Distance bound ``delta0 / (((q-2)/2) rbar delta0^(q-2) k + 1)^(1/(q-2))``."""
    if q <= 2.0:
        raise ValueError("the sublinear envelope needs q > 2")
    if rbar <= 0:
        raise ValueError("rbar must be positive")
    zeta = (q - 2.0) / 2.0
    return delta0 / (zeta * rbar * delta0 ** (q - 2.0) * k + 1.0) ** (1.0 / (q - 2.0))


def recurrence_envelope(delta0: float, zeta: float, k) -> float:
    """Bound ``delta0 / (zeta delta0^zeta k + 1)^(1/zeta)`` for ``D_k - D_{k+1} >= D_k^(1+zeta)``."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    return delta0 / (zeta * delta0**zeta * k + 1.0) ** (1.0 / zeta)


def weak_minty_rho_max(L_B, R_a, R_b, R_c, theta, beta, alpha_min, alpha_max) -> float:
    """Largest weak-Minty constant for which the convergence argument still goes through."""
    eta = math.sqrt(alpha_max / (2.0 * L_B * L_B))
    num = 2.0**-1.5 * math.sqrt(alpha_min) * (1.0 - math.sqrt(alpha_max))
    den = (1.0 + math.sqrt(alpha_max)) * math.sqrt(
        L_B * L_B + R_a + R_b * eta ** (theta - 2.0) + R_c * eta ** (beta - 2.0))
    return num / den


def holder_iteration_budget(epsilon: float, alpha_max: float, gamma_min: float, dist0: float) -> float:
    """Iterations after which some ``||u_k|| <= epsilon`` is guaranteed (second strategy)."""
    return (1.0 / epsilon**2) * (1.0 + math.sqrt(alpha_max)) ** 2 / (gamma_min**2 * (1.0 - alpha_max)) * dist0**2


def fejer_violations(history, reference, slack: float = 1e-12) -> list:
    """Indices ``k`` where ``||x_{k+1} - z_ref|| > ||x_k - z_ref|| + slack`` (consecutive records only)."""
    ref = np.asarray(reference, dtype=float)
    dists = [(r.k, float(np.linalg.norm(r.x - ref))) for r in history]
    bad = []
    for (k1, d1), (k2, d2) in zip(dists, dists[1:]):
        if d2 > d1 + slack:
            bad.append(k1)
    return bad
