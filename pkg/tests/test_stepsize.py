import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from afbf.operators import GeneralizedLipschitzModel, OperatorTriple, constant
from afbf.stepsize import (
    CHOICE1,
    CHOICE2,
    PowerSum,
    RootFindingError,
    StepsizeParams,
    choice1_gamma_bar,
    choice2_gamma_bars,
    compute_stepsize,
    eta_bar_bound,
    eta_bound,
    quartic_closed_form,
    root_increasing,
    solve_choice1,
    solve_choice2,
)


def choice1_lhs(g, L_B, a, b, c, d, theta, beta):
    return b * d ** (theta - 2) * g**theta + c * d ** (beta - 2) * g**beta + (L_B**2 + a) * g**2


def brentq_choice1(L_B, a, b, c, d, theta, beta, alpha):
    f = lambda g: choice1_lhs(g, L_B, a, b, c, d, theta, beta) - alpha / 2
    return brentq(f, 0.0, math.sqrt(alpha / (2 * L_B**2)) + 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps)


# --- scalar root finding -------------------------------------------------


def test_root_increasing_linear():
    assert root_increasing(lambda g: g - 1.0, 3.0) == pytest.approx(1.0, rel=1e-12)


def test_root_increasing_returns_left_side():
    f = lambda g: g**3 - 0.125
    g = root_increasing(f, 2.0, lambda g: 3 * g * g)
    assert f(g) <= 0.0
    assert g == pytest.approx(0.5, rel=1e-12)


def test_root_increasing_needs_bracket():
    with pytest.raises(RootFindingError):
        root_increasing(lambda g: g + 1.0, 1.0)
    with pytest.raises(RootFindingError):
        root_increasing(lambda g: g - 5.0, 1.0)


def test_powersum_rejects_empty_and_negative():
    with pytest.raises(ValueError):
        PowerSum([(0.0, 2.0)], 1.0)
    with pytest.raises(ValueError):
        PowerSum([(-1.0, 2.0)], 1.0)


# --- first strategy ---------------------------------------------------------


def test_choice1_pure_lipschitz():
    # (L_B^2) g^2 = alpha/2 with L_B = 1, alpha = 0.5 -> g = 0.5
    g, res = choice1_gamma_bar(1.0, 0.0, 0.0, 0.0, 1.0, 4.0, 4.0, 0.5)
    assert g == pytest.approx(0.5, rel=1e-15)
    assert res <= 0.0


def test_choice1_quartic_matches_hand_value():
    # 2 g^4 + 2 g^2 = 0.5 (L_B=1, a=1, b=2, d=1, alpha=1): g^2 = (-2 + sqrt(8)) / 4
    expect = math.sqrt((-2 + math.sqrt(8)) / 4)
    g_closed, _ = choice1_gamma_bar(1.0, 1.0, 2.0, 0.0, 1.0, 4.0, 4.0, 1.0, method="closed")
    g_root, _ = choice1_gamma_bar(1.0, 1.0, 2.0, 0.0, 1.0, 4.0, 4.0, 1.0, method="root")
    assert g_closed == pytest.approx(expect, rel=1e-14)
    assert g_root == pytest.approx(expect, rel=1e-12)


def test_quartic_closed_form_no_cancellation():
    # tiny b d^2 relative to P: the naive formula would lose all digits
    g = quartic_closed_form(1.0, 1e-30, 1.0, 0.5)
    assert g == pytest.approx(0.5, rel=1e-15)


def test_closed_form_refuses_sextic():
    with pytest.raises(ValueError):
        choice1_gamma_bar(1.0, 0.0, 1.0, 1.0, 1.0, 4.0, 6.0, 0.5, method="closed")


@settings(max_examples=300, deadline=None)
@given(
    L_B=st.floats(1e-3, 1e3),
    a=st.floats(0.0, 1e4),
    b=st.floats(0.0, 1e4),
    c=st.floats(0.0, 1e4),
    d=st.floats(1e-6, 1e4),
    alpha=st.floats(0.01, 0.999),
    theta=st.sampled_from([2.0, 3.0, 4.0]),
    beta=st.sampled_from([4.0, 5.0, 6.0]),
)
def test_choice1_against_brentq(L_B, a, b, c, d, alpha, theta, beta):
    g, res = choice1_gamma_bar(L_B, a, b, c, d, theta, beta, alpha)
    ref = brentq_choice1(L_B, a, b, c, d, theta, beta, alpha)
    assert g == pytest.approx(ref, rel=1e-9)
    assert abs(res) <= 1e-10 * alpha
    assert res <= 0.0
    cap = math.sqrt(alpha / (2 * L_B**2))
    assert g <= cap * (1 + 4 * np.finfo(float).eps)
    # strict whenever the extra terms at the cap exceed rounding noise
    assert g < cap or choice1_lhs(cap, L_B, a, b, c, d, theta, beta) - alpha / 2 <= 1e-14 * alpha


@settings(max_examples=200, deadline=None)
@given(
    L_B=st.floats(1e-3, 1e3),
    a=st.floats(0.0, 1e4),
    d=st.floats(1e-6, 1e4),
    alpha=st.floats(0.01, 0.999),
    s1=st.floats(1.0, 10.0),
)
def test_choice1_decreasing_in_coefficients(L_B, a, d, alpha, s1):
    g1, _ = choice1_gamma_bar(L_B, a, 1.0, 0.0, d, 4.0, 4.0, alpha)
    g2, _ = choice1_gamma_bar(L_B, a * s1, 1.0 * s1, 0.0, d, 4.0, 4.0, alpha)
    assert g2 <= g1 * (1 + 1e-12)


def test_choice1_extreme_d_no_overflow():
    g, res = choice1_gamma_bar(1.0, 1.0, 1.0, 1.0, 1e150, 4.0, 6.0, 0.99)
    assert 0.0 < g < 1e-100
    assert math.isfinite(res)


# --- second strategy --------------------------------------------------------


def test_choice2_holder_hand_value():
    # mu=1, only a=1: eq1 2 eps^-1 g = alpha/2 -> g = alpha eps/4; eq2 g = eps alpha / 4 as well
    g1, _, g2, _ = choice2_gamma_bars(1e-300 ** 0.5, 1.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 0.99, 0.1)
    assert g1 == pytest.approx(0.99 * 0.1 / 4, rel=1e-12)
    assert g2 == pytest.approx(0.99 * 0.1 / 4, rel=1e-12)


def test_choice2_lipschitz_only():
    # a=b=c=0, L_B=1, d=2, eps=0.1, alpha=0.5, mu=1:
    # eq1 g^2 = 0.25 -> 0.5; eq2 2 g^2 = 0.1 * 0.5 / 4 -> g = sqrt(1/160)
    g1, _, g2, _ = choice2_gamma_bars(1.0, 0.0, 0.0, 0.0, 2.0, 1.0, 2.0, 2.0, 0.5, 0.1)
    assert g1 == pytest.approx(0.5, rel=1e-14)
    assert g2 == pytest.approx(math.sqrt(1 / 160), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    L_B=st.floats(1e-3, 1e2),
    a=st.floats(0.0, 1e3),
    b=st.floats(0.0, 1e3),
    c=st.floats(0.0, 1e3),
    d=st.floats(1e-8, 1e3),
    mu=st.floats(0.1, 1.9),
    alpha=st.floats(0.01, 0.999),
    eps=st.floats(1e-4, 0.5),
)
def test_choice2_roots_and_bounds(L_B, a, b, c, d, mu, alpha, eps):
    g1, r1, g2, r2 = choice2_gamma_bars(L_B, a, b, c, d, mu, 4.0, 6.0, alpha, eps)
    assert r1 <= 0.0 and r2 <= 0.0
    assert abs(r1) <= 1e-10 * alpha
    assert abs(r2) <= 1e-10 * alpha
    assert g1 <= math.sqrt(alpha / (2 * L_B**2)) * (1 + 1e-12)
    # the bound on the second root uses d >= tau; here d plays tau's role
    assert g2 <= eta_bar_bound(alpha, L_B, d, mu, eps) * (1 + 1e-12)


def test_choice2_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        StepsizeParams(CHOICE2, epsilon=None)
    with pytest.raises(ValueError):
        StepsizeParams(CHOICE2, epsilon=1.5)


# --- triple-level API ---------------------------------------------------------


def quartic_triple(a=1.0, b=2.0, L_B=1.0):
    model = GeneralizedLipschitzModel(mu=2.0, theta=4.0, beta=4.0, a=constant(a), b=constant(b))
    return OperatorTriple(dim=2, B=lambda x: L_B * x, L_B=L_B, model=model)


def test_solve_choice1_uses_d_of_x():
    t = quartic_triple()
    x = np.array([3.0, 4.0])
    res = solve_choice1(t, x, 0.9)
    d = 5.0 + t.tau
    assert res.d_x == pytest.approx(d)
    assert res.gamma == pytest.approx(quartic_closed_form(1.0 + 1.0, 2.0, d, 0.9), rel=1e-14)
    assert res.gamma == res.gamma_bar


def test_compute_stepsize_dispatch():
    t = quartic_triple()
    x = np.ones(2)
    r1 = compute_stepsize(t, x, StepsizeParams(CHOICE1, alpha_min=0.9, alpha_max=0.9))
    assert r1.alpha == 0.9
    with pytest.raises(ValueError):
        compute_stepsize(t, x, StepsizeParams(CHOICE2, epsilon=0.1))
    holder = OperatorTriple(dim=1, model=GeneralizedLipschitzModel(mu=1.0, theta=2.0, beta=2.0, a=constant(4.0)))
    r2 = solve_choice2(holder, np.array([0.5]), 0.99, 0.0, 0.01)
    assert r2.gamma == min(r2.gamma_bar1, r2.gamma_bar2)
    with pytest.raises(ValueError):
        solve_choice1(holder, np.array([0.5]), 0.99)


def test_eta_bound_value():
    assert eta_bound(0.5, 1.0) == pytest.approx(0.5)


def test_stepsize_params_validation():
    with pytest.raises(ValueError):
        StepsizeParams("choice3")
    with pytest.raises(ValueError):
        StepsizeParams(alpha_min=0.5, alpha_max=1.0)
    with pytest.raises(ValueError):
        StepsizeParams(alpha_min=0.9, alpha_max=0.5)


def test_upper_bracket_ignores_negligible_terms():
    # a tiny coefficient on a low power would overflow exp if bracketed term by term
    g1, r1, g2, r2 = choice2_gamma_bars(1.0, 5.5e-181, 0.0, 0.0, 1.0, 0.5, 4.0, 6.0, 0.5, 0.5)
    assert g1 == pytest.approx(0.5, rel=1e-12)
    assert math.isfinite(g2) and r2 <= 0.0
