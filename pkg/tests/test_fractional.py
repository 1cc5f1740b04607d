import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afbf.baselines import fbf_thovuo_solve
from afbf.operators import OperatorError, check_lipschitz_model, halfspace_projector
from afbf.problems.fractional import (
    LINEAR,
    QUADRATIC,
    FractionalInstance,
    encode_fractional,
    fractional_from_dict,
    fractional_to_dict,
    gen_fractional,
    load_fractional,
    save_fractional,
)
from afbf.solver import SolverConfig, solve


def test_gradient_hand_value():
    # f(x) = x + x/(x+1): f'(1) = 1 + 1/4
    inst = FractionalInstance(LINEAR, h=[1.0], h0=0.0, d=[1.0], d0=1.0, r=[1.0])
    assert encode_fractional(inst).eval_A(np.array([1.0]))[0] == pytest.approx(1.25)


def test_constant_gradient_case():
    inst = FractionalInstance(LINEAR, h=[0.0, 0.0], h0=0.0, d=[1.0, 2.0], d0=1.0, r=[3.0, -1.0])
    t = encode_fractional(inst)
    x = np.array([0.5, 0.5])
    assert np.array_equal(t.eval_A(x), [3.0, -1.0])
    assert t.model.coefficients(x) == (0.0, 0.0, 0.0)


def test_domain_projection_example():
    inst = FractionalInstance(LINEAR, h=[0.0, 0.0], h0=0.0, d=[1.0, 0.0], d0=1.0)
    assert np.array_equal(encode_fractional(inst).proj_dom(np.array([-2.0, 5.0])), [0.0, 5.0])


def test_outside_domain_rejected():
    inst = FractionalInstance(LINEAR, h=[1.0], h0=0.0, d=[1.0], d0=1.0)
    with pytest.raises(OperatorError):
        encode_fractional(inst).eval_A(np.array([-2.0]))
    with pytest.raises(ValueError):
        FractionalInstance(LINEAR, h=[1.0], h0=0.0, d=[1.0], d0=0.0)


def _finite_difference(f, x, h=1e-6):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = 4
    d = rng.standard_normal(n)
    x = halfspace_projector(d)(rng.standard_normal(n))
    lin = FractionalInstance(LINEAR, h=rng.standard_normal(n), h0=rng.standard_normal(), d=d, d0=1.0 + rng.random(),
                             r=rng.standard_normal(n))
    S = rng.standard_normal((n, n))
    quad = FractionalInstance(QUADRATIC, h=rng.standard_normal(n), h0=rng.standard_normal(), d=d,
                              d0=1.0 + rng.random(), Q=S + S.T)
    for inst in (lin, quad):
        assert np.allclose(inst.gradient(x), _finite_difference(inst.objective, x), atol=1e-5)


def test_literal_linear_constants_fail_for_orthogonal_h():
    # d = e1, h = e2: Hessian norm at x = 0 is 1 although |d^T h| = 0
    inst = FractionalInstance(LINEAR, h=[0.0, 1.0], h0=0.0, d=[1.0, 0.0], d0=1.0)
    pair = [(np.zeros(2), np.array([1e-2, 0.0]))]
    assert not check_lipschitz_model(encode_fractional(inst, literal_constants=True), pair).holds()
    assert check_lipschitz_model(encode_fractional(inst), pair).holds()


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), parallel=st.booleans())
def test_linear_model_holds(seed, parallel):
    rng = np.random.default_rng(seed)
    n = 5
    d = rng.standard_normal(n)
    h = 0.7 * d if parallel else rng.standard_normal(n)
    inst = FractionalInstance(LINEAR, h=h, h0=rng.standard_normal(), d=d, d0=0.1 + rng.random(), r=2.0 * d)
    P = halfspace_projector(d)

    def sampler(r):
        z1 = P(r.standard_normal(n) * r.uniform(0.1, 3))
        return z1, P(z1 + r.standard_normal(n) * 10 ** r.uniform(-5, 1))

    assert check_lipschitz_model(encode_fractional(inst), sampler, 300, seed).holds()
    if parallel:
        assert check_lipschitz_model(encode_fractional(inst, literal_constants=True), sampler, 300, seed).holds()


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_quadratic_model_holds(seed):
    rng = np.random.default_rng(seed)
    n = 4
    d = rng.standard_normal(n)
    S = rng.standard_normal((n, n))
    inst = FractionalInstance(QUADRATIC, h=rng.standard_normal(n), h0=rng.standard_normal(), d=d,
                              d0=0.2 + rng.random(), Q=S + S.T)
    t = encode_fractional(inst)
    assert t.model.beta == 6.0
    P = halfspace_projector(d)

    def sampler(r):
        z1 = P(r.standard_normal(n) * r.uniform(0.1, 3))
        return z1, P(z1 + r.standard_normal(n) * 10 ** r.uniform(-5, 1))

    assert check_lipschitz_model(t, sampler, 300, seed).holds()


def test_generator_recipe():
    inst = gen_fractional(50, 10.0, seed=1)
    assert np.allclose(inst.r, 10.0 * inst.d)
    assert np.all(np.abs(inst.h - inst.d) <= 0.01)
    assert inst.d @ inst.x0 >= -1e-12
    assert gen_fractional(50, 10.0, seed=1).h0 == inst.h0


def test_solvable_variant_has_known_minimizers():
    inst = gen_fractional(20, 1.0, seed=4, solvable=True)
    t_star = inst.meta["t_star"]
    x = inst.d * t_star / (inst.d @ inst.d)
    assert np.linalg.norm(inst.gradient(x)) <= 1e-12 * (1 + np.linalg.norm(inst.r))


@pytest.mark.parametrize("eta", [1.0, 10.0])
def test_objective_nonincreasing_along_afbf(eta):
    inst = gen_fractional(100, eta, seed=0, solvable=True)
    t = encode_fractional(inst)
    rep = solve(t, inst.start_point(), SolverConfig(tol_residual=1e-6, max_iters=50_000, record_history=True))
    assert rep.converged
    f = np.array([r.objective for r in rep.history])
    assert np.all(np.diff(f[1:]) <= 1e-12 * (1 + np.abs(f[1:-1])))
    assert abs(inst.d @ rep.final_x - inst.meta["t_star"]) <= 1e-4


def test_thovuo_objective_decreases():
    inst = gen_fractional(100, 1.0, seed=0, solvable=True)
    rep = fbf_thovuo_solve(encode_fractional(inst), inst.start_point(),
                           SolverConfig(tol_residual=1e-6, record_history=True))
    assert rep.converged
    f = np.array([r.objective for r in rep.history])
    assert np.all(np.diff(f[1:]) <= 1e-12 * (1 + np.abs(f[1:-1])))


def test_json_roundtrip(tmp_path):
    inst = gen_fractional(30, 10.0, seed=2)
    save_fractional(inst, tmp_path / "f.json")
    back = load_fractional(tmp_path / "f.json")
    assert np.array_equal(back.h, inst.h) and back.h0 == inst.h0 and np.array_equal(back.x0, inst.x0)
    S = np.eye(2)
    q = FractionalInstance(QUADRATIC, h=[1.0, 2.0], h0=0.5, d=[1.0, 1.0], d0=2.0, Q=S)
    assert np.array_equal(fractional_from_dict(fractional_to_dict(q)).Q, S)
