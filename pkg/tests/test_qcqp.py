import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from afbf.linalg import min_rayleigh, spectral_norm
from afbf.operators import check_lipschitz_model
from afbf.problems.qcqp import (
    QcqpInstance,
    digest,
    encode_qcqp,
    gen_synthetic_qcqp,
    load_qcqp,
    qcqp_from_dict,
    qcqp_to_dict,
    save_qcqp,
)


def tiny(m=1, m_bar=1):
    n = 1
    Q = [np.zeros((1, 1))] + [np.eye(1) if i < m_bar else np.zeros((1, 1)) for i in range(m)]
    return QcqpInstance(n=n, m=m, m_bar=m_bar, Q=Q, b=np.zeros(1), l=np.zeros((m, 1)), r=np.ones(m))


def test_model_constants_at_origin():
    t = encode_qcqp(tiny())
    _, (a, b, c) = t.eval_A_and_coefficients(np.zeros(2))
    assert a == 0.0
    assert b == pytest.approx(2.5)
    assert c == 0.0
    assert t.model.mu == 2.0 and t.model.theta == 4.0


def test_zero_instance_operator():
    m, n = 3, 2
    inst = QcqpInstance(n=n, m=m, m_bar=m, Q=[np.zeros((n, n))] * (m + 1), b=np.zeros(n), l=np.zeros((m, n)),
                        r=np.ones(m))
    t = encode_qcqp(inst)
    z = np.array([0.3, -2.0, 1.0, 5.0, -1.0])
    assert np.array_equal(t.eval_A(z), [0.0, 0.0, 1.0, 1.0, 1.0])


def test_projection_blocks():
    n, m = 2, 2
    inst = QcqpInstance(n=n, m=m, m_bar=1, Q=[np.zeros((n, n)), np.eye(n), np.zeros((n, n))], b=np.zeros(n),
                        l=np.zeros((m, n)), r=np.ones(m))
    t = encode_qcqp(inst)
    assert np.array_equal(t.proj_dom(np.array([-1.0, 2.0, -3.0, 4.0])), [0.0, 2.0, 0.0, 4.0])
    # equality duals are free
    assert t.proj_dom(np.array([1.0, 1.0, 1.0, -4.0]))[3] == -4.0


def test_operator_matches_lagrangian_gradient(rng):
    inst = gen_synthetic_qcqp(6, 6, 3, seed=2, density=0.5)
    t = encode_qcqp(inst)
    z = rng.standard_normal(9)
    x, y = z[:6], z[6:]

    def lagr(x, y):
        return inst.objective(x) + y @ inst.constraints(x)

    h = 1e-6
    gx = np.array([(lagr(x + h * e, y) - lagr(x - h * e, y)) / (2 * h) for e in np.eye(6)])
    F = t.eval_A(z) + t.eval_B(z)
    assert np.allclose(F[:6], gx, atol=1e-6)
    assert np.allclose(F[6:], -inst.constraints(x))


def test_equality_with_nonzero_Q_rejected():
    with pytest.raises(ValueError):
        QcqpInstance(n=1, m=1, m_bar=0, Q=[np.zeros((1, 1)), np.eye(1)], b=np.zeros(1), l=np.zeros((1, 1)),
                     r=np.zeros(1))


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        QcqpInstance(n=2, m=1, m_bar=1, Q=[np.zeros((2, 2))], b=np.zeros(2), l=np.zeros((1, 2)), r=np.zeros(1))
    with pytest.raises(ValueError):
        QcqpInstance(n=2, m=1, m_bar=1, Q=[np.zeros((2, 2)), np.eye(3)], b=np.zeros(2), l=np.zeros((1, 2)),
                     r=np.zeros(1))


def test_non_psd_rejected():
    inst = QcqpInstance(n=2, m=1, m_bar=1, Q=[np.zeros((2, 2)), np.diag([1.0, -1.0])], b=np.zeros(2),
                        l=np.zeros((1, 2)), r=np.zeros(1))
    with pytest.raises(ValueError):
        inst.validate()


def test_generator_deterministic():
    a = gen_synthetic_qcqp(30, 20, 4, seed=7)
    b = gen_synthetic_qcqp(30, 20, 4, seed=7)
    c = gen_synthetic_qcqp(30, 20, 4, seed=8)
    assert a == b
    assert not a == c
    a.validate()


def test_generator_strong_convexity():
    inst = gen_synthetic_qcqp(40, 10, 3, strongly_convex=True, seed=3)
    for i, Q in enumerate(inst.Q):
        # rank(R^T R) <= p < n, so the smallest eigenvalue is exactly the shift
        delta = 1e-3 * spectral_norm(Q - min_rayleigh(Q) * sp.identity(40))
        assert min_rayleigh(Q, seed=i) >= 1e-3 * spectral_norm(Q) / (1 + 1e-3) * (1 - 1e-9)
        assert delta > 0


def test_json_roundtrip(tmp_path):
    inst = gen_synthetic_qcqp(25, 25, 3, strongly_convex=True, seed=11)
    save_qcqp(inst, tmp_path / "q.json")
    back = load_qcqp(tmp_path / "q.json")
    assert back == inst
    dense = QcqpInstance(n=2, m=1, m_bar=1, Q=[np.eye(2), np.ones((2, 2))], b=[1.0, 2.0], l=[[0.5, 0.25]],
                         r=[1.0])
    assert qcqp_from_dict(qcqp_to_dict(dense)) == dense
    with pytest.raises(ValueError):
        qcqp_from_dict({"format": "other"})


def test_digest():
    inst = gen_synthetic_qcqp(100, 100, 10, strongly_convex=True, seed=0)
    d = digest(inst)
    assert d["blocks"] == 11 and d["SC"] is True and d["seed"] == 0


def test_fused_and_plain_coefficients_agree(rng):
    inst = gen_synthetic_qcqp(10, 10, 2, seed=5, density=0.3)
    t = encode_qcqp(inst)
    z = rng.standard_normal(12)
    Ax, coeffs = t.eval_A_and_coefficients(z)
    assert np.allclose(Ax, t.eval_A(z))
    assert coeffs[0] == pytest.approx(t.model.a(z))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_lipschitz_model_holds_on_random_pairs(seed):
    inst = gen_synthetic_qcqp(8, 8, 3, seed=seed, density=0.4)
    t = encode_qcqp(inst)

    def sampler(r):
        z1 = t.proj_dom(r.standard_normal(11) * r.uniform(0.1, 5))
        z2 = t.proj_dom(z1 + r.standard_normal(11) * 10 ** r.uniform(-4, 1))
        return z1, z2

    assert check_lipschitz_model(t, sampler, n_samples=200, seed=seed).holds()


def test_operator_hand_evaluation():
    # n = m = 1, Q_1 = [2], l_1 = [1], r_1 = 1 at (x, y) = (1, 1): A = ((2 + 1) * 1, -(1 + 1 - 1))
    inst = QcqpInstance(n=1, m=1, m_bar=1, Q=[np.zeros((1, 1)), np.array([[2.0]])], b=np.zeros(1),
                        l=np.array([[1.0]]), r=np.array([1.0]))
    assert np.allclose(encode_qcqp(inst).eval_A(np.array([1.0, 1.0])), [3.0, -1.0])
