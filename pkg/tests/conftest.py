import numpy as np
import pytest

from afbf.operators import GeneralizedLipschitzModel, OperatorTriple, nonneg_projector, normal_cone_resolvent


def linear_triple(M, shift=None, L_B=None, nonneg=None):
    """``B(x) = M x + shift`` with optional sign constraints; ``A = 0``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    shift = np.zeros(n) if shift is None else np.asarray(shift, dtype=float)
    if L_B is None:
        L_B = float(np.linalg.norm(M, 2)) or 1e-8
    kw = {}
    if nonneg is not None:
        proj = nonneg_projector(np.asarray(nonneg, dtype=bool))
        kw = {"resolvent": normal_cone_resolvent(proj), "proj_dom": proj}
    return OperatorTriple(dim=n, B=lambda x: M @ x + shift, L_B=L_B, **kw)


def identity_1d():
    """``B(x) = x`` on the line, zero at 0."""
    return linear_triple([[1.0]])


def shifted_ray():
    """``0 in x + 1 + N_[0,inf)(x)``, zero at 0."""
    return linear_triple([[1.0]], [1.0], nonneg=[True])


def zero_triple(dim=3):
    return OperatorTriple(dim=dim, model=GeneralizedLipschitzModel(mu=2.0, theta=2.0, beta=2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
