"""One-dimensional problem with a Hölder (not Lipschitz) continuous gradient.

``min |x|^(1+nu)/(1+nu)`` over ``[-1, 1]``: ``A(x) = sign(x)|x|^nu``,
``B = 0``, ``C = N_[-1,1]``, unique zero ``x = 0``.
"""

from __future__ import annotations

import numpy as np

from ..operators import GeneralizedLipschitzModel, OperatorTriple, box_projector, constant, normal_cone_resolvent

# |s|x|^nu - s'|y|^nu| <= 2^(1-nu) |x - y|^nu on the line; 2 is a safe round-up.
HOLDER_CONSTANT = 2.0


def encode_holder_toy(nu: float) -> OperatorTriple:
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in ]0, 1[")

    def A(x):
        return np.sign(x) * np.abs(x) ** nu

    def objective(x):
        return float(np.abs(x[0]) ** (1.0 + nu) / (1.0 + nu))

    proj = box_projector([-1.0], [1.0])
    model = GeneralizedLipschitzModel(mu=2.0 * nu, theta=2.0, beta=2.0, a=constant(HOLDER_CONSTANT**2))
    return OperatorTriple(dim=1, A=A, resolvent=normal_cone_resolvent(proj), proj_dom=proj, zeta=1.0,
                          model=model, objective=objective, name=f"holder(nu={nu})")
