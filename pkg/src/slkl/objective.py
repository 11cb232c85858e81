"""The kernel-weight objective F(mu) and its coordinate-wise derivatives.

    F(mu) = y^T (I + K(mu)/lam)^-1 y + nu * sum(mu)

All quantities are read off an :class:`~slkl.lowrank.InverseState`; the two
inner products ``y^T Kinv c`` and ``c^T Kinv c`` are the only ingredients of
every partial derivative, so :func:`coord_terms` computes them once.
"""
from dataclasses import dataclass
from math import factorial

import numpy as np

from .lowrank import apply_inverse


@dataclass(frozen=True)
class ObjectiveParams:
    nu: float
    lam: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")


def _check_lambda(state, params):
    if state.lam != params.lam:
        raise ValueError(f"state lambda {state.lam} differs from objective lambda {params.lam}")


def objective_value(state, y, mu_sum, params):
    _check_lambda(state, params)
    y = np.asarray(y, dtype=np.float64)
    return float(params.lam * (y @ apply_inverse(state, y)) + params.nu * mu_sum)


def coord_terms(state, y, c_m):
    """Return ``(y^T Kinv c_m, c_m^T Kinv c_m)`` with ``Kinv = (lam I + K(mu))^-1``."""
    Kc = apply_inverse(state, np.asarray(c_m, dtype=np.float64))
    return float(np.asarray(y) @ Kc), float(c_m @ Kc)


def grad_coord(state, y, c_m, params, terms=None):
    _check_lambda(state, params)
    a, _ = terms if terms is not None else coord_terms(state, y, c_m)
    return -params.lam * a * a + params.nu


def hess_coord(state, y, c_m, params, terms=None):
    _check_lambda(state, params)
    a, b = terms if terms is not None else coord_terms(state, y, c_m)
    return 2.0 * params.lam * a * a * b


def higher_partial(state, y, c_m, p, params, terms=None):
    """p-th partial derivative along one coordinate, p >= 2."""
    if p < 2:
        raise ValueError(f"order must be at least 2, got {p}")
    _check_lambda(state, params)
    a, b = terms if terms is not None else coord_terms(state, y, c_m)
    return (-1) ** p * factorial(p) * params.lam * a * a * b ** (p - 1)
