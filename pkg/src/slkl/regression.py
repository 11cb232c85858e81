"""Prediction from a learned model, exact KRR baselines and MSE scoring."""
from dataclasses import dataclass

import numpy as np

from .kernel import cross_kernel, eval_kernel, gram_matrix
from .lowrank import apply_inverse, state_from_weights

# KRR on all n points materializes the n x n Gram matrix
KRRN_SIZE_CAP = 20000


@dataclass
class ModelSolution:
    lam: float
    support_indices: np.ndarray
    landmarks: np.ndarray
    mu_star: np.ndarray
    alpha_star: np.ndarray
    alpha_tilde: np.ndarray
    landmark_norms: np.ndarray = None

    @property
    def m0(self):
        return len(self.support_indices)

    def predict(self, spec, X):
        return predict(self, spec, X)


def solution_from_state(state, spec, data):
    """Collapse a trained state into the m0 landmark weights used for prediction."""
    alpha = 2.0 * state.lam * apply_inverse(state, data.targets)
    idx = np.asarray(state.active, dtype=np.int64)
    landmarks = data.features[idx] if idx.size else np.zeros((0, data.d))
    norms = np.array([np.sqrt(eval_kernel(spec, x, x)) for x in landmarks])
    if idx.size:
        alpha_tilde = state.dvals * (state._Ct[:state.m0] @ alpha) / norms
    else:
        alpha_tilde = np.zeros(0)
    return ModelSolution(lam=state.lam, support_indices=idx, landmarks=landmarks,
                         mu_star=state.dvals.copy(), alpha_star=alpha,
                         alpha_tilde=alpha_tilde, landmark_norms=norms)


def predict(model, spec, x):
    """``f(x) = sum_m alpha_tilde_m k(x_m, x) / (2 lam)``; ``x`` may be a d-vector or a batch."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if model.m0 == 0:
        out = np.zeros(X.shape[0])
    else:
        if X.shape[1] != model.landmarks.shape[1]:
            raise ValueError(f"expected {model.landmarks.shape[1]} features, got {X.shape[1]}")
        out = cross_kernel(spec, X, model.landmarks) @ model.alpha_tilde / (2.0 * model.lam)
    return float(out[0]) if single else out


@dataclass
class KRRModel:
    """Plain kernel ridge regression on a fixed set of training points."""

    lam: float
    points: np.ndarray
    alpha: np.ndarray
    dual_objective: float

    def predict(self, spec, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return cross_kernel(spec, X, self.points) @ self.alpha / (2.0 * self.lam)


def krr_full(spec, data, lam, size_cap=KRRN_SIZE_CAP):
    """Solve ``(I + K/lam) alpha = 2 y`` by a dense Cholesky factorization."""
    if data.n > size_cap:
        raise MemoryError(f"KRR on n={data.n} exceeds the dense size cap of {size_cap}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    A = np.eye(data.n) + gram_matrix(spec, data) / lam
    L = np.linalg.cholesky(A)
    half = np.linalg.solve(L.T, np.linalg.solve(L, data.targets))
    return KRRModel(lam=lam, points=data.features, alpha=2.0 * half,
                    dual_objective=float(data.targets @ half))


def krr_dual_objective(K, y, lam, alpha):
    """``y^T alpha - alpha^T (lam I + K) alpha / (4 lam)``."""
    return float(y @ alpha - alpha @ (lam * alpha + K @ alpha) / (4.0 * lam))


def krr_subset(spec, data, subset, lam):
    return krr_full(spec, data.subset(subset), lam)


def unif_baseline(columns, lam, spec=None, weight=1.0):
    """KRR with the kernel built from every candidate column at the same weight."""
    spec = spec or columns.spec
    positions = {int(p): j for j, p in enumerate(columns.candidates)}
    weights = {p: float(weight) for p in positions}
    state = state_from_weights(lam, weights, lambda p: columns.column(positions[p]))
    return solution_from_state(state, spec, columns.data)


def mse(predictions, targets):
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {t.size} targets")
    return float(np.mean((p - t) ** 2))
