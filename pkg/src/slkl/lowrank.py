"""Implicit maintenance of ``(lam I + C D C^T)^-1`` through the Woodbury factor G.

With ``G = (D^-1 + C^T C / lam)^-1`` the inverse is ``I/lam - C G C^T / lam^2``,
so applying it costs O(n m0). A change of a single weight is absorbed into G
with one of four updates (no-op, rank-1 reweight, removal, insertion).
"""
import numpy as np

from . import _kernels
from ._kernels import PIVOT_TOL, REFRESH_EVERY


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class InverseState:
    """The quadruple (C, D, G, lam) for the active columns.

    ``active`` lists the caller's indices in insertion order; slot ``i`` of
    ``C``, ``dvals`` and ``G`` belongs to ``active[i]``.
    """

    def __init__(self, lam):
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        self.lam = float(lam)
        self.active = []
        self.dvals = np.zeros(0)
        self.G = np.zeros((0, 0))
        self._Ct = None
        self.case_counts = [0, 0, 0, 0]
        self.rebuilds = 0
        self._since_refresh = 0

    @property
    def m0(self):
        return len(self.active)

    @property
    def C(self):
        if self._Ct is None:
            return None
        return self._Ct[:self.m0].T

    def weight(self, p):
        try:
            return float(self.dvals[self.active.index(p)])
        except ValueError:
            return 0.0

    def weights(self):
        return dict(zip(self.active, self.dvals.tolist()))

    def copy(self):
        other = InverseState(self.lam)
        other.active = list(self.active)
        other.dvals = self.dvals.copy()
        other.G = self.G.copy()
        other._Ct = None if self._Ct is None else self._Ct.copy()
        other.case_counts = list(self.case_counts)
        other.rebuilds = self.rebuilds
        other._since_refresh = self._since_refresh
        return other

    def dense_inverse(self, n):
        """Materialize the n x n inverse; for tests and small problems only."""
        return apply_inverse(self, np.eye(n))

    def __repr__(self):
        return f"InverseState(lam={self.lam}, m0={self.m0})"


def new_state(lam):
    return InverseState(lam)


def apply_inverse(state, v):
    """``(lam I + C D C^T)^-1 v`` for a vector or a matrix of right-hand sides."""
    v = np.asarray(v, dtype=np.float64)
    lam = state.lam
    if state.m0 == 0:
        return v / lam
    C = state._Ct[:state.m0]
    return v / lam - (C.T @ (state.G @ (C @ v))) / (lam * lam)


def _coord_products(state, c):
    C = state._Ct[:state.m0] if state.m0 else np.zeros((0, c.shape[0]))
    w = C @ c
    Gw = state.G @ w
    b = (c @ c) / state.lam - (w @ Gw) / state.lam ** 2
    return Gw, max(b, 0.0)


def update_weight(state, p, mu_new, column_provider=None):
    """Set the weight of index ``p`` to ``mu_new`` and update G incrementally.

    ``column_provider(p)`` must return the normalized column c_p; it is only
    called when ``p`` enters the active set. A pivot below 1e-12 falls back
    to :func:`rebuild`, as does every 1000th incremental update.
    """
    mu_new = float(mu_new)
    if mu_new < 0 or not np.isfinite(mu_new):
        raise ValueError(f"weights must be finite and nonnegative, got {mu_new}")
    try:
        slot = state.active.index(p)
        mu_old = float(state.dvals[slot])
    except ValueError:
        slot, mu_old = -1, 0.0

    if mu_old == 0.0 and mu_new == 0.0:
        state.case_counts[0] += 1
        return state

    if mu_new != 0.0 and mu_old != 0.0:
        state.case_counts[1] += 1
        ok = _kernels.rank1_reweight(state.G, slot, mu_old, mu_new)
        state.dvals[slot] = mu_new
    elif mu_new == 0.0:
        state.case_counts[2] += 1
        state.G, ok = _kernels.remove_slot(state._Ct, state.m0, state.G, slot)
        state.dvals = np.delete(state.dvals, slot)
        del state.active[slot]
    else:
        if column_provider is None:
            raise ValueError(f"index {p} enters the support but no column provider was given")
        state.case_counts[3] += 1
        c = np.ascontiguousarray(column_provider(p), dtype=np.float64)
        if state._Ct is None:
            state._Ct = np.empty((8, c.shape[0]))
        Gw, b = _coord_products(state, c)
        state._Ct, state.G, ok = _kernels.append_slot(state._Ct, state.m0, state.G, c, Gw, b,
                                                      mu_new, state.lam)
        state.dvals = np.append(state.dvals, mu_new)
        state.active.append(p)

    state._since_refresh += 1
    if not ok or state._since_refresh >= REFRESH_EVERY:
        rebuild(state)
    return state


def rebuild(state, column_provider=None):
    """Recompute G from scratch by a dense inversion of ``D^-1 + C^T C / lam``.

    With a ``column_provider`` the stored columns are refreshed first.
    """
    if np.any(state.dvals <= 0):
        raise ValueError("active weights must be positive")
    if column_provider is not None and state.m0:
        for i, p in enumerate(state.active):
            state._Ct[i] = column_provider(p)
    if state.m0 == 0:
        state.G = np.zeros((0, 0))
    else:
        try:
            state.G = _kernels.rebuild_G(state._Ct, state.m0, state.dvals, state.lam)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("D^-1 + C^T C / lambda is numerically singular") from exc
    state.rebuilds += 1
    state._since_refresh = 0
    return state


def state_from_weights(lam, weights, column_provider):
    """Build a state directly from ``{index: weight}`` (zero weights skipped)."""
    state = InverseState(lam)
    cols = []
    for p, mu in weights.items():
        if mu > 0:
            state.active.append(p)
            cols.append(np.asarray(column_provider(p), dtype=np.float64))
    state.dvals = np.array([weights[p] for p in state.active], dtype=np.float64)
    if cols:
        state._Ct = np.ascontiguousarray(np.array(cols))
    rebuild(state)
    state.rebuilds = 0
    return state


def woodbury_inverse(Ainv, U, Cmat, V):
    """``(A + U C V)^-1`` from ``A^-1`` via the Woodbury identity."""
    Ainv = np.atleast_2d(np.asarray(Ainv, dtype=np.float64))
    U = np.atleast_2d(np.asarray(U, dtype=np.float64))
    Cmat = np.atleast_2d(np.asarray(Cmat, dtype=np.float64))
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    try:
        inner = np.linalg.inv(Cmat) + V @ Ainv @ U
        if np.linalg.cond(inner) > 1.0 / PIVOT_TOL:
            raise SingularMatrixError("C^-1 + V A^-1 U is singular to working precision")
        correction = np.linalg.solve(inner, V @ Ainv)
    except SingularMatrixError:
        raise
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return Ainv - Ainv @ U @ correction


def block_inverse_add(Ainv, b, c):
    """Inverse of ``[[A, b], [b^T, c]]`` given ``A^-1``."""
    Ainv = np.atleast_2d(np.asarray(Ainv, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    Ab = Ainv @ b
    bA = b @ Ainv
    schur = float(c) - b @ Ab
    if abs(schur) < PIVOT_TOL:
        raise SingularMatrixError(f"Schur complement {schur:.3e} is too close to zero")
    k = Ainv.shape[0]
    out = np.empty((k + 1, k + 1))
    out[:k, :k] = Ainv + np.outer(Ab, bA) / schur
    out[:k, k] = -Ab / schur
    out[k, :k] = -bA / schur
    out[k, k] = 1.0 / schur
    return out
