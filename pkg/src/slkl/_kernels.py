"""Hot numeric kernels.

Everything here is compiled with ``numba.njit`` unless ``SLKL_DISABLE_NUMBA``
is set, in which case the functions run as ordinary numpy code. Keep the
bodies inside the numpy subset numba supports.

Storage convention shared with :mod:`slkl.lowrank`: the active columns are
the leading ``m0`` rows of ``Ct`` (one column c_i per row, spare capacity
below), ``G`` is an exactly sized ``m0 x m0`` array and ``dvals`` holds the
active weights in slot order.
"""
import numpy as np

from ._accel import njit

PIVOT_TOL = 1e-12
REFRESH_EVERY = 1000

# counters layout used by scnd_loop
CASE1, CASE2, CASE3, CASE4, REBUILDS, SINCE_REFRESH = 0, 1, 2, 3, 4, 5


@njit
def gaussian_column(X, xm, sigma2):
    diff = X - xm
    return np.exp(-np.sum(diff * diff, axis=1) / (2.0 * sigma2))


@njit
def newton_step(mu, g, h):
    if h != 0.0:
        v = mu - g / h
        return v if v > 0.0 else 0.0
    return 0.0


@njit
def drop_index(G, j):
    m = G.shape[0]
    out = np.empty((m - 1, m - 1))
    out[:j, :j] = G[:j, :j]
    out[:j, j:] = G[:j, j + 1:]
    out[j:, :j] = G[j + 1:, :j]
    out[j:, j:] = G[j + 1:, j + 1:]
    return out


@njit
def rebuild_G(Ct, m0, dvals, lam):
    if m0 == 0:
        return np.zeros((0, 0))
    C = Ct[:m0]
    Ginv = (C @ C.T) / lam
    for i in range(m0):
        Ginv[i, i] += 1.0 / dvals[i]
    G = np.linalg.inv(Ginv)
    return 0.5 * (G + G.T)


@njit
def rank1_reweight(G, j, mu_old, mu_new):
    """Case 2, in place. False when the pivot is too small to trust."""
    delta = 1.0 / mu_new - 1.0 / mu_old
    gcol = G[:, j].copy()
    piv = 1.0 + delta * gcol[j]
    if abs(piv) < PIVOT_TOL:
        return False
    G -= (delta / piv) * np.outer(gcol, gcol)
    return True


@njit
def remove_slot(Ct, m0, G, j):
    """Case 3. Compacts row ``j`` out of ``Ct`` in place, returns (G_new, ok)."""
    gjj = G[j, j]
    ok = gjj >= PIVOT_TOL
    if ok:
        gcol = G[:, j].copy()
        Gn = drop_index(G - np.outer(gcol, gcol) / gjj, j)
    else:
        Gn = drop_index(G, j)
    if j < m0 - 1:
        Ct[j:m0 - 1] = Ct[j + 1:m0].copy()
    return Gn, ok


@njit
def append_slot(Ct, m0, G, c, Gw, b, mu_new, lam):
    """Case 4. ``Gw = G C^T c`` and ``b = c^T K^-1 c`` before insertion.

    Returns (Ct, G_new, ok); ``Ct`` is reallocated when out of capacity.
    """
    if m0 == Ct.shape[0]:
        grown = np.empty((max(8, 2 * Ct.shape[0]), Ct.shape[1]))
        grown[:m0] = Ct[:m0]
        Ct = grown
    Ct[m0] = c
    Gn = np.zeros((m0 + 1, m0 + 1))
    schur = 1.0 / mu_new + b
    if schur < PIVOT_TOL:
        return Ct, Gn, False
    s = 1.0 / schur
    v = -(s / lam) * Gw
    Gn[:m0, :m0] = G + np.outer(v, v) / s
    Gn[:m0, m0] = v
    Gn[m0, :m0] = v
    Gn[m0, m0] = s
    return Ct, Gn, True


@njit
def apply_inverse_vec(Ct, m0, G, lam, v):
    C = Ct[:m0]
    return v / lam - (C.T @ (G @ (C @ v))) / (lam * lam)


@njit
def scnd_loop(coords, k_start, k_stop, y, yy, lam, nu, eps, M, half_h,
              table, X, cand_rows, sigma2,
              Ct, m0, G, dvals, slot_ids, slot_of, Cty,
              F_hist, m0_hist, counters):
    """Run SCND iterations ``k_start .. k_stop - 1`` on candidate positions.

    ``table`` holds the precomputed candidate columns (M x n); pass an empty
    (0 x n) table to recompute inactive columns from ``X`` every iteration.
    ``F_hist[k]`` is the objective before iteration k, so ``F_hist[0]`` must
    be seeded by the caller. Returns the updated state pieces, the index of
    the first iteration not run and whether the stopping rule fired.
    """
    precomputed = table.shape[0] > 0
    k = k_start
    while k < k_stop:
        j = coords[k]
        slot = slot_of[j]
        if slot >= 0:
            c = Ct[slot].copy()
        elif precomputed:
            c = table[j]
        else:
            c = gaussian_column(X, X[cand_rows[j]], sigma2)

        w = Ct[:m0] @ c
        Gw = G @ w
        yc = y @ c
        cc = c @ c
        a = yc / lam - (Cty @ Gw) / (lam * lam)
        b = cc / lam - (w @ Gw) / (lam * lam)
        if b < 0.0:
            b = 0.0
        g = -lam * a * a + nu
        h = lam * a * a * b
        if not half_h:
            h *= 2.0

        mu_old = dvals[slot] if slot >= 0 else 0.0
        mu_new = newton_step(mu_old, g, h)

        if mu_old == 0.0 and mu_new == 0.0:
            counters[CASE1] += 1
        else:
            ok = True
            if mu_old != 0.0 and mu_new != 0.0:
                counters[CASE2] += 1
                ok = rank1_reweight(G, slot, mu_old, mu_new)
                dvals[slot] = mu_new
            elif mu_new == 0.0:
                counters[CASE3] += 1
                G, ok = remove_slot(Ct, m0, G, slot)
                dvals = np.concatenate((dvals[:slot], dvals[slot + 1:]))
                Cty = np.concatenate((Cty[:slot], Cty[slot + 1:]))
                slot_ids = np.concatenate((slot_ids[:slot], slot_ids[slot + 1:]))
                slot_of[j] = -1
                m0 -= 1
                for t in range(slot, m0):
                    slot_of[slot_ids[t]] = t
            else:
                counters[CASE4] += 1
                Ct, G, ok = append_slot(Ct, m0, G, c, Gw, b, mu_new, lam)
                dvals = np.append(dvals, mu_new)
                Cty = np.append(Cty, yc)
                slot_ids = np.append(slot_ids, j)
                slot_of[j] = m0
                m0 += 1
            counters[SINCE_REFRESH] += 1
            if not ok or counters[SINCE_REFRESH] >= REFRESH_EVERY:
                G = rebuild_G(Ct, m0, dvals, lam)
                counters[REBUILDS] += 1
                counters[SINCE_REFRESH] = 0

        F = yy - (Cty @ (G @ Cty)) / lam + nu * np.sum(dvals)
        F_hist[k + 1] = F
        m0_hist[k + 1] = m0
        k += 1
        if k >= M:
            ref = F_hist[k - M]
            if ref - F < eps * ref:
                return Ct, m0, G, dvals, slot_ids, Cty, k, True
    return Ct, m0, G, dvals, slot_ids, Cty, k, False
