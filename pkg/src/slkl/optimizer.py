"""Stochastic coordinate Newton descent over the kernel weights (SLKL).

Each iteration draws one candidate uniformly (with replacement) from the
candidate set S, takes the projected Newton step on that coordinate and
pushes the weight change into the Woodbury factor. The loop stops once the
objective has decreased by less than ``epsilon`` (relative) over the last M
iterations, or after ``max_iters`` iterations.

Randomness comes from numpy's PCG64. The integer seed feeds a
``SeedSequence`` whose two children drive the candidate draw and the
coordinate stream respectively.
"""
from dataclasses import dataclass, field
import time

import numpy as np

from . import _kernels
from .kernel import ColumnSource, KernelSpec
from .lowrank import InverseState, update_weight
from .objective import ObjectiveParams, coord_terms, grad_coord, hess_coord, objective_value

NEWTON_DENOMINATORS = ("second_derivative", "half_second_derivative")
COLUMN_MODES = ("precompute", "on_the_fly")


@dataclass
class TrainConfig:
    nu: float
    M: int
    lam: float = 1.0
    epsilon: float = 1e-4
    max_iters: int = None
    seed: int = 0
    column_mode: str = "precompute"
    newton_denominator: str = "second_derivative"

    def __post_init__(self):
        if self.max_iters is None:
            self.max_iters = 100 * self.M
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.M < 1:
            raise ValueError(f"M must be at least 1, got {self.M}")
        if self.max_iters < self.M:
            raise ValueError(f"max_iters ({self.max_iters}) must be at least M ({self.M})")
        if self.column_mode not in COLUMN_MODES:
            raise ValueError(f"column_mode must be one of {COLUMN_MODES}")
        if self.newton_denominator not in NEWTON_DENOMINATORS:
            raise ValueError(f"newton_denominator must be one of {NEWTON_DENOMINATORS}")

    @property
    def params(self):
        return ObjectiveParams(nu=self.nu, lam=self.lam)


@dataclass
class TrainTrace:
    """Per-iteration record of a run.

    ``objective_history[k]`` and ``m0_history[k]`` describe the iterate after
    k iterations, so both have ``iterations + 1`` entries and start at mu = 0.
    ``chosen_coords[k]`` is the training index updated at iteration k.
    """

    objective_history: np.ndarray
    m0_history: np.ndarray
    chosen_coords: np.ndarray
    iterations: int
    stop_reason: str
    case_counts: tuple = (0, 0, 0, 0)
    rebuilds: int = 0
    wall_time: float = 0.0
    mu_history: np.ndarray = field(default=None, repr=False)


def rng_streams(seed):
    """Independent generators for the candidate draw and the coordinate stream."""
    cand, coord = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.Generator(np.random.PCG64(cand)), np.random.Generator(np.random.PCG64(coord))


def sample_candidates(n, M, seed):
    if not 1 <= M <= n:
        raise ValueError(f"M must lie in [1, n={n}], got {M}")
    cand_rng, _ = rng_streams(seed)
    return np.sort(cand_rng.choice(n, size=M, replace=False)).astype(np.int64)


def coordinate_stream(M, length, seed):
    _, coord_rng = rng_streams(seed)
    return coord_rng.integers(0, M, size=length, dtype=np.int64)


def newton_coordinate_step(mu_m, g, h):
    """Minimizer over v >= 0 of ``g (v - mu_m) + h (v - mu_m)^2 / 2``."""
    if h < 0:
        raise ValueError(f"second derivative must be nonnegative, got {h}")
    return float(_kernels.newton_step(float(mu_m), float(g), float(h)))


def scnd_iteration(state, y, columns, coord, params, newton_denominator="second_derivative"):
    """One SCND iteration on candidate position ``coord`` of ``columns``.

    The state is keyed by training index. Returns ``(state, F_new)``. This is
    the readable reference path; :func:`train_slkl` runs the fused kernel.
    """
    p = int(columns.candidates[coord])
    c = columns.column(coord)
    terms = coord_terms(state, y, c)
    g = grad_coord(state, y, c, params, terms)
    h = hess_coord(state, y, c, params, terms)
    if newton_denominator == "half_second_derivative":
        h *= 0.5
    mu_new = newton_coordinate_step(state.weight(p), g, max(h, 0.0))
    update_weight(state, p, mu_new, lambda _: c)
    return state, objective_value(state, y, state.dvals.sum(), params)


def train_slkl(data, config, spec=None, columns=None, record_mu=False):
    """Learn the weights mu* and the regression function on ``data``.

    ``columns`` may carry a prebuilt :class:`ColumnSource` (its candidate set
    then overrides the seeded draw). With ``record_mu`` the trace keeps the
    full weight vector over S after every iteration (memory iterations x M).

    Returns ``(ModelSolution, TrainTrace)``.
    """
    from .regression import solution_from_state

    spec = spec or KernelSpec()
    if columns is None:
        S = sample_candidates(data.n, config.M, config.seed)
        columns = ColumnSource(spec, data, S, config.column_mode)
    elif columns.M != config.M:
        raise ValueError(f"column source has {columns.M} candidates, config says M={config.M}")
    S = columns.candidates
    M, n = columns.M, data.n
    y = np.ascontiguousarray(data.targets)
    coords = coordinate_stream(M, config.max_iters, config.seed)

    Ct = np.empty((min(M, 64), n))
    m0 = 0
    G = np.zeros((0, 0))
    dvals = np.zeros(0)
    slot_ids = np.zeros(0, dtype=np.int64)
    slot_of = np.full(M, -1, dtype=np.int64)
    Cty = np.zeros(0)
    F_hist = np.empty(config.max_iters + 1)
    m0_hist = np.zeros(config.max_iters + 1, dtype=np.int64)
    counters = np.zeros(6, dtype=np.int64)
    yy = float(y @ y)
    F_hist[0] = yy
    half = config.newton_denominator == "half_second_derivative"
    mu_rows = [] if record_mu else None

    t0 = time.perf_counter()
    k, converged = 0, False
    # recording mu needs a stop after every iteration; otherwise one call does it all
    step = 1 if record_mu else config.max_iters
    while k < config.max_iters and not converged:
        Ct, m0, G, dvals, slot_ids, Cty, k, converged = _kernels.scnd_loop(
            coords, k, min(k + step, config.max_iters), y, yy, config.lam, config.nu,
            config.epsilon, M, half, columns.table, data.features, S, spec.sigma2,
            Ct, m0, G, dvals, slot_ids, slot_of, Cty, F_hist, m0_hist, counters)
        if record_mu:
            mu = np.zeros(M)
            mu[slot_ids] = dvals
            mu_rows.append(mu)
    elapsed = time.perf_counter() - t0

    state = InverseState(config.lam)
    state.active = [int(S[j]) for j in slot_ids]
    state.dvals = dvals.copy()
    state.G = G
    state._Ct = Ct
    state.case_counts = [int(x) for x in counters[:4]]
    state.rebuilds = int(counters[_kernels.REBUILDS])

    trace = TrainTrace(
        objective_history=F_hist[:k + 1].copy(),
        m0_history=m0_hist[:k + 1].copy(),
        chosen_coords=S[coords[:k]],
        iterations=k,
        stop_reason="converged" if converged else "max_iters",
        case_counts=tuple(state.case_counts),
        rebuilds=state.rebuilds,
        wall_time=elapsed,
        mu_history=np.array(mu_rows) if record_mu else None,
    )
    return solution_from_state(state, spec, data), trace
