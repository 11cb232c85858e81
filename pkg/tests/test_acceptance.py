"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (or ``python3 tests/test_acceptance.py``);
the terminal summary repeats every verdict. The sinc protocol runs 20 seeded
repetitions and takes about a minute.
"""
import os
import sys

import numpy as np
import pytest

from slkl.datasets import SplitSpec, gen_sinc, load_abalone, standardize, train_test_split
from slkl.kernel import ColumnSource, Dataset, KernelSpec, compute_column, gram_matrix
from slkl.lowrank import (apply_inverse, block_inverse_add, new_state, rebuild, state_from_weights, update_weight,
                          woodbury_inverse)
from slkl.objective import ObjectiveParams, grad_coord, hess_coord, higher_partial, objective_value
from slkl.optimizer import TrainConfig, newton_coordinate_step, sample_candidates, train_slkl
from slkl.regression import krr_full, mse, unif_baseline

from conftest import random_problem, random_state, record_criterion
from oracles import dense_inverse, grid_argmin_quadratic

RUNS = 20
SPEC = KernelSpec(1.0)


def verdict(number, title, ok, detail):
    ok = bool(ok)
    record_criterion(number, title, ok, detail)
    print(f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    return ok


def max_rise(F):
    """Largest relative increase F[k+1]/F[k] - 1 over a trace."""
    F = np.asarray(F)
    if len(F) < 2:
        return -np.inf
    return float(np.max((F[1:] - F[:-1]) / F[:-1]))


@pytest.fixture(scope="session")
def sinc_runs():
    out = []
    for seed in range(RUNS):
        train, test = gen_sinc(1000, 1000, 10.0, seed)
        row = {"seed": seed}
        for M in (1000, 256):
            model, trace = train_slkl(train, TrainConfig(nu=0.01, M=M, lam=1.0, epsilon=1e-4, seed=seed), SPEC)
            row[M] = dict(mse=mse(model.predict(SPEC, test.features), test.targets), m0=model.m0,
                          F=trace.objective_history)
        S = sample_candidates(train.n, 1000, seed)
        unif = unif_baseline(ColumnSource(SPEC, train, S), 1.0, SPEC, 1.0)
        row["unif"] = mse(unif.predict(SPEC, test.features), test.targets)
        row["krrn"] = mse(krr_full(SPEC, train, 1.0).predict(SPEC, test.features), test.targets)
        out.append(row)
    return out


def test_criterion_01_sinc_mse(sinc_runs):
    slkl = np.mean([r[1000]["mse"] for r in sinc_runs])
    unif = np.mean([r["unif"] for r in sinc_runs])
    krrn = np.mean([r["krrn"] for r in sinc_runs])
    checks = [0.008 <= slkl <= 0.014, 0.010 <= unif <= 0.016, slkl < unif, 0.007 <= krrn <= 0.012]
    ok = verdict(1, "sinc test MSE", all(checks),
                 f"SLKL {slkl:.5f} in [0.008, 0.014]={checks[0]}, Unif {unif:.5f} in [0.010, 0.016]={checks[1]}, "
                 f"SLKL < Unif={checks[2]}, KRRn {krrn:.5f} in [0.007, 0.012]={checks[3]}")
    assert ok


def test_criterion_02_support_size(sinc_runs):
    m1000 = np.array([r[1000]["m0"] for r in sinc_runs])
    m256 = np.array([r[256]["m0"] for r in sinc_runs])
    checks = [90 <= m1000.mean() <= 200, 55 <= m256.mean() <= 120, np.all(m1000 < 1000) and np.all(m256 < 256)]
    ok = verdict(2, "support size", all(checks),
                 f"mean m0 {m1000.mean():.1f} (M=1000), {m256.mean():.1f} (M=256), max {m1000.max()}/{m256.max()}")
    assert ok


def test_criterion_03_monotone_descent(sinc_runs):
    rises = [max_rise(r[M]["F"]) for r in sinc_runs for M in (1000, 256)]
    rng = np.random.default_rng(2024)
    for i in range(100):
        n = int(rng.integers(5, 31))
        M = int(rng.integers(2, n + 1))
        X = rng.uniform(-3, 3, size=(n, 2))
        data = Dataset(X, np.sinc(np.linalg.norm(X, axis=1) / np.pi) + 0.1 * rng.normal(size=n))
        _, trace = train_slkl(data, TrainConfig(nu=float(10 ** rng.uniform(-3, -1)), M=M, seed=i), SPEC)
        rises.append(max_rise(trace.objective_history))
    rises = np.array(rises)
    bad = int(np.sum(rises > 1e-10))
    ok = verdict(3, "monotone descent", bad == 0,
                 f"{bad} of {len(rises)} traces have F[k+1] > F[k](1 + 1e-10); worst relative rise {rises.max():.3g}")
    assert ok


def test_criterion_04_inverse_maintenance():
    rng = np.random.default_rng(4)
    worst_G, worst_apply, all_cases = 0.0, 0.0, True
    for trial in range(20):
        n = int(rng.integers(8, 31))
        M = int(rng.integers(3, min(n, 12) + 1))
        data, spec, cols = random_problem(rng, n=n, M=M)
        lam = float(rng.uniform(0.3, 3.0))
        state = new_state(lam)
        for _ in range(200):
            p = int(rng.integers(M))
            r = rng.random()
            new = 0.0 if r < 0.3 else (state.weight(p) if r < 0.4 else float(rng.uniform(0.01, 5.0)))
            update_weight(state, p, new, cols.column)
        all_cases &= min(state.case_counts) > 0
        G_ref = rebuild(state.copy()).G
        if state.m0:
            worst_G = max(worst_G, np.linalg.norm(state.G - G_ref) / np.linalg.norm(G_ref))
        mu = np.array([state.weight(p) for p in range(M)])
        v = rng.normal(size=n)
        ref = dense_inverse(cols.table, mu, lam) @ v
        worst_apply = max(worst_apply, np.max(np.abs(apply_inverse(state, v) - ref)))
    ok = verdict(4, "inverse maintenance", all_cases and worst_G < 1e-8 and worst_apply < 1e-10,
                 f"all four cases hit={all_cases}, worst G rel. Frobenius {worst_G:.2g}, "
                 f"worst apply_inverse error {worst_apply:.2g}")
    assert ok


def test_criterion_05_derivatives():
    rng = np.random.default_rng(5)
    worst_g, worst_h, max_third = 0.0, 0.0, -np.inf
    for _ in range(50):
        data, spec, cols = random_problem(rng, n=int(rng.integers(5, 21)), M=4)
        lam = float(rng.uniform(0.5, 2.0))
        params = ObjectiveParams(float(rng.uniform(0.01, 0.1)), lam)
        state, mu = random_state(rng, cols, lam, density=1.0)
        j = int(rng.integers(4))
        c = cols.column(j)
        y = data.targets

        def F(t):
            w = mu.copy()
            w[j] += t
            s = state_from_weights(lam, dict(enumerate(w)), cols.column)
            return objective_value(s, y, w.sum(), params)

        h1, h2 = 1e-4, 1e-3
        fd_g = (F(h1) - F(-h1)) / (2 * h1)
        fd_h = (F(h2) - 2 * F(0.0) + F(-h2)) / h2 ** 2
        g, h = grad_coord(state, y, c, params), hess_coord(state, y, c, params)
        worst_g = max(worst_g, abs(g - fd_g) / abs(g))
        worst_h = max(worst_h, abs(h - fd_h) / abs(h))
        max_third = max(max_third, higher_partial(state, y, c, 3, params))
    ok = verdict(5, "derivatives", worst_g < 1e-5 and worst_h < 1e-4 and max_third <= 0,
                 f"worst grad rel. error {worst_g:.2g}, worst hess rel. error {worst_h:.2g}, "
                 f"max third partial {max_third:.3g}")
    assert ok


def test_criterion_06_newton_step():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        mu, g, h = float(rng.uniform(0, 5)), float(rng.normal(scale=2)), float(rng.uniform(0.01, 10))
        v = newton_coordinate_step(mu, g, h)
        v_grid, _, dv = grid_argmin_quadratic(mu, g, h, mu + 10 * abs(g) / h)
        worst = max(worst, abs(v - v_grid) / dv if dv > 0 else abs(v - v_grid))
    ok = verdict(6, "Newton step", worst <= 1.0, f"worst distance to grid minimizer {worst:.3g} grid steps")
    assert ok


def test_criterion_07_lambda_nu_pivot():
    train, test = gen_sinc(200, 200, 10.0, seed=7)
    a, ta = train_slkl(train, TrainConfig(nu=0.01, M=100, lam=1.0, seed=7), SPEC, record_mu=True)
    b, tb = train_slkl(train, TrainConfig(nu=0.0025, M=100, lam=4.0, seed=7), SPEC, record_mu=True)
    same_len = ta.iterations == tb.iterations
    k = min(ta.iterations, tb.iterations)
    num = np.linalg.norm(tb.mu_history[:k] - 4 * ta.mu_history[:k], axis=1)
    den = np.maximum(np.linalg.norm(4 * ta.mu_history[:k], axis=1), 1e-300)
    worst_mu = float(np.max(np.where(num == 0, 0.0, num / den)))
    dpred = float(np.max(np.abs(a.predict(SPEC, test.features) - b.predict(SPEC, test.features))))
    ok = verdict(7, "lambda-nu pivot", same_len and worst_mu < 1e-8 and dpred < 1e-6,
                 f"iterations {ta.iterations}/{tb.iterations}, worst |mu' - 4 mu|/|4 mu| {worst_mu:.2g}, "
                 f"max prediction gap {dpred:.2g}")
    assert ok


def test_criterion_08_empirical_kernel_map():
    rng = np.random.default_rng(8)
    data = Dataset(rng.normal(size=(15, 3)), np.zeros(15))
    C = np.array([compute_column(SPEC, data, m) for m in range(15)])
    K = gram_matrix(SPEC, data)
    err = float(np.max(np.abs(C.T @ C - K @ K.T)))
    ok = verdict(8, "empirical kernel map", err < 1e-10, f"max entry error {err:.2g}")
    assert ok


def test_criterion_09_appendix_primitives():
    rng = np.random.default_rng(9)
    worst_w, worst_b = 0.0, 0.0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        r = int(rng.integers(1, n + 1))
        A = rng.normal(size=(n, n)) + n * np.eye(n)
        U, V = rng.normal(size=(n, r)), rng.normal(size=(r, n))
        Cm = np.diag(rng.uniform(0.5, 2.0, size=r))
        ref = np.linalg.inv(A + U @ Cm @ V)
        worst_w = max(worst_w, float(np.max(np.abs(woodbury_inverse(np.linalg.inv(A), U, Cm, V) - ref))))
        b, c = rng.normal(size=n), float(rng.uniform(n + 1, 2 * n + 2))
        full = np.block([[A, b[:, None]], [b[None, :], np.array([[c]])]])
        worst_b = max(worst_b, float(np.max(np.abs(block_inverse_add(np.linalg.inv(A), b, c) - np.linalg.inv(full)))))
    ok = verdict(9, "Woodbury and block inverse", worst_w < 1e-10 and worst_b < 1e-10,
                 f"worst Woodbury error {worst_w:.2g}, worst block error {worst_b:.2g}")
    assert ok


def test_criterion_10_abalone():
    path = os.environ.get("SLKL_ABALONE_PATH")
    if not path or not os.path.exists(path):
        record_criterion(10, "abalone", None, "set SLKL_ABALONE_PATH to the UCI abalone.data file")
        pytest.skip("abalone data not available (set SLKL_ABALONE_PATH)")
    data = load_abalone(path)
    spec = KernelSpec(2.5)
    slkl, krrn = [], []
    for seed in range(RUNS):
        train, test = train_test_split(data, SplitSpec(3000, 1177, seed))
        train, (test,), _, _ = standardize(train, [test])
        model, _ = train_slkl(train, TrainConfig(nu=0.01, M=3000, seed=seed), spec)
        slkl.append(mse(model.predict(spec, test.features), test.targets))
        krrn.append(mse(krr_full(spec, train, 1.0).predict(spec, test.features), test.targets))
    s, k = float(np.mean(slkl)), float(np.mean(krrn))
    ok = verdict(10, "abalone", s < k and 4.0 <= s <= 6.5, f"SLKL {s:.3f} vs KRRn {k:.3f}, band [4.0, 6.5]")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
