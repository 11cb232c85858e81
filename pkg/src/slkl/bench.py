"""Seeded multi-run experiments: SLKL against the KRRn / KRRM / Unif baselines.

Run ``r`` uses seed ``base_seed + r`` for everything random in it (data
generation or split, candidate set, coordinate stream), so each record can
be reproduced on its own and runs may execute in any order.
"""
from concurrent.futures import ProcessPoolExecutor
import configparser
import csv
from dataclasses import dataclass, field, fields, replace
import io
import math
import os

import numpy as np

from .datasets import SplitSpec, gen_sinc, load_delimited, standardize, train_test_split
from .kernel import ColumnSource, KernelSpec
from .optimizer import COLUMN_MODES, NEWTON_DENOMINATORS, TrainConfig, sample_candidates, train_slkl
from .regression import KRRN_SIZE_CAP, krr_full, krr_subset, mse, predict, unif_baseline

METHODS = ("slkl", "krrn", "krrm", "unif")
RECORD_FIELDS = ("seed", "method", "M", "nu", "lam", "mse", "m0", "iterations", "stop_reason", "status",
                 "wall_time")
SUMMARY_FIELDS = ("method", "M", "nu", "lam", "runs", "mse_mean", "mse_std", "m0_mean", "m0_std",
                  "iterations_mean")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str = "sinc"
    data_file: str = None
    target_col: int = -1
    delimiter: str = ","
    header: bool = False
    categorical: list = field(default_factory=list)
    standardize: bool = True
    n_train: int = None
    n_test: int = None
    snr_db: float = 10.0
    sigma2: float = 1.0
    methods: list = field(default_factory=lambda: list(METHODS))
    m_values: list = field(default_factory=lambda: [256, 512, 1000])
    nu: list = field(default_factory=lambda: [0.01])
    lam: float = 1.0
    epsilon: float = 1e-4
    runs: int = 20
    seed: int = 0
    max_iters: int = None
    column_mode: str = "precompute"
    newton_denominator: str = "second_derivative"
    unif_weight: float = 1.0
    krrn_cap: int = KRRN_SIZE_CAP
    outdir: str = "results"
    jobs: int = 1

    def validate(self):
        if self.dataset not in ("sinc", "delimited"):
            raise ConfigError(f"dataset must be 'sinc' or 'delimited', got {self.dataset!r}")
        if self.dataset == "delimited" and not self.data_file:
            raise ConfigError("a delimited dataset needs data_file")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}, got {self.methods}")
        if not self.m_values or any(m < 1 for m in self.m_values):
            raise ConfigError(f"m_values must be positive integers, got {self.m_values}")
        if not self.nu or any(not v > 0 for v in self.nu):
            raise ConfigError(f"nu must be positive, got {self.nu}")
        for name in ("lam", "epsilon", "sigma2", "unif_weight"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.runs < 1 or self.jobs < 1:
            raise ConfigError("runs and jobs must be at least 1")
        if self.column_mode not in COLUMN_MODES:
            raise ConfigError(f"column_mode must be one of {COLUMN_MODES}")
        if self.newton_denominator not in NEWTON_DENOMINATORS:
            raise ConfigError(f"newton_denominator must be one of {NEWTON_DENOMINATORS}")
        return self


def _as_list(text, conv):
    if isinstance(text, (list, tuple)):
        return [conv(t) for t in text]
    return [conv(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _as_bool(text):
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if text in (None, "", "none", "None") else int(text)


_CONVERTERS = {
    "target_col": int, "header": _as_bool, "standardize": _as_bool, "n_train": _opt_int, "n_test": _opt_int,
    "snr_db": float, "sigma2": float, "lam": float, "epsilon": float, "runs": int, "seed": int,
    "max_iters": _opt_int, "unif_weight": float, "krrn_cap": int, "jobs": int,
    "methods": lambda t: _as_list(t, lambda s: s.strip().lower()),
    "m_values": lambda t: _as_list(t, int),
    "nu": lambda t: _as_list(t, float),
    "categorical": lambda t: _as_list(t, int),
}
# accepted spellings in config files and flags
_ALIASES = {"lambda": "lam", "m": "m_values"}


def config_from_mapping(values, base=None):
    """Overlay ``{key: text}`` onto ``base`` with type conversion."""
    cfg = base or ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    updates = {}
    for raw_key, raw in values.items():
        if raw is None:
            continue
        key = raw_key.strip().lower().replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown config key {raw_key!r}")
        try:
            updates[key] = _CONVERTERS.get(key, str)(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {raw_key}: {exc}") from None
    if "delimiter" in updates and updates["delimiter"].lower() in ("whitespace", "space", "none"):
        updates["delimiter"] = None
    return replace(cfg, **updates)


def load_config(path, section=None):
    """Read ``key = value`` pairs from one section of an INI-style file.

    Without ``section`` the first section is used; keys before any section
    header are accepted too.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(interpolation=None, default_section="defaults")
    try:
        parser.read_string("[defaults]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if section is None:
        sections = parser.sections()
        section = sections[0] if sections else None
    if section is None:
        values = dict(parser.defaults())
    elif parser.has_section(section):
        values = dict(parser.items(section))
    else:
        raise ConfigError(f"{path}: no section [{section}]")
    return config_from_mapping(values)


def load_run_data(cfg, seed):
    """Train and test sets for the run with this seed."""
    if cfg.dataset == "sinc":
        train, test = gen_sinc(cfg.n_train or 1000, cfg.n_test or 1000, cfg.snr_db, seed)
        return train, test
    data = load_delimited(cfg.data_file, cfg.target_col, cfg.delimiter, cfg.header, cfg.categorical)
    n_train = cfg.n_train or int(math.ceil(0.7 * data.n))
    n_test = cfg.n_test if cfg.n_test is not None else data.n - n_train
    train, test = train_test_split(data, SplitSpec(n_train, n_test, seed))
    if cfg.standardize:
        train, (test,), _, _ = standardize(train, [test])
    return train, test


def run_single(cfg, method, M, nu, seed, trace_dir=None):
    """One (method, M, nu, seed) cell. Returns a record dict."""
    spec = KernelSpec(cfg.sigma2)
    train, test = load_run_data(cfg, seed)
    rec = dict(seed=seed, method=method, M=M, nu=nu, lam=cfg.lam, mse=float("nan"), m0=0,
               iterations=0, stop_reason="", status="ok", wall_time=0.0)
    if method == "krrn":
        rec["M"] = train.n
        if train.n > cfg.krrn_cap:
            rec["status"] = "skipped"
            return rec
        model = krr_full(spec, train, cfg.lam, cfg.krrn_cap)
        rec["mse"] = mse(model.predict(spec, test.features), test.targets)
        rec["m0"] = train.n
        return rec
    if M > train.n:
        raise ConfigError(f"M={M} exceeds the {train.n} training points")
    if method == "krrm":
        S = sample_candidates(train.n, M, seed)
        model = krr_subset(spec, train, S, cfg.lam)
        rec["mse"] = mse(model.predict(spec, test.features), test.targets)
        rec["m0"] = M
        return rec
    if method == "unif":
        S = sample_candidates(train.n, M, seed)
        sol = unif_baseline(ColumnSource(spec, train, S, cfg.column_mode), cfg.lam, spec, cfg.unif_weight)
        rec["mse"] = mse(predict(sol, spec, test.features), test.targets)
        rec["m0"] = sol.m0
        return rec

    tc = TrainConfig(nu=nu, M=M, lam=cfg.lam, epsilon=cfg.epsilon, max_iters=cfg.max_iters, seed=seed,
                     column_mode=cfg.column_mode, newton_denominator=cfg.newton_denominator)
    sol, trace = train_slkl(train, tc, spec)
    rec.update(mse=mse(predict(sol, spec, test.features), test.targets), m0=sol.m0,
               iterations=trace.iterations, stop_reason=trace.stop_reason, wall_time=trace.wall_time)
    if trace_dir is not None:
        write_trace(os.path.join(trace_dir, trace_filename(method, M, seed, nu, len(cfg.nu) > 1)), trace)
    return rec


def trace_filename(method, M, seed, nu=None, with_nu=False):
    if with_nu:
        return f"{method}_{M}_nu{nu:g}_{seed}.csv"
    return f"{method}_{M}_{seed}.csv"


def write_trace(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective", "m0"])
        for k, (F, m0) in enumerate(zip(trace.objective_history, trace.m0_history)):
            w.writerow([k, repr(float(F)), int(m0)])


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["objective"]) for r in rows]), np.array([int(r["m0"]) for r in rows]))


def _run_task(args):
    return run_single(*args)


def _tasks(cfg, trace_dir):
    tasks = []
    for r in range(cfg.runs):
        seed = cfg.seed + r
        for nu in cfg.nu:
            for method in cfg.methods:
                if method == "krrn":
                    tasks.append((cfg, method, 0, nu, seed, trace_dir))
                    continue
                for M in cfg.m_values:
                    tasks.append((cfg, method, M, nu, seed, trace_dir))
    # krrn does not depend on nu
    seen, unique = set(), []
    for t in tasks:
        key = (t[1], t[2], t[4]) if t[1] == "krrn" else (t[1], t[2], t[3], t[4])
        if key not in seen:
            seen.add(key)
            unique.append(t)
    return unique


def _record_key(rec):
    return (METHODS.index(rec["method"]), rec["M"], rec["nu"], rec["seed"])


def aggregate(records):
    """Mean and sample std (ddof=1, 0 for a single run) per method x M x nu."""
    groups = {}
    for rec in records:
        if rec["status"] != "ok":
            continue
        groups.setdefault((rec["method"], rec["M"], rec["nu"], rec["lam"]), []).append(rec)
    rows = []
    for (method, M, nu, lam), recs in sorted(groups.items(), key=lambda kv: (METHODS.index(kv[0][0]),) + kv[0][1:]):
        e = np.array([r["mse"] for r in recs])
        z = np.array([r["m0"] for r in recs], dtype=float)
        it = np.array([r["iterations"] for r in recs], dtype=float)
        ddof = 1 if len(recs) > 1 else 0
        rows.append(dict(method=method, M=M, nu=nu, lam=lam, runs=len(recs),
                         mse_mean=float(e.mean()), mse_std=float(e.std(ddof=ddof)),
                         m0_mean=float(z.mean()), m0_std=float(z.std(ddof=ddof)),
                         iterations_mean=float(it.mean())))
    return rows


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list
    aggregates: list

    def cell(self, method, M=None, nu=None):
        for row in self.aggregates:
            if row["method"] == method and (M is None or row["M"] == M) and (nu is None or row["nu"] == nu):
                return row
        return None


def _fmt(x):
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])


def read_records(path):
    conv = dict(seed=int, M=int, nu=float, lam=float, mse=float, m0=int, iterations=int, wall_time=float)
    with open(path, newline="") as fh:
        return [{k: conv.get(k, str)(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def render_table(report):
    """Method rows against M columns, ``mean +- std`` cells, plus an m0 row for SLKL."""
    out = io.StringIO()
    cfg = report.config
    for nu in cfg.nu:
        out.write(f"dataset={cfg.dataset} nu={nu:g} lambda={cfg.lam:g} runs={cfg.runs} sigma2={cfg.sigma2:g}\n")
        Ms = list(cfg.m_values)
        out.write(f"{'M':<6}" + "".join(f"{M:>24}" for M in Ms) + "\n")
        for method in cfg.methods:
            cells = []
            for M in Ms:
                row = report.cell(method, None if method == "krrn" else M, None if method == "krrn" else nu)
                if method == "krrn" and row is None and any(r["method"] == "krrn" for r in report.records):
                    cells.append("skipped")
                elif row is None:
                    cells.append("-")
                else:
                    cells.append(f"{row['mse_mean']:.4g} +- {row['mse_std']:.2g}")
            out.write(f"{method.upper():<6}" + "".join(f"{c:>24}" for c in cells) + "\n")
        if "slkl" in cfg.methods:
            cells = []
            for M in Ms:
                row = report.cell("slkl", M, nu)
                cells.append("-" if row is None else f"{row['m0_mean']:.1f}")
            out.write(f"{'m0':<6}" + "".join(f"{c:>24}" for c in cells) + "\n")
        out.write("\n")
    return out.getvalue()


def run_experiment(cfg):
    """Execute every (run, method, M, nu) cell and write the report files.

    Layout under ``cfg.outdir``: ``summary.csv`` (aggregates),
    ``records.csv`` (one row per run), ``runs/slkl_<M>_<seed>.csv`` (traces)
    and ``report.txt``.
    """
    cfg.validate()
    trace_dir = os.path.join(cfg.outdir, "runs")
    os.makedirs(trace_dir, exist_ok=True)
    tasks = _tasks(cfg, trace_dir)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]
    records.sort(key=_record_key)
    report = ExperimentReport(cfg, records, aggregate(records))
    _write_csv(os.path.join(cfg.outdir, "records.csv"), RECORD_FIELDS, records)
    _write_csv(os.path.join(cfg.outdir, "summary.csv"), SUMMARY_FIELDS, report.aggregates)
    with open(os.path.join(cfg.outdir, "report.txt"), "w") as fh:
        fh.write(render_table(report))
    return report


def sweep_m0(cfg):
    """Mean final m0 of SLKL over the ``m_values`` x ``nu`` grid.

    Writes ``sweep.csv`` and the per-run records; returns
    ``(grid, notes)`` where ``grid[(M, nu)]`` is the mean m0 and ``notes``
    lists observed departures from "grows with M, shrinks with nu".
    """
    cfg = replace(cfg, methods=["slkl"])
    report = run_experiment(cfg)
    grid = {(row["M"], row["nu"]): row["m0_mean"] for row in report.aggregates}
    Ms, nus = sorted(cfg.m_values), sorted(cfg.nu)
    notes = []
    for nu in nus:
        vals = [grid[(M, nu)] for M in Ms]
        if any(b < a for a, b in zip(vals, vals[1:])):
            notes.append(f"nu={nu:g}: mean m0 not increasing in M: {vals}")
    for M in Ms:
        vals = [grid[(M, nu)] for nu in nus]
        if any(b > a for a, b in zip(vals, vals[1:])):
            notes.append(f"M={M}: mean m0 not decreasing in nu: {vals}")
    with open(os.path.join(cfg.outdir, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M"] + [f"nu={nu:g}" for nu in nus])
        for M in Ms:
            w.writerow([M] + [repr(grid[(M, nu)]) for nu in nus])
    return grid, notes
