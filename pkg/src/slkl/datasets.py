"""Synthetic sinc data, delimited-file loading, splitting and standardization."""
from dataclasses import dataclass
import os

import numpy as np

from .kernel import Dataset


@dataclass(frozen=True)
class SplitSpec:
    n_train: int
    n_test: int
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError(f"need n_train >= 1 and n_test >= 0, got {self.n_train}, {self.n_test}")


def sinc_target(X):
    """``sin(r)/r`` with ``r = ||x||``, equal to 1 at the origin."""
    r = np.linalg.norm(np.atleast_2d(X), axis=1)
    return np.sinc(r / np.pi)


def gen_sinc(n_train=1000, n_test=1000, snr_db=10.0, seed=0):
    """Noisy training set and clean test set for the 2-D cardinal sine.

    Inputs are uniform on [-5, 5]^2. The train noise is Gaussian with
    variance ``mean(t^2) / 10^(snr_db/10)`` where ``t`` are the clean train
    targets. Train inputs, train noise and test inputs use separate streams;
    the test set is None when ``n_test`` is 0.
    """
    if n_train < 1 or n_test < 0:
        raise ValueError("need n_train >= 1 and n_test >= 0")
    s_train, s_noise, s_test = np.random.SeedSequence(int(seed)).spawn(3)
    X = np.random.default_rng(s_train).uniform(-5.0, 5.0, size=(n_train, 2))
    clean = sinc_target(X)
    noise_var = np.mean(clean ** 2) / 10.0 ** (snr_db / 10.0)
    y = clean + np.random.default_rng(s_noise).normal(0.0, np.sqrt(noise_var), size=n_train)
    Xt = np.random.default_rng(s_test).uniform(-5.0, 5.0, size=(n_test, 2))
    test = Dataset(Xt, sinc_target(Xt), "sinc-test") if n_test else None
    return Dataset(X, y, "sinc-train"), test


def load_delimited(path, target_column=-1, delimiter=",", header=False, categorical=()):
    """Read a numeric table, one example per row.

    ``delimiter=None`` splits on runs of whitespace. Columns listed in
    ``categorical`` are one-hot encoded (levels in sorted order) and placed
    first; the remaining columns keep their order. Negative column numbers
    count from the end.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such data file: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            if not line.strip():
                continue
            fields = line.strip().split(delimiter) if delimiter else line.split()
            rows.append((lineno, [f.strip() for f in fields]))
    if not rows:
        raise ValueError(f"{path}: no data rows")

    width = len(rows[0][1])
    tcol = target_column % width
    cats = sorted({c % width for c in categorical})
    if tcol in cats:
        raise ValueError("the target column cannot be categorical")
    levels = {c: sorted({r[1][c] for r in rows}) for c in cats}
    numeric_cols = [c for c in range(width) if c != tcol and c not in cats]

    feats, targets = [], []
    for lineno, fields in rows:
        if len(fields) != width:
            raise ValueError(f"{path}: row {lineno} has {len(fields)} fields, expected {width}")
        vals = []
        for c in cats:
            vals.extend(1.0 if fields[c] == lev else 0.0 for lev in levels[c])
        for c in numeric_cols + [tcol]:
            try:
                vals.append(float(fields[c]))
            except ValueError:
                raise ValueError(f"{path}: row {lineno}, column {c + 1}: "
                                 f"cannot parse {fields[c]!r} as a number") from None
        feats.append(vals[:-1])
        targets.append(vals[-1])
    return Dataset(np.array(feats), np.array(targets), os.path.basename(path))


def load_abalone(path):
    """UCI abalone: sex one-hot encoded (3 columns) plus 7 measurements, rings as target."""
    data = load_delimited(path, target_column=-1, delimiter=",", categorical=(0,))
    data.name = "abalone"
    return data


def train_test_split(data, split):
    """Seeded shuffle, then the first ``n_train`` rows train and the next ``n_test`` test."""
    if split.n_train + split.n_test > data.n:
        raise ValueError(f"split {split.n_train}+{split.n_test} exceeds {data.n} rows")
    perm = np.random.default_rng(np.random.SeedSequence(int(split.seed))).permutation(data.n)
    tr = perm[:split.n_train]
    te = perm[split.n_train:split.n_train + split.n_test]
    return data.subset(tr, f"{data.name}-train"), data.subset(te, f"{data.name}-test")


def standardize(train, others=()):
    """Center and scale every feature with the train statistics.

    Constant train features (std below 1e-12 relative to the mean) are
    centered only. Returns
    ``(train, [others...], mean, std)`` where ``std`` holds the scale used.
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    # a constant column can leave a rounding-level std; treat it as constant
    scale = np.where(std > 1e-12 * np.maximum(np.abs(mean), 1.0), std, 1.0)

    def apply(ds):
        return Dataset((ds.features - mean) / scale, ds.targets.copy(), ds.name)

    return apply(train), [apply(ds) for ds in others], mean, scale
