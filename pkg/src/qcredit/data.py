"""Datasets: CSV I/O, a synthetic imbalanced credit-style generator,
stratified splitting and train-only standardization.

CSV layout: comma separated, UTF-8, one header row, ``N_FEATURES`` numeric
feature columns followed by a ``label`` column holding 0 or 1. Lines starting
with ``#`` are comments (the generator writes its settings there).
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)

N_FEATURES = 21
STD_FLOOR = 1e-8
SPLITS = ("train", "validation", "test")


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, rows) -> np.ndarray:
        return (np.asarray(rows, dtype=float) - self.mean) / self.std


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: dict[str, np.ndarray] | None = None
    preprocessing: Standardizer | None = None
    standardized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ConfigError(
                f"features {self.features.shape} and labels {self.labels.shape} do not line up"
            )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def rows(self, name: str):
        """Features and labels of one split."""
        if self.split is None:
            raise ConfigError("dataset has not been split")
        idx = self.split[name]
        return self.features[idx], self.labels[idx]


@dataclass(frozen=True)
class GeneratorSpec:
    n_pos: int = 246
    n_neg: int = 2000
    n_features: int = N_FEATURES
    signal_strength: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_pos < 1 or self.n_neg < 1:
            raise ConfigError("n_pos and n_neg must both be >= 1")
        if self.n_features < 1:
            raise ConfigError("n_features must be >= 1")
        if self.signal_strength < 0:
            raise ConfigError("signal_strength must be >= 0")


def true_direction(spec: GeneratorSpec) -> np.ndarray:
    """The seeded unit-norm weight vector behind the latent logit."""
    rng = np.random.default_rng([spec.seed, 1])
    w = rng.standard_normal(spec.n_features)
    return w / np.linalg.norm(w)


def generate(spec: GeneratorSpec) -> Dataset:
    """Gaussian features; the ``n_pos`` rows with the highest noisy logit are class 1.

    logit = signal_strength * (w . x) + e, with e ~ N(0, 1).
    """
    n = spec.n_pos + spec.n_neg
    rng = np.random.default_rng([spec.seed, 0])
    X = rng.standard_normal((n, spec.n_features))
    noise = rng.standard_normal(n)
    logit = spec.signal_strength * (X @ true_direction(spec)) + noise
    order = np.argsort(-logit, kind="stable")
    y = np.zeros(n, dtype=int)
    y[order[: spec.n_pos]] = 1
    return Dataset(X, y, meta={"generator": asdict(spec)})


def load_csv(path, n_features: int = N_FEATURES) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ConfigError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "label" not in header:
        raise ConfigError(f"{path}: missing 'label' column")
    feat_cols = [i for i, h in enumerate(header) if h != "label"]
    if len(feat_cols) != n_features:
        raise ConfigError(f"{path}: expected {n_features} features, found {len(feat_cols)}")
    label_col = header.index("label")
    body = rows[1:]
    if not body:
        raise ConfigError(f"{path}: no data rows")
    X = np.empty((len(body), n_features))
    y = np.empty(len(body), dtype=int)
    bad = []
    for r, row in enumerate(body):
        line_no = r + 2  # 1-based, after the header
        if len(row) != len(header):
            raise ConfigError(f"{path}: row {line_no} has {len(row)} cells, expected {len(header)}")
        try:
            X[r] = [float(row[i]) for i in feat_cols]
            lab = float(row[label_col])
        except ValueError:
            bad.append(line_no)
            continue
        if lab not in (0.0, 1.0):
            raise ConfigError(f"{path}: row {line_no} has label {row[label_col]!r}; labels must be 0 or 1")
        y[r] = int(lab)
    if bad:
        raise ConfigError(f"{path}: non-numeric cells in row(s) {bad[:20]}")
    return Dataset(X, y, meta={"source": str(path)})


def write_csv(dataset: Dataset, path, comment: dict | None = None) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment is not None:
            fh.write("# " + json.dumps(comment, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(dataset.n_features)] + ["label"])
        for xrow, lab in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in xrow] + [int(lab)])
    return path


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _apportion(total: int, weights: list[float]) -> list[int]:
    """Integers summing to ``total`` proportional to ``weights`` (largest remainder)."""
    exact = [total * w / sum(weights) for w in weights]
    alloc = [math.floor(e) for e in exact]
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - alloc[i]), i))
    for i in order[:total - sum(alloc)]:
        alloc[i] += 1
    return alloc


def _lift_zeros(alloc: list[int], exact: list[float]) -> None:
    # give every part at least one row, taken from the most over-allocated part
    for i in range(len(alloc)):
        if alloc[i] == 0 and sum(alloc) >= len(alloc):
            donor = max((j for j in range(len(alloc)) if alloc[j] > 1), key=lambda j: alloc[j] - exact[j])
            alloc[donor] -= 1
            alloc[i] += 1


def split_counts(labels, val_frac: float = 0.10, test_frac: float = 0.15) -> dict[str, dict[int, int]]:
    """Rows per split and class.

    Split sizes are ``round(frac * n_rows)`` (halves round up) for validation
    and test, the rest is train. Positives are shared across the three splits
    by largest remainder and negatives fill the remainder, so every split holds
    each class to within one row of its proportional share.
    """
    if not (0 < val_frac < 1 and 0 < test_frac < 1 and val_frac + test_frac < 1):
        raise ConfigError(f"split fractions must lie in (0, 1) and sum below 1, got {val_frac}, {test_frac}")
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n = labels.size
    n_val, n_test = _round_half_up(val_frac * n), _round_half_up(test_frac * n)
    sizes = [n - n_val - n_test, n_val, n_test]
    names = ["train", "validation", "test"]
    if n == 0 or min(sizes) <= 0:
        raise ConfigError(f"{n} rows are too few for split fractions {val_frac}, {test_frac}")
    pos = _apportion(n_pos, sizes)
    _lift_zeros(pos, [n_pos * s / n for s in sizes])
    neg = [s - p for s, p in zip(sizes, pos)]
    if min(neg) == 0 and n - n_pos >= 3:
        neg_exact = [(n - n_pos) * s / n for s in sizes]
        _lift_zeros(neg, neg_exact)
        pos = [s - q for s, q in zip(sizes, neg)]
    counts = {name: {0: neg[k], 1: pos[k]} for k, name in enumerate(names)}
    for name, per_class in counts.items():
        for c, k in per_class.items():
            if k <= 0:
                raise ConfigError(f"split {name!r} would have no rows of class {c}")
    return counts


def split(dataset: Dataset, val_frac: float = 0.10, test_frac: float = 0.15, seed: int = 0) -> Dataset:
    """Stratified, seeded split into train/validation/test index sets."""
    counts = split_counts(dataset.labels, val_frac, test_frac)
    rng = np.random.default_rng(seed)
    parts = {name: [] for name in SPLITS}
    for c in (0, 1):
        idx = np.flatnonzero(dataset.labels == c)
        idx = idx[rng.permutation(idx.shape[0])]
        nv, nt = counts["validation"][c], counts["test"][c]
        parts["validation"].append(idx[:nv])
        parts["test"].append(idx[nv:nv + nt])
        parts["train"].append(idx[nv + nt:])
    split_idx = {name: np.sort(np.concatenate(v)) for name, v in parts.items()}
    meta = dict(dataset.meta, split={"val_frac": val_frac, "test_frac": test_frac, "seed": seed})
    return replace(dataset, split=split_idx, preprocessing=None, standardized=False, meta=meta)


def fit_standardize(dataset: Dataset) -> Standardizer:
    """Per-feature mean and std from the train rows only."""
    X, _ = dataset.rows("train")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    low = std < STD_FLOOR
    if low.any():
        log.warning("constant feature column(s) %s; std floored at %g", np.flatnonzero(low).tolist(), STD_FLOOR)
        std = np.where(low, STD_FLOOR, std)
    return Standardizer(mean, std)


def apply_standardize(state: Standardizer, rows) -> np.ndarray:
    return state.apply(rows)


def standardize(dataset: Dataset) -> Dataset:
    """Copy of a split dataset with every row z-scored by train statistics."""
    if dataset.standardized:
        return dataset
    state = fit_standardize(dataset)
    return replace(dataset, features=state.apply(dataset.features), preprocessing=state, standardized=True)


def prepare(dataset: Dataset, val_frac=0.10, test_frac=0.15, seed=0) -> Dataset:
    """Split then standardize."""
    return standardize(split(dataset, val_frac, test_frac, seed))
