"""Mini-batch SGD training with per-epoch validation and best-checkpoint
selection, plus seeded repeat runs."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import model as M
from .ansatz import AnsatzConfig
from .data import Dataset
from .errors import ConfigError, NumericalError, TrainingAborted
from .metrics import auc
from .nn import bce_loss, sgd_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 350
    batch_size: int = 16
    lr: float = 0.001
    dropout: float = 0.1
    seed: int = 0
    model_kind: str = "fh"
    ansatz: AnsatzConfig = field(default_factory=lambda: AnsatzConfig(6, 1, 1))
    diff_method: str = "adjoint"

    def __post_init__(self):
        if self.model_kind not in ("fh", "cc"):
            raise ConfigError(f"model_kind must be 'fh' or 'cc', got {self.model_kind!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if self.diff_method not in ("adjoint", "parameter-shift"):
            raise ConfigError(f"unknown diff_method {self.diff_method!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if isinstance(d.get("ansatz"), dict):
            d["ansatz"] = AnsatzConfig(**d["ansatz"])
        return cls(**d)

    def overrides(self) -> dict:
        """Fields that differ from the default settings."""
        base = TrainConfig()
        return {f.name: _plain(getattr(self, f.name)) for f in fields(self)
                if getattr(self, f.name) != getattr(base, f.name)}


def _plain(v):
    return asdict(v) if isinstance(v, AnsatzConfig) else v


@dataclass
class RunReport:
    config: dict
    seed: int
    train_loss: list[float]
    val_loss: list[float]
    train_auc: list[float]
    val_auc: list[float]
    best_val_auc: float
    best_epoch: int
    test_auc: float
    test_loss: float
    param_counts: dict
    epoch_seconds: list[float] = field(default_factory=list)
    step_seconds: list[float] = field(default_factory=list)
    test_scores: list[float] = field(default_factory=list, repr=False)
    test_labels: list[int] = field(default_factory=list, repr=False)
    model: object = field(default=None, repr=False, compare=False)

    TIMING_FIELDS = ("epoch_seconds", "step_seconds")

    def to_dict(self, timings: bool = True) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "model"}
        if not timings:
            for k in self.TIMING_FIELDS:
                d.pop(k)
        return d

    def results_dict(self) -> dict:
        """Everything except wall-clock timings: the part that is deterministic."""
        return self.to_dict(timings=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**{k: v for k, v in d.items() if k != "overrides"})

    def to_json(self) -> str:
        d = self.to_dict()
        d["overrides"] = TrainConfig.from_dict(self.config).overrides()
        return json.dumps(d, indent=1)


def build_model(config: TrainConfig, n_features: int, rng):
    a = config.ansatz
    if config.model_kind == "fh":
        return M.build_fh(a.n_qubits, a.n_blocks, a.layers_per_block, rng,
                          n_features=n_features, dropout=config.dropout, ring=a.ring)
    return M.build_cc(a.n_qubits, rng, n_features=n_features, dropout=config.dropout)


def evaluate(model, dataset: Dataset, split: str):
    """Mean BCE and AUC of EVAL-mode predictions on one split."""
    X, y = dataset.rows(split)
    p = M.predict(model, X)
    loss, _ = bce_loss(p, y)
    return float(loss.mean()), auc(p, y).value


def train_step(model, xb, yb, lr, rng, diff_method="adjoint", names=None) -> float:
    """One SGD update on a batch; returns the mean batch loss."""
    p, cache = M.forward(model, xb, training=True, rng=rng)
    loss, d_p = bce_loss(p, yb)
    if not np.isfinite(loss).all():
        raise TrainingAborted("non-finite loss")
    grads = M.backward(model, cache, d_p / xb.shape[0], diff_method=diff_method)
    current = M.tensors(model)
    for name in names or current:
        M.set_tensor(model, name, sgd_step(current[name], grads[name], lr, name))
    return float(loss.mean())


def _run_streams(seed: int):
    init, shuffle, dropout = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(init), np.random.default_rng(shuffle), np.random.default_rng(dropout))


def train(config: TrainConfig, dataset: Dataset, model=None, progress=None) -> RunReport:
    """Train for the full epoch budget and report the best-validation checkpoint.

    ``progress`` is called as ``progress(epoch, train_loss, val_auc)`` after
    every epoch if given.
    """
    if dataset.split is None or not dataset.standardized:
        raise ConfigError("train needs a split and standardized dataset (see data.prepare)")
    rng_init, rng_shuffle, rng_drop = _run_streams(config.seed)
    if model is None:
        model = build_model(config, dataset.n_features, rng_init)
    names = M.tensor_names(model)
    X_train, y_train = dataset.rows("train")
    n_train = X_train.shape[0]

    curves = {k: [] for k in ("train_loss", "val_loss", "train_auc", "val_auc")}
    epoch_seconds, step_seconds = [], []
    best_auc, best_epoch, best_model = -np.inf, -1, None

    for epoch in range(config.epochs):
        t_epoch = time.perf_counter()
        order = rng_shuffle.permutation(n_train)
        step_total = 0.0
        n_steps = 0
        for b, lo in enumerate(range(0, n_train, config.batch_size)):
            t_step = time.perf_counter()
            idx = order[lo:lo + config.batch_size]
            xb, yb = X_train[idx], y_train[idx]
            try:
                train_step(model, xb, yb, config.lr, rng_drop, config.diff_method, names)
            except (NumericalError, TrainingAborted) as exc:
                raise TrainingAborted(f"epoch {epoch}, batch {b}: {exc}", epoch, b) from exc
            step_total += time.perf_counter() - t_step
            n_steps += 1

        tr_loss, tr_auc = evaluate(model, dataset, "train")
        va_loss, va_auc = evaluate(model, dataset, "validation")
        if not (np.isfinite(tr_loss) and np.isfinite(va_loss)):
            raise TrainingAborted(f"non-finite evaluation loss after epoch {epoch}", epoch)
        for k, v in zip(curves, (tr_loss, va_loss, tr_auc, va_auc)):
            curves[k].append(v)
        if va_auc > best_auc:
            best_auc, best_epoch, best_model = va_auc, epoch, M.copy_model(model)
        epoch_seconds.append(time.perf_counter() - t_epoch)
        step_seconds.append(step_total / n_steps)
        if progress is not None:
            progress(epoch, tr_loss, va_auc)

    X_test, y_test = dataset.rows("test")
    test_scores = M.predict(best_model, X_test)
    te_loss, te_auc = evaluate(best_model, dataset, "test")
    return RunReport(
        config=config.to_dict(),
        seed=config.seed,
        best_val_auc=float(best_auc),
        best_epoch=best_epoch,
        test_auc=te_auc,
        test_loss=te_loss,
        param_counts=M.param_count(model),
        epoch_seconds=epoch_seconds,
        step_seconds=step_seconds,
        test_scores=test_scores.tolist(),
        test_labels=y_test.tolist(),
        model=best_model,
        **curves,
    )


def run_seeds(master_seed: int, n_runs: int) -> list[int]:
    """Per-run seeds derived deterministically from the master seed."""
    return [int(s) for s in np.random.SeedSequence(master_seed).generate_state(n_runs)]


@dataclass
class RepeatSummary:
    mean_test_auc: float
    std_test_auc: float
    reports: list[RunReport]

    @property
    def test_aucs(self) -> list[float]:
        return [r.test_auc for r in self.reports]


class RepeatAborted(TrainingAborted):
    def __init__(self, message, reports):
        super().__init__(message)
        self.reports = reports


def repeat_runs(config: TrainConfig, dataset: Dataset, n_runs: int = 5) -> RepeatSummary:
    """Train ``n_runs`` times with derived seeds; aggregate the test AUCs.

    The standard deviation is the population one (ddof=0).
    """
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    reports = []
    for seed in run_seeds(config.seed, n_runs):
        try:
            reports.append(train(replace(config, seed=seed), dataset))
        except TrainingAborted as exc:
            raise RepeatAborted(f"run with seed {seed} aborted: {exc}", reports) from exc
    aucs = np.array([r.test_auc for r in reports])
    return RepeatSummary(float(aucs.mean()), float(aucs.std()), reports)
