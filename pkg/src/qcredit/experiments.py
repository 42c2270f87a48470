"""Experiment drivers: qubit/block sweeps, FH-vs-CC comparison, timing
benchmarks and ROC export. Every file written here starts with a ``#`` line
holding the JSON configuration that produced it."""
from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import ansatz, qsim
from . import model as M
from .ansatz import AnsatzConfig
from .data import Dataset
from .errors import ConfigError
from .metrics import roc_curve, write_roc_csv
from .training import RunReport, TrainConfig, repeat_runs, run_seeds, train_step

FULL_QUBITS = tuple(range(6, 19, 2))
FULL_BLOCKS = tuple(range(1, 11))
DESK_QUBITS = (6, 8, 10, 12)
DESK_BLOCKS = (1, 2, 3, 4)
CC_EPOCH_BUDGETS = (350, 3500)


def _comment(fh, payload: dict) -> None:
    fh.write("# " + json.dumps(payload, sort_keys=True, default=str) + "\n")


# --- run outputs -------------------------------------------------------------


def write_run_outputs(report: RunReport, out_dir, prefix: str = "") -> dict[str, Path]:
    """report JSON, per-epoch curves CSV, test-score CSV and model checkpoint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = {"config": report.config, "seed": report.seed}
    paths = {
        "report": out / f"{prefix}report.json",
        "curves": out / f"{prefix}curves.csv",
        "scores": out / f"{prefix}scores.csv",
        "checkpoint": out / f"{prefix}model.npz",
    }
    paths["report"].write_text(report.to_json())
    with open(paths["curves"], "w", newline="") as fh:
        _comment(fh, header)
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_loss", "train_auc", "val_auc", "epoch_seconds", "step_seconds"])
        for i in range(len(report.train_loss)):
            w.writerow([i, report.train_loss[i], report.val_loss[i], report.train_auc[i],
                        report.val_auc[i], report.epoch_seconds[i], report.step_seconds[i]])
    write_scores_csv(report.test_scores, report.test_labels, paths["scores"], header)
    if report.model is not None:
        M.save_checkpoint(report.model, paths["checkpoint"], seed=report.seed, config=report.config)
    else:
        del paths["checkpoint"]
    return paths


def write_scores_csv(scores, labels, path, header: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header is not None:
            _comment(fh, header)
        w = csv.writer(fh)
        w.writerow(["row", "label", "score"])
        for i, (y, s) in enumerate(zip(labels, scores)):
            w.writerow([i, int(y), repr(float(s))])


def read_scores(path):
    """Scores and labels from a score CSV or a report JSON."""
    path = Path(path)
    if path.suffix == ".json":
        d = json.loads(path.read_text())
        return np.asarray(d["test_scores"], dtype=float), np.asarray(d["test_labels"], dtype=int)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(ln for ln in fh if not ln.startswith("#")))
    if not rows or "score" not in rows[0] or "label" not in rows[0]:
        raise ConfigError(f"{path}: expected 'score' and 'label' columns")
    return (np.array([float(r["score"]) for r in rows]), np.array([int(float(r["label"])) for r in rows]))


def export_roc(source, out_path) -> Path:
    scores, labels = read_scores(source)
    curve = roc_curve(scores, labels)
    write_roc_csv(curve, out_path, json.dumps({"source": str(source)}))
    return Path(out_path)


# --- sweep -------------------------------------------------------------------


@dataclass
class SweepSpec:
    qubits: tuple = FULL_QUBITS
    blocks: tuple = FULL_BLOCKS
    runs_per_cell: int = 5
    base: TrainConfig = field(default_factory=TrainConfig)
    out_dir: Path | None = None
    cc_epochs: tuple = CC_EPOCH_BUDGETS
    cc_width: int | None = None  # defaults to the base config's qubit count

    def __post_init__(self):
        self.qubits = tuple(int(q) for q in self.qubits)
        self.blocks = tuple(int(b) for b in self.blocks)
        self.cc_epochs = tuple(int(e) for e in self.cc_epochs)
        if not self.qubits or not self.blocks:
            raise ConfigError("sweep ranges must be non-empty")
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell must be >= 1")

    def to_dict(self) -> dict:
        # out_dir is where results go, not what produces them; keep it out of provenance
        d = asdict(self)
        del d["out_dir"]
        return d


@dataclass
class CellResult:
    model_kind: str
    n_qubits: int
    n_blocks: int | None
    epochs: int
    mean_test_auc: float
    std_test_auc: float
    test_aucs: list[float]
    seeds: list[int]


@dataclass
class SweepResult:
    spec: dict
    cells: list[CellResult]
    baselines: list[CellResult]
    reports: dict = field(default_factory=dict, repr=False)

    def matrix(self):
        """mean AUC as a dict keyed by (n_qubits, n_blocks)."""
        return {(c.n_qubits, c.n_blocks): c.mean_test_auc for c in self.cells}

    def rows(self) -> list[dict]:
        return [asdict(c) for c in self.cells + self.baselines]


def _cell(config: TrainConfig, dataset: Dataset, runs: int):
    summary = repeat_runs(config, dataset, runs)
    a = config.ansatz
    cell = CellResult(
        config.model_kind, a.n_qubits, a.n_blocks if config.model_kind == "fh" else None,
        config.epochs, summary.mean_test_auc, summary.std_test_auc, summary.test_aucs,
        run_seeds(config.seed, runs),
    )
    return cell, summary.reports


def run_sweep(spec: SweepSpec, dataset: Dataset, progress=None) -> SweepResult:
    """Every (qubits, blocks) FH cell plus CC reference rows, on one dataset/split."""
    cells, baselines, reports = [], [], {}
    base = spec.base
    for q in spec.qubits:
        for b in spec.blocks:
            cfg = replace(base, model_kind="fh",
                          ansatz=replace(base.ansatz, n_qubits=q, n_blocks=b))
            cell, reps = _cell(cfg, dataset, spec.runs_per_cell)
            cells.append(cell)
            reports[f"fh_q{q}_b{b}"] = reps
            if progress:
                progress(cell)
    width = spec.cc_width or base.ansatz.n_qubits
    for epochs in spec.cc_epochs:
        cfg = replace(base, model_kind="cc", epochs=epochs,
                      ansatz=replace(base.ansatz, n_qubits=width, n_blocks=1))
        cell, reps = _cell(cfg, dataset, spec.runs_per_cell)
        baselines.append(cell)
        reports[f"cc_q{width}_e{epochs}"] = reps
        if progress:
            progress(cell)
    result = SweepResult(spec.to_dict(), cells, baselines, reports)
    if spec.out_dir is not None:
        write_sweep(result, spec.out_dir, dataset)
    return result


def write_sweep(result: SweepResult, out_dir, dataset: Dataset | None = None) -> dict[str, Path]:
    out = Path(out_dir)
    (out / "cells").mkdir(parents=True, exist_ok=True)
    header = {"sweep": result.spec, "dataset": None if dataset is None else dataset.meta}
    cols = ["model_kind", "n_qubits", "n_blocks", "epochs", "runs", "mean_test_auc", "std_test_auc"]
    paths = {"cells": out / "sweep_cells.csv", "matrix": out / "sweep_matrix.csv"}
    with open(paths["cells"], "w", newline="") as fh:
        _comment(fh, header)
        w = csv.writer(fh)
        w.writerow(cols)
        for c in result.cells + result.baselines:
            w.writerow([c.model_kind, c.n_qubits, "" if c.n_blocks is None else c.n_blocks, c.epochs,
                        len(c.test_aucs), repr(c.mean_test_auc), repr(c.std_test_auc)])
    qubits = sorted({c.n_qubits for c in result.cells})
    blocks = sorted({c.n_blocks for c in result.cells})
    cells = {(c.n_qubits, c.n_blocks): c for c in result.cells}
    with open(paths["matrix"], "w", newline="") as fh:
        _comment(fh, header)
        w = csv.writer(fh)
        w.writerow(["n_qubits"] + [f"mean_b{b}" for b in blocks] + [f"std_b{b}" for b in blocks])
        for q in qubits:
            w.writerow([q] + [repr(cells[q, b].mean_test_auc) for b in blocks]
                       + [repr(cells[q, b].std_test_auc) for b in blocks])
        for c in result.baselines:
            w.writerow([f"cc_{c.epochs}_epochs"] + [repr(c.mean_test_auc)] * len(blocks)
                       + [repr(c.std_test_auc)] * len(blocks))
    for key, reps in result.reports.items():
        payload = {"sweep": result.spec, "runs": [r.to_dict() for r in reps]}
        (out / "cells" / f"{key}.json").write_text(json.dumps(payload))
    return paths


def compare_fh_cc(base: TrainConfig, dataset: Dataset, runs: int = 5, cc_epochs=CC_EPOCH_BUDGETS):
    """FH at the base budget against CC at each budget in ``cc_epochs``."""
    out = {"fh": repeat_runs(replace(base, model_kind="fh"), dataset, runs)}
    for e in cc_epochs:
        out[f"cc_{e}"] = repeat_runs(replace(base, model_kind="cc", epochs=e), dataset, runs)
    return out


# --- timing benchmark ----------------------------------------------------------


@dataclass
class TimingRecord:
    n_qubits: int
    n_blocks: int
    seconds_per_epoch: float
    seconds_per_training_step: float
    embedding_seconds: float
    repetitions: int
    inner_loops: int = 1
    raw_epoch: list[float] = field(default_factory=list)
    raw_step: list[float] = field(default_factory=list)
    raw_embedding: list[float] = field(default_factory=list)


@dataclass
class BenchResult:
    records: list[TimingRecord]
    blocks_fit: dict | None
    qubit_ratios: list[dict]
    settings: dict


def _timer_tick() -> float:
    return max(time.get_clock_info("perf_counter").resolution, 1e-9)


def _calibrate(fn, min_seconds: float) -> int:
    """Inner loop count so one sample lasts at least max(10 timer ticks, min_seconds)."""
    floor = max(10 * _timer_tick(), min_seconds)
    fn()  # warm-up: JIT compilation and caches stay out of the samples
    inner = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        if time.perf_counter() - t0 >= floor:
            return inner
        inner *= 2


def _sample(fn, inner: int) -> float:
    t0 = time.perf_counter()
    for _ in range(inner):
        fn()
    return (time.perf_counter() - t0) / inner


def _measure(fn, reps: int, min_seconds: float):
    """Median per-call time over ``reps`` samples of a calibrated inner loop."""
    inner = _calibrate(fn, min_seconds)
    raw = [_sample(fn, inner) for _ in range(reps)]
    return statistics.median(raw), raw, inner


def _workloads(n_qubits, n_blocks, batch_size=16, epoch_rows=160, n_features=21, seed=0,
               diff_method="adjoint"):
    """The three timed callables for one configuration: step, epoch, embedding."""
    rng = np.random.default_rng(seed)
    model = M.build_fh(n_qubits, n_blocks, 1, rng, n_features=n_features)
    X = rng.standard_normal((epoch_rows, n_features))
    y = (rng.random(epoch_rows) < 0.2).astype(int)
    y[:2] = (0, 1)
    drop_rng = np.random.default_rng(seed + 1)
    xb, yb = X[:batch_size], y[:batch_size]

    # lr = 0 keeps the model fixed, so every sample times the same work
    def step():
        train_step(model, xb, yb, 0.0, drop_rng, diff_method)

    def epoch():
        for lo in range(0, epoch_rows, batch_size):
            train_step(model, X[lo:lo + batch_size], y[lo:lo + batch_size], 0.0, drop_rng, diff_method)

    angles = np.abs(rng.standard_normal((batch_size, n_qubits)))
    rx = qsim.rx_matrix(angles.T)

    def embed():
        amps = qsim.zero_states(batch_size, n_qubits)
        for _ in range(n_blocks):
            for q in range(n_qubits):
                qsim.apply_1q(amps, rx[q], q)

    return {"step": step, "epoch": epoch, "embed": embed}


def time_configurations(configs, reps=3, min_seconds=0.2, **kw) -> list[TimingRecord]:
    """Time several (n_qubits, n_blocks) configurations.

    Samples are taken round-robin: repetition r of every configuration runs
    before repetition r + 1 of any, so slow drift in machine load lands on all
    configurations alike instead of skewing whichever happened to run during it.
    """
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    jobs = [(c, _workloads(*c, **kw)) for c in configs]
    inner = {(i, k): _calibrate(fn, min_seconds) for i, (_, w) in enumerate(jobs) for k, fn in w.items()}
    raw = {key: [] for key in inner}
    for _ in range(reps):
        for i, (_, w) in enumerate(jobs):
            for k, fn in w.items():
                raw[i, k].append(_sample(fn, inner[i, k]))
    out = []
    for i, ((q, b), _) in enumerate(jobs):
        med = {k: statistics.median(raw[i, k]) for k in ("step", "epoch", "embed")}
        out.append(TimingRecord(q, b, med["epoch"], med["step"], med["embed"], reps, inner[i, "step"],
                                raw[i, "epoch"], raw[i, "step"], raw[i, "embed"]))
    return out


def time_configuration(n_qubits, n_blocks, reps=3, min_seconds=0.2, **kw) -> TimingRecord:
    return time_configurations([(n_qubits, n_blocks)], reps, min_seconds, **kw)[0]


def linear_fit(x, y) -> dict:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def qubit_ratio_table(records: list[TimingRecord], key="seconds_per_training_step") -> list[dict]:
    recs = sorted(records, key=lambda r: r.n_qubits)
    out = []
    for a, b in zip(recs, recs[1:]):
        ratio = getattr(b, key) / getattr(a, key)
        out.append({"from": a.n_qubits, "to": b.n_qubits, "ratio": ratio,
                    "per_qubit_ratio": ratio ** (1.0 / (b.n_qubits - a.n_qubits))})
    return out


def run_bench(qubits=(8, 9, 10, 11, 12, 13, 14), blocks=(1, 2, 3, 4, 5, 6), reps=3,
              fixed_qubits=8, fixed_blocks=1, **kw) -> BenchResult:
    """Qubit scan at ``fixed_blocks`` and block scan at ``fixed_qubits``."""
    configs = [(q, fixed_blocks) for q in qubits] + [(fixed_qubits, b) for b in blocks]
    records = time_configurations(configs, reps, **kw)
    q_records, b_records = records[:len(qubits)], records[len(qubits):]
    fit = None
    if len(b_records) >= 2:
        fit = linear_fit([r.n_blocks for r in b_records], [r.seconds_per_training_step for r in b_records])
    settings = dict(kw, qubits=list(qubits), blocks=list(blocks), reps=reps,
                    fixed_qubits=fixed_qubits, fixed_blocks=fixed_blocks)
    return BenchResult(q_records + b_records, fit, qubit_ratio_table(q_records), settings)


def write_bench(result: BenchResult, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"timings": out / "timings.csv", "summary": out / "timing_summary.json"}
    with open(paths["timings"], "w", newline="") as fh:
        _comment(fh, result.settings)
        w = csv.writer(fh)
        w.writerow(["n_qubits", "n_blocks", "seconds_per_epoch", "seconds_per_training_step",
                    "embedding_seconds", "repetitions", "inner_loops", "raw_step", "raw_epoch", "raw_embedding"])
        for r in result.records:
            w.writerow([r.n_qubits, r.n_blocks, r.seconds_per_epoch, r.seconds_per_training_step,
                        r.embedding_seconds, r.repetitions, r.inner_loops,
                        ";".join(map(repr, r.raw_step)), ";".join(map(repr, r.raw_epoch)),
                        ";".join(map(repr, r.raw_embedding))])
    paths["summary"].write_text(json.dumps(
        {"settings": result.settings, "blocks_fit": result.blocks_fit, "qubit_ratios": result.qubit_ratios},
        indent=1))
    return paths


def gate_counts(cfg: AnsatzConfig) -> dict[str, int]:
    ops = ansatz.program(cfg)
    counts = {"rx": 0, "rot": 0, "cnot": 0}
    for op, _, _ in ops:
        counts[op] += 1
    counts["total"] = len(ops)
    return counts
