"""Command line: gen-data, train, sweep, bench, roc.

Settings are resolved as CLI flag > ``--config`` file > built-in defaults.
The config file is flat ``key = value`` text; ``#`` starts a comment.

Exit codes: 0 success, 1 usage error, 2 runtime abort.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import data, experiments
from .ansatz import AnsatzConfig
from .errors import ConfigError
from .training import TrainConfig, train

log = logging.getLogger("qcredit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    """'6,8,10' or '6-12' or '6-12:2'."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            rng, _, step = part.partition(":")
            lo, hi = rng.split("-")
            out.extend(range(int(lo), int(hi) + 1, int(step or 1)))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError(f"empty list {text!r}")
    return out


# key -> (type, default)
TRAIN_KEYS = {
    "model": (str, "fh"),
    "qubits": (int, 6),
    "blocks": (int, 1),
    "layers": (int, 1),
    "ring": (lambda s: str(s).lower() in ("1", "true", "yes"), True),
    "epochs": (int, None),  # None: 350 for both models
    "batch_size": (int, 16),
    "lr": (float, 0.001),
    "dropout": (float, 0.1),
    "seed": (int, 0),
    "diff_method": (str, "adjoint"),
    "val_frac": (float, 0.10),
    "test_frac": (float, 0.15),
    "split_seed": (int, 0),
}
SWEEP_KEYS = {
    "sweep_qubits": (_int_list, list(experiments.DESK_QUBITS)),
    "sweep_blocks": (_int_list, list(experiments.DESK_BLOCKS)),
    "runs": (int, 5),
    "cc_epochs": (_int_list, list(experiments.CC_EPOCH_BUDGETS)),
}


def read_config_file(path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def resolve(args, keys: dict) -> dict:
    """Merge defaults, config file and CLI flags for ``keys``."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_values) - set(TRAIN_KEYS) - set(SWEEP_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s): {sorted(unknown)}")
    out = {}
    for k, (typ, default) in keys.items():
        value = default
        if k in file_values:
            try:
                value = typ(file_values[k])
            except ValueError as exc:
                raise UsageError(f"config key {k}: {exc}") from exc
        cli = getattr(args, k, None)
        if cli is not None:
            value = cli
        out[k] = value
    return out


def train_config(s: dict) -> TrainConfig:
    return TrainConfig(
        epochs=s["epochs"] or 350,
        batch_size=s["batch_size"],
        lr=s["lr"],
        dropout=s["dropout"],
        seed=s["seed"],
        model_kind=s["model"],
        ansatz=AnsatzConfig(s["qubits"], s["blocks"], s["layers"], s["ring"]),
        diff_method=s["diff_method"],
    )


def _load_prepared(path, s) -> data.Dataset:
    return data.prepare(data.load_csv(path), s["val_frac"], s["test_frac"], s["split_seed"])


def _add_train_flags(p):
    p.add_argument("--config", help="flat key = value settings file")
    p.add_argument("--model", choices=["fh", "cc"])
    p.add_argument("--qubits", type=int)
    p.add_argument("--blocks", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--open-chain", dest="ring", action="store_const", const=False,
                   help="drop the wrap-around CNOT")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--diff-method", choices=["adjoint", "parameter-shift"])
    p.add_argument("--val-frac", type=float)
    p.add_argument("--test-frac", type=float)
    p.add_argument("--split-seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="python -m qcredit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a synthetic imbalanced dataset CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--n-pos", type=int, default=246)
    g.add_argument("--n-neg", type=int, default=2000)
    g.add_argument("--features", type=int, default=data.N_FEATURES)
    g.add_argument("--signal", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", help="train one model and write its report")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    _add_train_flags(t)

    s = sub.add_parser("sweep", help="qubit x block sweep with CC reference rows")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    _add_train_flags(s)
    s.add_argument("--sweep-qubits", type=_int_list)
    s.add_argument("--sweep-blocks", type=_int_list)
    s.add_argument("--runs", type=int)
    s.add_argument("--cc-epochs", type=_int_list)
    s.add_argument("--full-scale", action="store_true",
                   help="qubits 6-18 step 2, blocks 1-10 (multi-day on one machine)")

    b = sub.add_parser("bench", help="time training steps against qubits and blocks")
    b.add_argument("--out", required=True)
    b.add_argument("--qubits", type=_int_list, default=[8, 9, 10, 11, 12, 13, 14])
    b.add_argument("--blocks", type=_int_list, default=[1, 2, 3, 4, 5, 6])
    b.add_argument("--fixed-qubits", type=int, default=8)
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--diff-method", choices=["adjoint", "parameter-shift"], default="adjoint")
    b.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("roc", help="ROC points CSV from a report JSON or score CSV")
    r.add_argument("source")
    r.add_argument("--out", required=True)
    return parser


def cmd_gen_data(args) -> int:
    spec = data.GeneratorSpec(args.n_pos, args.n_neg, args.features, args.signal, args.seed)
    ds = data.generate(spec)
    data.write_csv(ds, args.out, comment={"command": "gen-data", "generator": ds.meta["generator"]})
    print(f"wrote {ds.n_rows} rows ({int(ds.labels.sum())} positive) to {args.out}")
    return 0


def cmd_train(args) -> int:
    s = resolve(args, TRAIN_KEYS)
    cfg = train_config(s)
    ds = _load_prepared(args.data, s)

    def progress(epoch, loss, val_auc):
        log.info("epoch %d  train_loss %.5f  val_auc %.4f", epoch, loss, val_auc)

    report = train(cfg, ds, progress=progress)
    paths = experiments.write_run_outputs(report, args.out)
    overrides = cfg.overrides()
    if overrides:
        print(f"non-default settings: {json.dumps(overrides)}")
    print(f"best val AUC {report.best_val_auc:.4f} at epoch {report.best_epoch}; "
          f"test AUC {report.test_auc:.4f}; report {paths['report']}")
    return 0


def cmd_sweep(args) -> int:
    s = resolve(args, {**TRAIN_KEYS, **SWEEP_KEYS})
    if args.full_scale:
        s["sweep_qubits"], s["sweep_blocks"] = list(experiments.FULL_QUBITS), list(experiments.FULL_BLOCKS)
    base = train_config(s)
    spec = experiments.SweepSpec(s["sweep_qubits"], s["sweep_blocks"], s["runs"], base,
                                 Path(args.out), tuple(s["cc_epochs"]))
    ds = _load_prepared(args.data, s)

    def progress(cell):
        log.info("%s q=%s b=%s epochs=%d mean AUC %.4f", cell.model_kind, cell.n_qubits,
                 cell.n_blocks, cell.epochs, cell.mean_test_auc)

    result = experiments.run_sweep(spec, ds, progress)
    for c in result.cells + result.baselines:
        print(f"{c.model_kind} q={c.n_qubits} b={c.n_blocks} epochs={c.epochs}: "
              f"{c.mean_test_auc:.4f} +- {c.std_test_auc:.4f}")
    print(f"wrote {args.out}/sweep_cells.csv and sweep_matrix.csv")
    return 0


def cmd_bench(args) -> int:
    result = experiments.run_bench(args.qubits, args.blocks, args.reps, fixed_qubits=args.fixed_qubits,
                                   diff_method=args.diff_method, seed=args.seed)
    experiments.write_bench(result, args.out)
    if result.blocks_fit:
        print(f"step seconds vs blocks at {args.fixed_qubits} qubits: R^2 = {result.blocks_fit['r2']:.4f}")
    for row in result.qubit_ratios:
        print(f"qubits {row['from']}->{row['to']}: x{row['ratio']:.2f}")
    return 0


def cmd_roc(args) -> int:
    experiments.export_roc(args.source, args.out)
    print(f"wrote {args.out}")
    return 0


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "sweep": cmd_sweep,
            "bench": cmd_bench, "roc": cmd_roc}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qcredit: error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"qcredit: aborted: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
