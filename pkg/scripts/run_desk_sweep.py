"""Desk-scale qubit x block sweep with CC reference rows.

    python scripts/run_desk_sweep.py --out results/desk_sweep
    python scripts/run_desk_sweep.py --out results/quick --epochs 100 --blocks 1,2,3 --n-pos 24 --n-neg 96
"""
import argparse
import sys
from dataclasses import replace
from pathlib import Path

from qcredit import data, experiments
from qcredit.cli import _int_list
from qcredit.training import TrainConfig


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True)
    p.add_argument("--qubits", type=_int_list, default=list(experiments.DESK_QUBITS))
    p.add_argument("--blocks", type=_int_list, default=list(experiments.DESK_BLOCKS))
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--epochs", type=int, default=350)
    p.add_argument("--cc-epochs", type=_int_list, default=list(experiments.CC_EPOCH_BUDGETS))
    p.add_argument("--n-pos", type=int, default=246)
    p.add_argument("--n-neg", type=int, default=2000)
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    args = p.parse_args(argv)

    ds = data.prepare(data.generate(data.GeneratorSpec(args.n_pos, args.n_neg, signal_strength=args.signal,
                                                       seed=args.seed)))
    base = replace(TrainConfig(), epochs=args.epochs, seed=args.seed)
    spec = experiments.SweepSpec(args.qubits, args.blocks, args.runs, base, Path(args.out), args.cc_epochs)

    def progress(c):
        print(f"{c.model_kind} q={c.n_qubits} b={c.n_blocks} epochs={c.epochs} "
              f"mean AUC {c.mean_test_auc:.4f} (std {c.std_test_auc:.4f})", flush=True)

    result = experiments.run_sweep(spec, ds, progress)
    blocks = spec.blocks
    print("\nqubits " + " ".join(f"  B={b} " for b in blocks))
    for q in spec.qubits:
        print(f"{q:>6} " + " ".join(f"{result.matrix()[q, b]:.4f}" for b in blocks))
    for c in result.baselines:
        print(f"CC {c.epochs} epochs: {c.mean_test_auc:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
