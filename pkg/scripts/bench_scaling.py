"""Training-step timing against qubits and blocks, with the two summary fits.

    python scripts/bench_scaling.py --out results/bench
"""
import argparse
import sys

from qcredit import experiments
from qcredit.cli import _int_list


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True)
    p.add_argument("--qubits", type=_int_list, default=list(range(8, 15)))
    p.add_argument("--blocks", type=_int_list, default=list(range(1, 7)))
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--diff-method", default="adjoint", choices=["adjoint", "parameter-shift"])
    args = p.parse_args(argv)

    res = experiments.run_bench(args.qubits, args.blocks, args.reps, diff_method=args.diff_method)
    experiments.write_bench(res, args.out)
    print(f"{'qubits':>6} {'blocks':>6} {'step s':>10} {'epoch s':>10} {'embed s':>10}")
    for r in res.records:
        print(f"{r.n_qubits:>6} {r.n_blocks:>6} {r.seconds_per_training_step:>10.5f} "
              f"{r.seconds_per_epoch:>10.5f} {r.embedding_seconds:>10.6f}")
    print(f"\nblocks fit: slope {res.blocks_fit['slope']:.5f} s/block, R^2 {res.blocks_fit['r2']:.4f}")
    for row in res.qubit_ratios:
        print(f"{row['from']} -> {row['to']} qubits: x{row['ratio']:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
