"""FH against the classical counterpart at both CC epoch budgets; writes a ROC CSV per model.

    python scripts/compare_fh_cc.py --out results/compare --signal 1.0
"""
import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from qcredit import data, experiments
from qcredit.ansatz import AnsatzConfig
from qcredit.cli import _int_list
from qcredit.metrics import roc_curve, write_roc_csv
from qcredit.training import TrainConfig


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True)
    p.add_argument("--qubits", type=int, default=6)
    p.add_argument("--blocks", type=int, default=1)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--cc-epochs", type=_int_list, default=list(experiments.CC_EPOCH_BUDGETS))
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = data.prepare(data.generate(data.GeneratorSpec(signal_strength=args.signal, seed=args.seed)))
    base = replace(TrainConfig(), seed=args.seed, ansatz=AnsatzConfig(args.qubits, args.blocks))
    results = experiments.compare_fh_cc(base, ds, args.runs, args.cc_epochs)
    summary = {}
    for name, s in results.items():
        best = s.reports[int(np.argmax(s.test_aucs))]
        header = json.dumps({"model": name, "config": best.config, "seed": best.seed})
        write_roc_csv(roc_curve(best.test_scores, best.test_labels), out / f"roc_{name}.csv", header)
        summary[name] = {"mean_test_auc": s.mean_test_auc, "std_test_auc": s.std_test_auc,
                         "test_aucs": s.test_aucs}
        print(f"{name:>10}: {s.mean_test_auc:.4f} +- {s.std_test_auc:.4f}")
    (out / "comparison.json").write_text(json.dumps({"base": base.to_dict(), "results": summary}, indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
