"""Robustness of a nearest-centroid classifier on a small 2-D grid.

Perturbed datasets come from ``statel perturb``; each (k, epsilon) cell gets its
own model with a W-infinity (L-inf) accessibility relation on the inputs.  The
table shows, per label, the largest recall lower bound that is known at the
real world.
"""
import argparse
import contextlib
import io
import tempfile
import time
from fractions import Fraction
from pathlib import Path

from statel.catalog import ConfusionKind, confusion_formula, measured_probability
from statel.classifiers import LabelMap, build_classification_model, read_dataset_csv
from statel.cli import main as statel
from statel.divergence import Divergence, DivergenceSpec, GroundMetric
from statel.formula import IntervalSet, Know
from statel.semantics import Evaluator

CENTROIDS = {"a": (0, 0), "b": (2, 2), "c": (0, 2)}
BOUNDS = [Fraction(n, 3) for n in range(3, -1, -1)]


def nearest(v):
    return min(sorted(CENTROIDS), key=lambda lab: sum((p - q) ** 2 for p, q in zip(v, CENTROIDS[lab])))


def truth(v):
    return "a" if v[1] == 0 else ("c" if v[0] == 0 else "b")


def build(base, k, eps, work):
    out = work / f"k{k}_e{eps}"
    argv = ["perturb", "--data", str(base), "--metric", "linf", "--epsilon", str(eps),
            "-k", str(k), "--grid", "0:2", "--out-dir", str(out)]
    with contextlib.redirect_stdout(io.StringIO()):
        code = statel(argv)
    if code != 0:
        raise SystemExit("perturb failed")
    files = sorted(out.glob("*.csv"))
    datasets = {"w_re" if i == 0 else f"w{i}": read_dataset_csv(p) for i, p in enumerate(files)}
    spec = DivergenceSpec("x", Divergence("winf", GroundMetric("linf")), Fraction(eps))
    return build_classification_model(datasets, LabelMap(nearest), LabelMap(truth, "H"),
                                      relations={"a": spec}, real_world="w_re",
                                      labels=sorted(CENTROIDS))


def known_recall(cm, label):
    m = cm.model
    ev, w = Evaluator(m), m.world("w_re")
    for lo in BOUNDS:
        if ev.eval(w, Know("a", confusion_formula(ConfusionKind.RECALL, label, IntervalSet.closed(lo, 1)))):
            return lo
    return None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-k", type=int, default=2)
    ap.add_argument("--epsilons", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        base = work / "base.csv"
        base.write_text("x_0,x_1\n0,0\n2,1\n0,2\n")
        print(f"{'k':>2} {'eps':>4} {'worlds':>7} " + " ".join(f"{lab:>12}" for lab in sorted(CENTROIDS))
              + f" {'secs':>6}")
        for k in range(args.max_k + 1):
            for eps in args.epsilons:
                t0 = time.perf_counter()
                cm = build(base, k, eps, work)
                w = cm.model.world("w_re")
                cells = []
                for lab in sorted(CENTROIDS):
                    plain = measured_probability(cm.model, w, confusion_formula(
                        ConfusionKind.RECALL, lab, IntervalSet.closed(0, 1)))
                    kn = known_recall(cm, lab)
                    cells.append(f"{str(plain):>5}/{str(kn):>6}")
                print(f"{k:>2} {eps:>4} {len(cm.model.worlds):>7} " + " ".join(cells)
                      + f" {time.perf_counter() - t0:>6.2f}")
    print("cells: recall at w_re / largest known lower bound among 1, 2/3, 1/3, 0")
    print("None: some reachable dataset has no row of that true label, so recall is undefined there")


if __name__ == "__main__":
    main()
