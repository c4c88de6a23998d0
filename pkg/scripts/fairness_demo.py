"""Parity sweep: formula verdict and fast-path verdict around the measured TV."""
import random
from fractions import Fraction

from statel.catalog import GroupFairness, audit_fairness, build_fairness_model
from statel.classifiers import ClassificationData, Row


def dataset(rng, n=12):
    rows = []
    for i in range(n):
        g = "A" if i % 2 == 0 else "B"
        rows.append(Row((Fraction(i),), rng.choice("pn"), rng.choice("pn"), frozenset({g})))
    return ClassificationData(rows)


def main(seed=3):
    rng = random.Random(seed)
    data = dataset(rng)
    first = None
    print(f"{'epsilon':>9} {'formula':>8} {'fast':>6} {'tv':>6}")
    for eps in [Fraction(n, 12) for n in range(0, 7)]:
        kind = GroupFairness("A", "B", eps, "w_d")
        a = audit_fairness(build_fairness_model({"w_d": data}, kind), kind)
        tv = a.fast_path.pairs[0]["value"] if a.fast_path.pairs else "-"
        first = first or tv
        print(f"{str(eps):>9} {str(a.semantic_verdict):>8} {str(a.fast_path.verdict):>6} {tv:>6}")
    print(f"parity holds exactly from epsilon = {first}")


if __name__ == "__main__":
    main()
