"""Compare simplified-model predicates with Nash enumeration on random scenarios.

    python scripts/simplified_sweep.py --n 500 --seed 1
"""

import argparse
import collections
import random

from focil_tfm.analysis import random_simplified, verify_simplified_by_enumeration
from focil_tfm.equilibrium import Verdict


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    ns = ap.parse_args()

    rng = random.Random(ns.seed)
    counts = collections.Counter()
    for i in range(ns.n):
        sc = random_simplified(rng, conditional=i % 2 == 0)
        rep = verify_simplified_by_enumeration(sc)
        for name, row in rep.details["predicates"].items():
            if row["applicable"]:
                counts[(name, row["predicate"], row["enumeration"])] += 1
        if rep.verdict is not Verdict.HOLDS:
            print(f"scenario {i}: mismatches {rep.details['mismatches']}")
            counts["mismatch"] += 1
    print(f"{'predicate':>9} {'value':>6} {'enumeration':>12} {'count':>6}")
    for key, n in sorted(counts.items(), key=str):
        if key == "mismatch":
            continue
        name, pred, enum_ = key
        print(f"{name:>9} {str(pred):>6} {str(enum_):>12} {n:>6}")
    print(f"mismatches: {counts['mismatch']}")


if __name__ == "__main__":
    main()
