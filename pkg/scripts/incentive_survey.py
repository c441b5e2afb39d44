"""Survey bribe caps over generated scenarios.

For each scenario with a target: MBBN and MCBN at the caps (every admissible
type assignment), and on conditional scenarios whether the producer cap
equals the empirical cap found by deviation search.

    python scripts/incentive_survey.py --start 0 --stop 200
"""

import argparse
import collections
import time

from focil_tfm.bribery import CM1, bribe_bp_terms
from focil_tfm.equilibrium import Verdict, check_mbbn, check_mcbn, check_mcbn_all_types, search_bp_deviations
from focil_tfm.scenario import generate_scenario


def survey(seed):
    sc = generate_scenario(seed)
    if sc.target is None:
        return None
    ctx = sc.context()
    row = {
        "seed": seed,
        "variant": (sc.tfm.value, "congested" if ctx.congested else "uncongested",
                    "unique" if sc.params.unique_sender else "multi",
                    "conditional" if sc.params.conditional else "unconditional"),
        "mbbn": check_mbbn(sc).verdict,
        "mcbn": check_mcbn_all_types(sc).verdict,
    }
    if sc.params.conditional:
        terms = bribe_bp_terms(ctx)
        row["bp_cap"] = terms.value
        row["bp_empirical"] = search_bp_deviations(sc).empirical_cap
        row["bp_binding"] = terms.binding
        bumped = sc.assignment.with_cm(ctx.target_order, CM1(sc.params.unit))
        row["cm_tight"] = check_mcbn(sc, bumped).verdict is Verdict.VIOLATED
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--start", type=int, default=0)
    ap.add_argument("--stop", type=int, default=100)
    ns = ap.parse_args()

    stats = collections.Counter()
    began = time.perf_counter()
    for seed in range(ns.start, ns.stop):
        row = survey(seed)
        if row is None:
            continue
        stats["scenarios"] += 1
        for prop in ("mbbn", "mcbn"):
            if row[prop] is not Verdict.HOLDS:
                stats[f"{prop} not holding"] += 1
                print(f"seed {seed}: {prop} {row[prop].value} {row['variant']}")
        if "bp_cap" in row:
            stats["conditional"] += 1
            if row["bp_cap"] != row["bp_empirical"]:
                stats["bp untight " + "/".join(row["bp_binding"])] += 1
                print(f"seed {seed}: producer cap {row['bp_cap']} vs empirical {row['bp_empirical']} {row['variant']}")
            if not row["cm_tight"]:
                stats["cm untight"] += 1
                print(f"seed {seed}: includer cap not tight")
    print(f"\n{time.perf_counter() - began:.0f}s")
    for key, n in sorted(stats.items()):
        print(f"{key}: {n}")


if __name__ == "__main__":
    main()
