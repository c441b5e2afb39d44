"""Optimal committee share z for the Single TFM over a (c_t0, r, m) table.

    python scripts/z_sweep.py --r 1 --m 1 2 4 8
"""

import argparse
from fractions import Fraction

from focil_tfm.analysis import optimal_z, z_grid_maximum
from focil_tfm.core import render_money


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--r", type=Fraction, default=Fraction(1))
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--bids", type=Fraction, nargs="+",
                    default=[Fraction(k, 4) for k in (5, 6, 8, 12, 16, 24, 40)])
    ns = ap.parse_args()

    print(f"{'c_t0':>6} {'m':>3} {'z*':>8} {'objective':>10} {'grid max':>10}")
    for c in ns.bids:
        for m in ns.m:
            z = optimal_z(c, ns.r, m)
            _, best = z_grid_maximum(z)
            print(f"{render_money(c):>6} {m:>3} {render_money(z.z_star):>8} "
                  f"{render_money(z.objective):>10} {render_money(best):>10}")


if __name__ == "__main__":
    main()
