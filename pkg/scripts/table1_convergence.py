"""Grid-refinement table for scenario 1.

    python scripts/table1_convergence.py --levels 1 2 3 --reference 4 -o results/convergence

The reference level dominates the cost (about 20 minutes for m = 4 on one core).
"""

import argparse
import logging

from hjavoid.runs import format_table, run_convergence
from hjavoid.scenarios import builtin_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="scenario1")
    ap.add_argument("--levels", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--reference", type=int, default=4)
    ap.add_argument("-o", "--output", default="results/convergence")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    rows = run_convergence(builtin_scenario(args.scenario), args.levels, args.reference, args.output,
                           progress=logging.info)
    print(format_table(rows))


if __name__ == "__main__":
    main()
