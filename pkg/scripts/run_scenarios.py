"""Solve every built-in scenario, reconstruct where possible and report timings.

    python scripts/run_scenarios.py -o results/scenarios [--only scenario2a scenario2b]
"""

import argparse
import logging
import time
from pathlib import Path

from hjavoid.runs import count_components, run_reconstruct, run_solve
from hjavoid.scenarios import builtin_names, builtin_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--output", default="results/scenarios")
    ap.add_argument("--only", nargs="*", default=None)
    ap.add_argument("--no-reconstruct", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    for name in args.only or builtin_names():
        cfg = builtin_scenario(name)
        out = Path(args.output) / name
        t0 = time.perf_counter()
        res = run_solve(cfg, out)
        solve_s = time.perf_counter() - t0
        sl = res.slice_at(res.evolution.final, 0.0, cfg.vehicle.initial_state[3])
        line = f"{name}: solve {solve_s:.0f} s, final slice components {count_components(sl <= 0)}"
        if not args.no_reconstruct:
            t0 = time.perf_counter()
            rec = run_reconstruct(cfg, out)
            tr = rec.trajectory
            line += f"; reconstruct {tr.reason} in {len(tr.steps) - 1} steps ({time.perf_counter() - t0:.0f} s)"
        print(line, flush=True)


if __name__ == "__main__":
    main()
