"""Grid refinement study for Example 2: jump error and sup error against h.

Usage: python3 scripts/convergence_study.py [--scheme upwind|central]
"""
import argparse

import numpy as np

from cyldrift.cylinder import InfiniteOptions
from cyldrift.demos import example2_model, run_example2


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scheme", default="upwind", choices=["upwind", "central"])
    ap.add_argument("--levels", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    args = ap.parse_args()
    errs = []
    print(f"{'cells/unit':>10} {'jump err':>11} {'sup err':>11} {'delta-':>8} {'seconds':>8}")
    for n in args.levels:
        rep = run_example2(example2_model(), InfiniteOptions(k_sequence=(6, 8), cells_per_unit=n, scheme=args.scheme))
        errs.append((rep.jump_error, rep.sup_error))
        print(f"{n:10d} {rep.jump_error:11.3e} {rep.sup_error:11.3e} {rep.delta_minus:8.4f} {rep.seconds:8.3f}")
    e = np.array(errs)
    orders = np.log2(e[:-1] / e[1:])
    print("observed orders (jump, sup):")
    for n, o in zip(args.levels[1:], orders):
        print(f"{n:10d} {o[0]:8.3f} {o[1]:8.3f}")


if __name__ == "__main__":
    main()
