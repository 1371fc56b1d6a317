"""Classify a grid of constant far-field drifts and solve each truncated problem.

Usage: python3 scripts/regime_sweep.py [--values -1 0 1]
"""
import argparse

from cyldrift.coefficients import CoefficientModel, Constant, IndicatorAxial, ZoneFields
from cyldrift.cylinder import InfiniteOptions, solve_infinite
from cyldrift.errors import IncompatibleData


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--values", type=float, nargs="+", default=[-1.0, 0.0, 1.0])
    args = ap.parse_args()
    print(f"{'b_minus':>8} {'b_plus':>8} {'regime':>20} {'converged':>9} {'K_minus':>10} {'K_plus':>10}")
    for bm in args.values:
        for bp in args.values:
            b = ZoneFields((Constant(bm),), (Constant(0.5 * (bm + bp)),), (Constant(bp),))
            # odd source: orthogonal to every even adjoint state
            f = IndicatorAxial(-1.0, 0.0, 1.0) if bm != bp else IndicatorAxial(-1.0, 1.0, 0.0)
            m = CoefficientModel(1, ZoneFields.uniform([Constant(1.0)]), b, f=f)
            try:
                sol = solve_infinite(m, opts=InfiniteOptions(k_sequence=(6, 8, 10), cells_per_unit=32,
                                                             K_minus=0.0, K_plus=0.0))
            except IncompatibleData as exc:
                print(f"{bm:8.2f} {bp:8.2f} {'incompatible':>20} {'-':>9} functional={exc.report.functional:.3e}")
                continue
            print(f"{bm:8.2f} {bp:8.2f} {sol.regime.tag.value:>20} {str(sol.converged):>9} "
                  f"{sol.K_minus:10.5f} {sol.K_plus:10.5f}")


if __name__ == "__main__":
    main()
