"""Solve the built-in Compatibility-regime example and write its outputs.

Usage: python3 scripts/run_example2.py [OUT_DIR]
"""
import sys
from pathlib import Path

from cyldrift.config import config_from_dict
from cyldrift.demos import EXAMPLE2_JUMP, adjoint_profile_error, example2_solution, example_config, run_example2
from cyldrift.io import emit_csv, emit_json, profile_table


def main(out: Path) -> int:
    cfg = config_from_dict(example_config("example2"))
    rep = run_example2(cfg.model, cfg.infinite_options())
    sol = rep.solution
    g = sol.grid
    emit_csv(profile_table(g.x1, g.cross_index, sol.values), out / "profile.csv")
    emit_csv(profile_table(g.x1, g.cross_index, example2_solution(g.x1)), out / "closed_form.csv")
    summary = {
        "config_hash": cfg.config_hash(), "jump": rep.jump, "jump_exact": EXAMPLE2_JUMP,
        "sup_error": rep.sup_error, "delta_minus": rep.delta_minus, "delta_plus": rep.delta_plus,
        "functional": rep.functional, "adjoint_profile_error": adjoint_profile_error(sol), "checks": rep.checks,
    }
    emit_json(summary, out / "summary.json")
    for key, val in summary.items():
        print(f"{key:>22}: {val}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main(Path(sys.argv[1] if len(sys.argv) > 1 else "example2_out")))
