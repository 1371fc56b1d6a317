"""Command-line entry point.

Exit codes: 0 ok, 1 demo oracle mismatch, 2 configuration / usage error,
3 solver failure, 4 incompatible data, 5 k-sequence did not converge.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import demos
from .cell import RegimeTag, classify_regime, compute_drifts, solve_cell_ground_state
from .config import RunConfig, config_from_dict, parse_config, set_path
from .cylinder import (
    ExponentialRate,
    PeriodicStabilization,
    build_problem,
    compatibility_residual,
    solve_adjoint_truncated,
    solve_infinite,
    solve_semi_infinite,
)
from .discretize import BaseCondition, Scheme
from .errors import CylDriftError, IncompatibleData, SchemaError, SolverError
from .geometry import Zone, build_cell_grid
from .io import (
    ResultBundle,
    decay_table,
    dumps,
    emit_csv,
    emit_json,
    format_float,
    profile_table,
    write_run_meta,
)

EXIT_OK, EXIT_DEMO, EXIT_SCHEMA, EXIT_SOLVER, EXIT_INCOMPATIBLE, EXIT_NOT_CONVERGED = 0, 1, 2, 3, 4, 5
COMMANDS = ("cell", "drift", "classify", "solve", "adjoint", "check-compat", "semi", "demo", "sweep")

log = logging.getLogger("cyldrift")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SchemaError("argv", message)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (sweep)")
    common.add_argument("--scheme", choices=[s.value for s in Scheme])
    common.add_argument("--eps-drift", type=float, dest="eps_drift")
    common.add_argument("--tol", type=float)

    p = _Parser(prog="cyldrift", description="Convection-diffusion in infinite cylinders with periodic ends")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    cell = sub.add_parser("cell", parents=[common], help="periodic cell ground states")
    cell.add_argument("--zone", choices=["left", "right", "both"], default="both")
    sub.add_parser("drift", parents=[common], help="print effective drifts")
    sub.add_parser("classify", parents=[common], help="print the regime tag")
    sub.add_parser("solve", parents=[common], help="bounded solution by growing truncations")
    sub.add_parser("adjoint", parents=[common], help="adjoint ground state and its tail fits")
    sub.add_parser("check-compat", parents=[common], help="compatibility functional")
    sub.add_parser("semi", parents=[common], help="semi-infinite Dirichlet problem")
    demo = sub.add_parser("demo", parents=[common], help="built-in closed-form examples")
    demo.add_argument("name", choices=sorted(demos.EXAMPLE_CONFIGS))
    sub.add_parser("sweep", parents=[common], help="run solve over a parameter grid")
    return p


def _load(args) -> RunConfig:
    if not args.config:
        raise SchemaError("--config", "this command needs --config PATH")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError("--config", f"cannot read {args.config}: {exc.strerror}") from None
    return _apply_flags(parse_config(text), args)


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    if args.scheme:
        cfg = replace(cfg, scheme=Scheme(args.scheme))
    if args.eps_drift is not None:
        if not args.eps_drift > 0:
            raise ValueError("--eps-drift: must be positive")
        cfg = replace(cfg, eps_drift=args.eps_drift)
    if args.tol is not None:
        if not args.tol > 0:
            raise ValueError("--tol: must be positive")
        cfg = replace(cfg, tol=args.tol)
    return cfg


def _out_dir(args, cfg: RunConfig | None, default: str) -> Path:
    return Path(args.out or (cfg.output_dir if cfg and cfg.output_dir else default))


def _regime(cfg: RunConfig):
    dr = compute_drifts(cfg.model, cfg.cross_section, cfg.cells_per_unit, cfg.solve_options)
    case = classify_regime(dr.b_minus, dr.b_plus, cfg.eps_drift)
    if cfg.regime is not None and cfg.regime != case.tag:
        log.warning("regime override %s replaces computed %s", cfg.regime.value, case.tag.value)
        case = replace(case, tag=cfg.regime)
    return case, dr


def _regime_dict(case) -> dict:
    return {"tag": case.tag.value, "zero_flags": list(case.zero_flags), "tolerance": case.tolerance}


def _fit_dict(fit) -> dict | None:
    if isinstance(fit, ExponentialRate):
        return {"kind": "exponential", "delta": fit.delta, "r2": fit.r2}
    if isinstance(fit, PeriodicStabilization):
        return {"kind": "periodic", "distance": fit.distance, "stabilized": fit.stabilized}
    return None


# ---------------------------------------------------------------- commands


def cmd_cell(args) -> int:
    cfg = _load(args)
    zones = ["left", "right"] if args.zone == "both" else [args.zone]
    cg = build_cell_grid(cfg.cells_per_unit, cfg.cross_section)
    for name in zones:
        zone = Zone.LEFT if name == "left" else Zone.RIGHT
        ps = solve_cell_ground_state(zone, cfg.model, cg, cfg.solve_options, cfg.scheme)
        table = profile_table(cg.x1, cg.cross_index, ps.values)
        if args.out:
            emit_csv(table, Path(args.out) / f"cell_{name}.csv")
        else:
            sys.stdout.write(f"# zone={name}\n" + table.render())
    return EXIT_OK


def cmd_drift(args) -> int:
    cfg = _load(args)
    dr = compute_drifts(cfg.model, cfg.cross_section, cfg.cells_per_unit, cfg.solve_options)
    print(f"b_minus={format_float(dr.b_minus)}")
    print(f"b_plus={format_float(dr.b_plus)}")
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _load(args)
    case, _ = _regime(cfg)
    print(case.tag.value)
    if case.boundary_case:
        print(f"boundary-case zero_flags={list(case.zero_flags)}")
    return EXIT_OK


def solve_bundle(cfg: RunConfig) -> tuple[ResultBundle, bool]:
    case, dr = _regime(cfg)
    sol = solve_infinite(cfg.model, case, cfg.infinite_options())
    g = sol.grid
    adj = sol.adjoint
    rep = sol.compatibility
    compat = None
    if rep is not None:
        compat = {"functional": rep.functional, "r_k": rep.r_k, "corrected_residual": rep.corrected_residual,
                  "data_norm": rep.data_norm, "relative_functional": rep.relative_functional}
    limits = {"K_minus": sol.K_minus, "K_plus": sol.K_plus,
              "gamma_minus": sol.gamma_minus, "gamma_plus": sol.gamma_plus,
              "delta_minus": adj.left.delta if adj and isinstance(adj.left, ExponentialRate) else math.nan,
              "delta_plus": adj.right.delta if adj and isinstance(adj.right, ExponentialRate) else math.nan}
    conv = [{"k": k, "sup_change": (sol.history[i - 1] if i else math.nan)} for i, k in enumerate(sol.ks)]
    extra = {"M": sol.M, "converged": sol.converged,
             "fits": {s: {"K": f.K, "gamma": f.gamma, "r2": f.r2, "poor_fit": f.poor_fit}
                      for s, f in sol.fits.items()}}
    if adj is not None:
        extra["adjoint"] = {"residual": adj.residual, "left": _fit_dict(adj.left), "right": _fit_dict(adj.right)}
    if sol.decay is not None:
        extra["coefficient_decay"] = {"C0": sol.decay.C0, "gamma0": sol.decay.gamma0, "passed": sol.decay.passed}
    bundle = ResultBundle(
        config_hash=cfg.config_hash(),
        drifts={"b_minus": dr.b_minus, "b_plus": dr.b_plus},
        regime=_regime_dict(case),
        convergence=conv,
        limits=limits,
        compatibility=compat,
        flags=sol.flags,
        profile=profile_table(g.x1, g.cross_index, sol.values),
        decay={s: decay_table(f.windows) for s, f in sol.fits.items()},
        extra=extra,
    )
    return bundle, sol.converged


def cmd_solve(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc)
    cfg = _load(args)
    out = _out_dir(args, cfg, "cyldrift_out")
    bundle, converged = solve_bundle(cfg)
    bundle.write(out)
    write_run_meta(out, bundle.config_hash, "solve", started)
    lim = bundle.limits
    print(f"regime={bundle.regime['tag']} K_minus={format_float(lim['K_minus'])} K_plus={format_float(lim['K_plus'])}")
    if not converged:
        print("not converged over the k sequence", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_adjoint(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc)
    cfg = _load(args)
    out = _out_dir(args, cfg, "cyldrift_out")
    case, _ = _regime(cfg)
    prob = build_problem(cfg.model, cfg.k_sequence[-1], cfg.cells_per_unit, cfg.cross_section,
                         BaseCondition.neumann(), cfg.scheme, case)
    adj = solve_adjoint_truncated(prob, cfg.solve_options)
    g = adj.grid
    emit_csv(profile_table(g.x1, g.cross_index, adj.p_values), out / "adjoint_profile.csv")
    data = {"config_hash": cfg.config_hash(), "k": cfg.k_sequence[-1], "regime": _regime_dict(case),
            "normalization": adj.normalization.value, "residual": adj.residual,
            "left": _fit_dict(adj.left), "right": _fit_dict(adj.right)}
    emit_json(data, out / "adjoint.json")
    write_run_meta(out, data["config_hash"], "adjoint", started)
    for side in ("left", "right"):
        print(f"{side}: {json.dumps(_fit_dict(adj.side(side)))}")
    return EXIT_OK


def cmd_check_compat(args) -> int:
    cfg = _load(args)
    case, _ = _regime(cfg)
    prob = build_problem(cfg.model, cfg.k_sequence[-1], cfg.cells_per_unit, cfg.cross_section,
                         BaseCondition.neumann(), cfg.scheme, case)
    adj = solve_adjoint_truncated(prob, cfg.solve_options)
    functional = compatibility_residual(adj, prob.grid, prob.table)
    dn = prob.table.data_norm()
    tol = cfg.compat_tol if cfg.compat_tol is not None else cfg.tol
    ok = abs(functional) <= tol * dn
    print(f"regime={case.tag.value}")
    print(f"functional={format_float(functional)} data_norm={format_float(dn)} tolerance={format_float(tol)}")
    if case.tag != RegimeTag.COMPATIBILITY:
        print("PASS (no compatibility condition in this regime)")
        return EXIT_OK
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_INCOMPATIBLE


def cmd_semi(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc)
    cfg = _load(args)
    out = _out_dir(args, cfg, "cyldrift_out")
    s = cfg.semi
    res = solve_semi_infinite(cfg.model, s.phi, s.K, s.k, cfg.cells_per_unit, cfg.cross_section,
                              cfg.scheme, cfg.solve_options, eps_drift=cfg.eps_drift)
    g = res.grid
    emit_csv(profile_table(g.x1, g.cross_index, res.values), out / "semi_profile.csv")
    data = {"config_hash": cfg.config_hash(), "drift": res.drift, "case": res.case, "constant": res.constant,
            "gamma": math.nan if res.gamma is None else res.gamma,
            "linear_deviation": math.nan if res.linear_deviation is None else res.linear_deviation}
    emit_json(data, out / "semi.json")
    write_run_meta(out, data["config_hash"], "semi", started)
    print(f"case={res.case} drift={format_float(res.drift)} constant={format_float(res.constant)}")
    return EXIT_OK


def cmd_demo(args) -> int:
    cfg = _apply_flags(config_from_dict(demos.example_config(args.name)), args)
    if args.name == "example1":
        rep = demos.run_example1(cfg.model, cfg.k_sequence, cfg.cells_per_unit, cfg.scheme, cfg.solve_options)
        print(f"{'k':>4} {'sup|u_k|':>14} {'oracle':>14} {'rel.err':>10} {'ratio':>8}")
        for i, k in enumerate(rep.ks):
            ratio = f"{rep.ratios[i - 1]:8.4f}" if i else f"{'':>8}"
            err = abs(rep.sups[i] - rep.oracle[i]) / rep.oracle[i]
            print(f"{k:4g} {rep.sups[i]:14.6f} {rep.oracle[i]:14.6f} {err:10.3e} {ratio}")
        print(f"min growth ratio {min(rep.ratios):.4f} (need >= 2): {'PASS' if rep.passed else 'FAIL'}")
        return EXIT_OK if rep.passed else EXIT_DEMO
    rep = demos.run_example2(cfg.model, cfg.infinite_options())
    rows = [
        ("K_minus - K_plus", rep.jump, demos.EXAMPLE2_JUMP, rep.jump_error, 5e-3),
        ("sup |u - v| (mean aligned)", rep.sup_error, 0.0, rep.sup_error, 5 * rep.h),
        ("delta_minus", rep.delta_minus, 1.0, abs(rep.delta_minus - 1), 0.05),
        ("delta_plus", rep.delta_plus, 1.0, abs(rep.delta_plus - 1), 0.05),
        ("compatibility functional", rep.functional, 0.0, abs(rep.functional), 1e-3),
    ]
    print(f"{'quantity':<28} {'computed':>14} {'oracle':>14} {'error':>10} {'tol':>9}")
    for name, got, want, err, tol in rows:
        print(f"{name:<28} {got:14.8f} {want:14.8f} {err:10.3e} {tol:9.2e} {'ok' if err <= tol else 'FAIL'}")
    print(f"converged={rep.converged} seconds={rep.seconds:.3f}: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_DEMO


# ---------------------------------------------------------------- sweep


def _sweep_point(payload) -> tuple[int, int]:
    idx, raw, out = payload
    try:
        cfg = config_from_dict(raw)
        bundle, converged = solve_bundle(cfg)
    except IncompatibleData:
        return idx, EXIT_INCOMPATIBLE
    except CylDriftError:
        return idx, EXIT_SOLVER
    bundle.write(out)
    return idx, EXIT_OK if converged else EXIT_NOT_CONVERGED


def cmd_sweep(args) -> int:
    """Config file: ``{"template": {...}, "grid": {"dotted.path": [values, ...], ...}}``."""
    if not args.config:
        raise SchemaError("--config", "sweep needs --config PATH")
    try:
        spec = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from None
    if not isinstance(spec, dict) or set(spec) - {"template", "grid"} or "template" not in spec:
        raise SchemaError("<root>", "sweep config needs 'template' and optional 'grid' only")
    grid = spec.get("grid", {})
    if not isinstance(grid, dict) or any(not isinstance(v, list) or not v for v in grid.values()):
        raise SchemaError("grid", "expected an object of nonempty lists")
    if args.jobs < 1:
        raise ValueError("--jobs: must be >= 1")
    out = Path(args.out or "cyldrift_sweep")
    keys = list(grid)
    points = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        raw = spec["template"]
        for key, val in zip(keys, combo):
            raw = set_path(raw, key, val)
        cfg = _apply_flags(config_from_dict(raw), args)  # validate every point before running
        points.append((i, cfg.to_dict(), str(out / f"point_{i:04d}"), dict(zip(keys, combo))))

    payloads = [(i, raw, o) for i, raw, o, _ in points]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            codes = dict(ex.map(_sweep_point, payloads))
    else:
        codes = dict(map(_sweep_point, payloads))
    index = [{"point": i, "dir": Path(o).name, "params": params, "exit_code": codes[i]}
             for i, _, o, params in points]
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_index.json").write_text(dumps(index), encoding="utf-8")
    for row in index:
        print(f"{row['dir']} exit={row['exit_code']} {json.dumps(row['params'])}")
    return max(codes.values(), default=EXIT_OK)


HANDLERS = {
    "cell": cmd_cell, "drift": cmd_drift, "classify": cmd_classify, "solve": cmd_solve,
    "adjoint": cmd_adjoint, "check-compat": cmd_check_compat, "semi": cmd_semi, "demo": cmd_demo,
    "sweep": cmd_sweep,
}


def _setup_logging() -> None:
    level = os.environ.get("CYLDRIFT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def run_command(argv=None) -> int:
    _setup_logging()
    try:
        args = _parser().parse_args(argv)
        return HANDLERS[args.command](args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except IncompatibleData as exc:
        print(f"incompatible data: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except SolverError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:  # grid, ellipticity and range errors in the inputs
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except CylDriftError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run_command())
