"""Built-in one-dimensional examples with closed-form solutions.

Both examples are classically written as ``v'' + beta v' = f`` with
``beta(x) = -sign(x)``. The package's canonical operator is
``-(a u')' + b u' = f``, so the stored data are ``b = -beta = sign(x)`` and the
source with flipped sign; the solutions themselves are unchanged.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cell import Normalization
from .coefficients import CoefficientModel, Constant, FieldSum, IndicatorAxial, SignAxial, ZoneFields
from .cylinder import ExponentialRate, InfiniteOptions, build_problem, solve_infinite, solve_truncated_dirichlet

E = math.e
EXAMPLE2_JUMP = 2.0 / E  # K_minus - K_plus of the bounded solution


def _sign_drift() -> ZoneFields:
    return ZoneFields((Constant(-1.0),), (SignAxial(1.0),), (Constant(1.0),))


def example1_model() -> CoefficientModel:
    """Dirichlet truncations of this problem blow up like e^k."""
    return CoefficientModel(
        1, ZoneFields.uniform([Constant(1.0)]), _sign_drift(), f=IndicatorAxial(-1.0, 1.0, -1.0),
    )


def example1_solution(x, k: float) -> np.ndarray:
    """Exact solution of the Example-1 problem on (-k, k) with zero Dirichlet bases.

    Even in x; C^1 across |x| = 1.
    """
    ax = np.abs(np.asarray(x, float))
    c = (E - 1.0) * math.exp(k - 1.0)
    inner = -ax + np.exp(ax) - c
    outer = (E - 1.0) * (np.exp(ax) - math.exp(k)) / E
    return np.where(ax <= 1.0, inner, outer)


def example1_sup(k: float) -> float:
    return abs(1.0 - (E - 1.0) * math.exp(k - 1.0))


def example2_model() -> CoefficientModel:
    """Compatibility-regime example: f = -sign(x) on (-1, 1) is orthogonal to e^{-|x|}."""
    f = FieldSum((IndicatorAxial(-1.0, 0.0, 1.0), IndicatorAxial(0.0, 1.0, -1.0)))
    return CoefficientModel(1, ZoneFields.uniform([Constant(1.0)]), _sign_drift(), f=f)


def example2_solution(x) -> np.ndarray:
    """Bounded solution on the whole line (defined up to an additive constant)."""
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    out[x <= -1.0] = EXAMPLE2_JUMP
    m = (x > -1.0) & (x <= 0.0)
    out[m] = -x[m] + (2.0 - np.exp(-x[m])) / E
    m = (x > 0.0) & (x < 1.0)
    out[m] = -x[m] + np.exp(x[m]) / E
    return out


def example2_adjoint(x) -> np.ndarray:
    """Adjoint ground state e^{-|x|} (max-normalized)."""
    return np.exp(-np.abs(np.asarray(x, float)))


_B_SIGN = {"left": [-1.0], "middle": [{"kind": "sign", "scale": 1.0}], "right": [1.0]}

EXAMPLE_CONFIGS = {
    "example1": {
        "dimension": 1,
        "cells_per_unit": 64,
        "k_sequence": [4, 5, 6, 7, 8],
        "coefficients": {"a": [1.0], "b": _B_SIGN},
        "f": {"kind": "indicator", "lo": -1.0, "hi": 1.0, "value": -1.0},
    },
    "example2": {
        "dimension": 1,
        "cells_per_unit": 64,
        "k_sequence": [6, 8],
        "coefficients": {"a": [1.0], "b": _B_SIGN},
        "f": [
            {"kind": "indicator", "lo": -1.0, "hi": 0.0, "value": 1.0},
            {"kind": "indicator", "lo": 0.0, "hi": 1.0, "value": -1.0},
        ],
    },
}


def example_config(name: str) -> dict:
    import copy

    return copy.deepcopy(EXAMPLE_CONFIGS[name])


@dataclass
class Example1Report:
    ks: list
    sups: list
    oracle: list
    ratios: list
    seconds: float

    @property
    def passed(self) -> bool:
        return all(r >= 2.0 for r in self.ratios)


def run_example1(model=None, ks=(4, 5, 6, 7, 8), cells_per_unit: int = 64, scheme="upwind", opts=None) -> Example1Report:
    """Zero-Dirichlet truncations, whose sup norm grows like e^k."""
    t0 = time.perf_counter()
    model = model or example1_model()
    sups = []
    for k in ks:
        prob = build_problem(model, k, cells_per_unit, scheme=scheme)
        sups.append(float(np.max(np.abs(solve_truncated_dirichlet(prob, 0.0, 0.0, opts)))))
    ratios = [b / a for a, b in zip(sups, sups[1:])]
    return Example1Report(list(ks), sups, [example1_sup(k) for k in ks], ratios, time.perf_counter() - t0)


@dataclass
class Example2Report:
    jump: float
    jump_error: float
    sup_error: float
    h: float
    delta_minus: float
    delta_plus: float
    functional: float
    converged: bool
    seconds: float
    solution: object = field(default=None, repr=False)

    @property
    def checks(self) -> dict:
        return {
            "jump": self.jump_error <= 5e-3,
            "sup_error": self.sup_error <= 5 * self.h,
            "delta": all(abs(d - 1.0) <= 0.05 for d in (self.delta_minus, self.delta_plus)),
            "functional": abs(self.functional) <= 1e-3,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def run_example2(model=None, opts: InfiniteOptions | None = None) -> Example2Report:
    """Compatibility-regime solve compared with the closed-form v and e^{-|x|}."""
    t0 = time.perf_counter()
    model = model or example2_model()
    opts = opts or InfiniteOptions(k_sequence=(6, 8), cells_per_unit=64)
    sol = solve_infinite(model, opts=opts)
    x = sol.grid.cell_centers[:, 0]
    exact = example2_solution(x)
    vol = sol.grid.cell_volumes
    shift = float(np.sum((sol.values - exact) * vol) / np.sum(vol))
    sup_err = float(np.max(np.abs(sol.values - shift - exact)))
    jump = sol.K_minus - sol.K_plus
    adj = sol.adjoint
    deltas = [s.delta if isinstance(s, ExponentialRate) else math.nan for s in (adj.left, adj.right)]
    functional = sol.compatibility.functional
    return Example2Report(jump, abs(jump - EXAMPLE2_JUMP), sup_err, sol.grid.h, deltas[0], deltas[1],
                          functional, sol.converged, time.perf_counter() - t0, sol)


def adjoint_profile_error(sol) -> float:
    """Max deviation of the max-normalized adjoint state from e^{-|x|}."""
    p = sol.adjoint.normalized(Normalization.MAX_ONE)
    return float(np.max(np.abs(p - example2_adjoint(sol.grid.cell_centers[:, 0]))))
