"""Periodic adjoint cell problems, effective axial drifts and regime classification."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .coefficients import CoefficientModel, CoefficientTable, sample_on_grid
from .discretize import Scheme, assemble_primal, axial_adjoint_flux, discrete_adjoint
from .geometry import CellGrid, CrossSection, Zone, build_cell_grid
from .linalg import SolveOptions, ground_state


class Normalization(str, Enum):
    INTEGRAL_ONE = "integral_one"
    MAX_ONE = "max_one"


@dataclass
class PeriodicGroundState:
    values: np.ndarray
    normalization: Normalization
    residual: float
    grid: CellGrid
    table: CoefficientTable
    zone: Zone
    scheme: Scheme = Scheme.UPWIND

    def normalized(self, how: Normalization) -> np.ndarray:
        if how == Normalization.MAX_ONE:
            return self.values / self.values.max()
        return self.values / float(np.sum(self.values * self.grid.cell_volumes))


def solve_cell_ground_state(zone: Zone, model: CoefficientModel, cell_grid: CellGrid,
                            opts: SolveOptions | None = None,
                            scheme: Scheme | str = Scheme.UPWIND) -> PeriodicGroundState:
    """Positive periodic solution of ``-div(a grad p) - div(b p) = 0`` on the cell, with integral 1."""
    zone = Zone(zone)
    table = sample_on_grid(model, cell_grid, zone=zone)
    op = assemble_primal(cell_grid, table, None, scheme)
    gs = ground_state(discrete_adjoint(op), opts)
    p = gs.vector / float(np.sum(gs.vector * cell_grid.cell_volumes))
    return PeriodicGroundState(p, Normalization.INTEGRAL_ONE, gs.residual, cell_grid, table, zone, Scheme(scheme))


def effective_drift(ps: PeriodicGroundState) -> float:
    """Integral over the cell of ``a11 dp/dx1 + b1 p`` with p normalized to integral 1.

    The integrand is evaluated on axial faces using the flux the discrete adjoint
    conserves, and integrated by the midpoint rule (each axial face stands for a
    slab of width h).
    """
    grid = ps.grid
    p = ps.normalized(Normalization.INTEGRAL_ONE)
    sel, flux = axial_adjoint_flux(grid, ps.table, p, ps.scheme)
    areas = grid.interior_faces.areas[sel]
    return float(np.sum(flux * areas) * grid.h)


class RegimeTag(str, Enum):
    TWO_PARAMETER = "TwoParameter"
    ONE_PARAMETER_LEFT = "OneParameterLeft"
    ONE_PARAMETER_RIGHT = "OneParameterRight"
    COMPATIBILITY = "Compatibility"


@dataclass(frozen=True)
class RegimeCase:
    tag: RegimeTag
    drifts: tuple[float, float]  # (left, right)
    zero_flags: tuple[bool, bool]
    tolerance: float

    @property
    def boundary_case(self) -> bool:
        return any(self.zero_flags)

    def side_drift(self, side: str) -> float:
        return self.drifts[0] if side == "left" else self.drifts[1]

    def side_is_zero(self, side: str) -> bool:
        return self.zero_flags[0] if side == "left" else self.zero_flags[1]


def classify_regime(b_minus: float, b_plus: float, eps_drift: float = 1e-6) -> RegimeCase:
    """Assign the sign pair (left drift, right drift) to exactly one regime.

    Drifts within ``eps_drift`` of zero count as zero; zero values follow the
    inclusive inequalities (b+ >= 0 with b- <= 0 is the compatibility case).
    """
    if not eps_drift > 0:
        raise ValueError("eps_drift must be positive")
    zm, zp = abs(b_minus) <= eps_drift, abs(b_plus) <= eps_drift
    bm = 0.0 if zm else b_minus
    bp = 0.0 if zp else b_plus
    if bp < 0:
        tag = RegimeTag.TWO_PARAMETER if bm > 0 else RegimeTag.ONE_PARAMETER_LEFT
    else:
        tag = RegimeTag.ONE_PARAMETER_RIGHT if bm > 0 else RegimeTag.COMPATIBILITY
    return RegimeCase(tag, (float(b_minus), float(b_plus)), (zm, zp), float(eps_drift))


@dataclass
class DriftResult:
    b_minus: float
    b_plus: float
    left: PeriodicGroundState
    right: PeriodicGroundState
    refined: tuple[bool, bool]


def compute_drifts(model: CoefficientModel, cross_section: CrossSection, cells_per_unit: int,
                   opts: SolveOptions | None = None, recheck_band: float = 1e-2,
                   max_refine: int = 2) -> DriftResult:
    """Effective drifts of both periodic zones.

    A drift with magnitude below ``recheck_band`` is recomputed on cell grids
    refined by factors of two (up to ``max_refine`` times) and the finest value
    is kept, since the classification near zero decides the solve strategy.
    """
    out = []
    for zone in (Zone.LEFT, Zone.RIGHT):
        n = cells_per_unit
        ps = solve_cell_ground_state(zone, model, build_cell_grid(n, cross_section), opts)
        val = effective_drift(ps)
        refined = False
        for _ in range(max_refine):
            if abs(val) >= recheck_band:
                break
            n *= 2
            ps = solve_cell_ground_state(zone, model, build_cell_grid(n, cross_section), opts)
            val = effective_drift(ps)
            refined = True
        out.append((val, ps, refined))
    (bm, pl, rl), (bp, pr, rr) = out
    return DriftResult(bm, bp, pl, pr, (rl, rr))
