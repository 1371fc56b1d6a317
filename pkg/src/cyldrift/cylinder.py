"""Truncated-cylinder solves for every drift regime, the adjoint ground state and
the growing-k orchestration with stabilization fits.

Sides are called ``"left"`` (x1 -> -inf) and ``"right"`` (x1 -> +inf).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .cell import (
    Normalization,
    PeriodicGroundState,
    RegimeCase,
    RegimeTag,
    classify_regime,
    compute_drifts,
    effective_drift,
    solve_cell_ground_state,
)
from .coefficients import (
    CoefficientModel,
    CoefficientTable,
    DecayReport,
    sample_on_grid,
    verify_decay,
)
from .discretize import (
    BaseCondition,
    Dirichlet,
    Scheme,
    assemble_primal,
    assemble_rhs,
    discrete_adjoint,
)
from .errors import IncompatibleData, InsufficientWindows
from .geometry import (
    CrossSection,
    CylinderGrid,
    Zone,
    build_cell_grid,
    build_cylinder_grid,
    build_segment_grid,
)
from .linalg import Anchor, SolveOptions, ground_state, solve_linear

log = logging.getLogger(__name__)

SIDES = ("left", "right")


@dataclass
class TruncatedProblem:
    grid: CylinderGrid
    table: CoefficientTable
    bc: BaseCondition
    scheme: Scheme = Scheme.UPWIND
    regime: RegimeCase | None = None
    model: CoefficientModel | None = field(default=None, repr=False)


def build_problem(model: CoefficientModel, k: float, cells_per_unit: int,
                  cross_section: CrossSection = CrossSection(),
                  bc: BaseCondition | None = None, scheme: Scheme | str = Scheme.UPWIND,
                  regime: RegimeCase | None = None) -> TruncatedProblem:
    grid = build_cylinder_grid(k, int(round(2 * k * cells_per_unit)), cross_section)
    table = sample_on_grid(model, grid)
    return TruncatedProblem(grid, table, bc or BaseCondition.neumann(), Scheme(scheme), regime, model)


def _solve_dirichlet(grid, table, bc, scheme, opts):
    op = assemble_primal(grid, table, bc, scheme)
    return solve_linear(op, assemble_rhs(grid, table, bc, scheme), opts)


def solve_truncated_dirichlet(prob: TruncatedProblem, K_minus: float = 0.0, K_plus: float = 0.0,
                              opts: SolveOptions | None = None) -> np.ndarray:
    """Solve with ``u = K_minus`` on S_{-k} and ``u = K_plus`` on S_k (conormal data g on the side)."""
    bc = BaseCondition.dirichlet(K_minus, K_plus)
    return _solve_dirichlet(prob.grid, prob.table, bc, prob.scheme, opts)


# ---------------------------------------------------------------- adjoint state


@dataclass
class ExponentialRate:
    delta: float
    r2: float


@dataclass
class PeriodicStabilization:
    reference: np.ndarray  # scaled cell ground state on the outermost period
    distance: float
    stabilized: bool


@dataclass
class AdjointState:
    """Adjoint ground state on G_{-k}^k, stored with max 1."""

    p_values: np.ndarray
    grid: CylinderGrid
    residual: float
    left: ExponentialRate | PeriodicStabilization | None = None
    right: ExponentialRate | PeriodicStabilization | None = None
    normalization: Normalization = Normalization.MAX_ONE

    def normalized(self, how: Normalization = Normalization.MAX_ONE) -> np.ndarray:
        if how == Normalization.MAX_ONE:
            return self.p_values / self.p_values.max()
        return self.p_values / float(np.sum(self.p_values * self.grid.cell_volumes))

    def side(self, side: str):
        return self.left if side == "left" else self.right

    def cross_max(self) -> np.ndarray:
        g = self.grid
        return self.p_values.reshape(g.axial_cells, g.n_cross).max(axis=1)


def _outer_third_slabs(grid: CylinderGrid, side: str) -> np.ndarray:
    """Axial slabs in the outer third of a side, without the outermost unit window."""
    x = grid.x1
    if side == "right":
        lo, hi = 0.0 + 2.0 * grid.hi / 3.0, grid.hi - 1.0
        return np.flatnonzero((x > lo) & (x < hi))
    lo, hi = grid.lo + 1.0, 2.0 * grid.lo / 3.0
    return np.flatnonzero((x > lo) & (x < hi))


def _line_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def _fit_exponential_tail(state_prof, grid, side) -> ExponentialRate:
    idx = _outer_third_slabs(grid, side)
    if len(idx) < 2:
        return ExponentialRate(math.nan, math.nan)
    slope, _, r2 = _line_fit(np.abs(grid.x1[idx]), np.log(state_prof[idx]))
    return ExponentialRate(-slope, r2)


def _compare_periodic(p, grid, side, cell_state: PeriodicGroundState) -> PeriodicStabilization:
    """Sup distance between the outermost period of ``p`` and the best multiple of the cell ground state."""
    if side == "right":
        cells = grid.cells_between(grid.hi - 1.0, grid.hi)
    else:
        cells = grid.cells_between(grid.lo, grid.lo + 1.0)
    cg = cell_state.grid
    if abs(cg.h - grid.h) > 1e-12 or cg.cross_section != grid.cross_section:
        raise ValueError("cell grid must match the cylinder resolution")
    x1 = grid.cell_centers[cells, 0]
    ia = np.rint(np.mod(x1, 1.0) / cg.h - 0.5).astype(int) % cg.axial_cells
    ref = cell_state.values[cg.index(ia, grid.cross_index[cells])]
    tail = p[cells]
    scale = float(tail @ ref / (ref @ ref))
    dist = float(np.max(np.abs(tail - scale * ref)))
    return PeriodicStabilization(scale * ref, dist, dist <= 10.0 * grid.h)


def solve_adjoint_truncated(prob: TruncatedProblem, opts: SolveOptions | None = None,
                            cell_states: dict | None = None,
                            x0: np.ndarray | None = None) -> AdjointState:
    """Adjoint ground state with conormal bases, max-normalized, plus per-side tail analysis.

    A side with nonzero drift gets an exponential rate fit of the cross-section
    maximum over the outer third of that side; a zero-drift side is compared
    with the periodic cell ground state over its outermost period.
    """
    grid = prob.grid
    op = assemble_primal(grid, prob.table, prob.bc, prob.scheme)
    gs = ground_state(discrete_adjoint(op), opts, x0=x0)
    p = gs.vector / gs.vector.max()
    state = AdjointState(p, grid, gs.residual)

    regime = prob.regime
    if regime is None:
        return state
    prof = state.cross_max()
    cell_states = dict(cell_states or {})
    for side, zone in (("left", Zone.LEFT), ("right", Zone.RIGHT)):
        if regime.side_is_zero(side):
            cs = cell_states.get(side)
            if cs is None:
                if prob.model is None:
                    raise ValueError("zero-drift tail analysis needs the coefficient model")
                cs = solve_cell_ground_state(zone, prob.model, build_cell_grid(grid.cells_per_unit, grid.cross_section), opts)
            fit = _compare_periodic(p, grid, side, cs)
        else:
            fit = _fit_exponential_tail(prof, grid, side)
        setattr(state, side, fit)
    return state


# ---------------------------------------------------------------- compatibility


@dataclass
class CompatibilityReport:
    functional: float
    r_k: float
    corrected_residual: float
    data_norm: float
    adjoint: AdjointState | None = field(default=None, repr=False)

    @property
    def relative_functional(self) -> float:
        return abs(self.functional) / self.data_norm if self.data_norm > 0 else 0.0


def compatibility_residual(p, grid, table: CoefficientTable,
                           normalization: Normalization | None = Normalization.INTEGRAL_ONE) -> float:
    """Discrete ``sum f p vol + sum g p area``.

    ``p`` is an :class:`AdjointState` (renormalized as requested) or a raw vector
    (used as given).
    """
    if isinstance(p, AdjointState):
        p = p.normalized(normalization)
    val = float(np.sum(table.f_cell * p * grid.cell_volumes))
    lat = grid.lateral_faces
    if len(lat):
        val += float(np.sum(table.g_lateral * p[lat.cells] * lat.areas))
    return val


def solve_truncated_neumann(prob: TruncatedProblem, opts: SolveOptions | None = None,
                            anchor_window: tuple[float, float] = (0.0, 1.0),
                            adjoint: AdjointState | None = None):
    """Conormal-base truncation with the constant correction r^k on G_{-1}^1.

    Returns ``(u, report)``; ``u`` has zero mean over ``anchor_window``. The
    correction makes ``(f + r^k, g)`` exactly orthogonal to the discrete adjoint
    ground state, so the singular system is solvable.
    """
    grid, table = prob.grid, prob.table
    bc = BaseCondition.neumann()
    if adjoint is None:
        adjoint = solve_adjoint_truncated(replace(prob, bc=bc), opts)
    p = adjoint.normalized(Normalization.INTEGRAL_ONE)
    vol = grid.cell_volumes

    functional = compatibility_residual(p, grid, table)
    mid = grid.cells_between(-1.0, 1.0)
    r_k = -functional / float(np.sum(p[mid] * vol[mid]))
    rhs = assemble_rhs(grid, table, bc, prob.scheme)
    rhs[mid] += r_k * vol[mid]
    corrected = float(p @ rhs)

    op = assemble_primal(grid, table, bc, prob.scheme)
    win = grid.cells_between(*anchor_window)
    u = solve_linear(op, rhs, opts, anchor=Anchor(win, vol[win], 0.0))
    report = CompatibilityReport(functional, r_k, corrected, table.data_norm(), adjoint)
    return u, report


# ---------------------------------------------------------------- semi-infinite


@dataclass
class SemiInfiniteResult:
    grid: CylinderGrid
    values: np.ndarray
    drift: float
    case: str  # "positive" | "negative" | "zero"
    constant: float
    gamma: float | None = None
    linear_deviation: float | None = None


def solve_semi_infinite(model: CoefficientModel, phi, K: float, k: float, cells_per_unit: int,
                        cross_section: CrossSection = CrossSection(),
                        scheme: Scheme | str = Scheme.UPWIND, opts: SolveOptions | None = None,
                        drift: float | None = None, eps_drift: float = 1e-6) -> SemiInfiniteResult:
    """Solve on G_0^k with ``v = phi`` on S_0 and ``v = K`` on S_k.

    The periodic regime is the model's right zone (the middle zone acts as a
    compact perturbation near 0). The interior constant is fitted according to
    the sign of the right effective drift: positive drift gives the limit
    C_phi seen mid-cylinder, negative drift relaxes to ``K`` at a fitted
    exponential rate, zero drift is compared with a linear profile.
    """
    grid = build_segment_grid(0.0, k, cells_per_unit, cross_section)
    table = sample_on_grid(model, grid)
    bc = BaseCondition(Dirichlet(phi), Dirichlet(K))
    v = _solve_dirichlet(grid, table, bc, Scheme(scheme), opts)
    if drift is None:
        ps = solve_cell_ground_state(Zone.RIGHT, model, build_cell_grid(cells_per_unit, cross_section), opts)
        drift = effective_drift(ps)

    x = grid.cell_centers[:, 0]
    vol = grid.cell_volumes

    def wmean(a, b):
        sel = (x > a) & (x < b)
        return float(np.sum(v[sel] * vol[sel]) / np.sum(vol[sel]))

    if drift > eps_drift:
        c = wmean(0.5 * k - 0.5, 0.5 * k + 0.5)
        return SemiInfiniteResult(grid, v, drift, "positive", c)
    if drift < -eps_drift:
        wins = []
        for n in range(1, int(math.floor(k / 2))):
            sel = (x > n) & (x < n + 1)
            nrm = math.sqrt(float(np.sum((v[sel] - K) ** 2 * vol[sel])))
            if nrm > 1e-12:
                wins.append((n, nrm))
        gamma = math.inf
        if len(wins) >= 2:
            ns, ls = np.array([w[0] for w in wins], float), np.log([w[1] for w in wins])
            gamma = -_line_fit(ns, ls)[0]
        return SemiInfiniteResult(grid, v, drift, "negative", wmean(k - 1.0, k), gamma)
    # zero drift: least-squares line over the interior, intercept at 0 estimates C_phi
    sel = (x > 1.0) & (x < k - 1.0)
    slope, intercept = np.polyfit(x[sel], v[sel], 1)
    lin = (intercept * (k - x) + K * x) / k
    return SemiInfiniteResult(grid, v, drift, "zero", float(intercept),
                              linear_deviation=float(np.max(np.abs(v - lin))))


# ---------------------------------------------------------------- stabilization fits


@dataclass
class StabilizationFit:
    K: float
    gamma: float
    r2: float
    poor_fit: bool
    windows: list  # (n, ||u - K||_{L2(window)}) with n the distance of the window from 0
    used: list


def side_windows(x1, side: str):
    """Unit windows on one side: list of (n, mask) with n the window's distance from 0."""
    x1 = np.asarray(x1)
    out = []
    if side == "right":
        top = int(math.floor(x1.max() + 1e-9))
        for n in range(0, top + 1):
            sel = (x1 > n) & (x1 < n + 1)
            if np.any(sel):
                out.append((n, sel))
    else:
        top = int(math.floor(-x1.min() + 1e-9))
        for n in range(0, top + 1):
            sel = (x1 < -n) & (x1 > -n - 1)
            if np.any(sel):
                out.append((n, sel))
    return out


def fit_stabilization(x1, values, volumes, side: str, floor: float = 1e-12,
                      noise_factor: float = 100.0, outer_third: bool = False,
                      r2_min: float = 0.995) -> StabilizationFit:
    """Fit ``||u - K||_{L2(window n)} ~ C exp(-gamma n)`` on one side.

    K is the mean over the outermost window. Windows enter the fit when their
    norm exceeds both ``floor`` and ``noise_factor`` times the outermost
    window's own spread (below that the error in K dominates). With
    ``outer_third`` only the outer third of the side is used, falling back to
    the three outermost usable windows when that leaves fewer than three.
    gamma is ``inf`` when no window rises above the floor.
    """
    values = np.asarray(values, float)
    volumes = np.asarray(volumes, float)
    wins = side_windows(x1, side)
    if len(wins) < 6:
        raise InsufficientWindows(f"{side} side has {len(wins)} unit windows, need >= 6")
    n_out, sel_out = wins[-1]
    K = float(np.sum(values[sel_out] * volumes[sel_out]) / np.sum(volumes[sel_out]))
    norms = [(n, math.sqrt(float(np.sum((values[s] - K) ** 2 * volumes[s])))) for n, s in wins]
    thresh = max(floor, noise_factor * norms[-1][1])
    usable = [(n, v) for n, v in norms[:-1] if v > thresh]
    if outer_third and usable:
        cut = 2.0 * n_out / 3.0
        outer = [(n, v) for n, v in usable if n >= cut]
        usable = outer if len(outer) >= 3 else usable[-3:]
    if len(usable) < 2:
        return StabilizationFit(K, math.inf, math.nan, False, norms, usable)
    ns = np.array([n for n, _ in usable], float)
    ls = np.log([v for _, v in usable])
    slope, _, r2 = _line_fit(ns, ls)
    gamma = -slope
    return StabilizationFit(K, gamma, r2, bool(r2 < r2_min or gamma <= 0), norms, usable)


# ---------------------------------------------------------------- adjoint diagnostics


def monotonicity_profile(p: AdjointState):
    """Worst ratio p(z)/p(y) over |z1| > |y1|, using per-|x1| bins of width h.

    Returns ``(beta_estimate, profile)`` with profile rows ``(|x1|, max over bin)``.
    """
    g = p.grid
    absx = np.abs(g.x1)
    keys = np.round(absx / g.h, 6)
    order = np.unique(keys)
    per_slab = p.p_values.reshape(g.axial_cells, g.n_cross)
    bin_max = np.array([per_slab[keys == kk].max() for kk in order])
    bin_min = np.array([per_slab[keys == kk].min() for kk in order])
    centers = np.array([absx[keys == kk][0] for kk in order])
    if len(order) < 2:
        return 1.0, list(zip(centers.tolist(), bin_max.tolist()))
    prefix_min = np.minimum.accumulate(bin_min)[:-1]
    beta = float(np.max(bin_max[1:] / prefix_min))
    return beta, list(zip(centers.tolist(), bin_max.tolist()))


@dataclass
class BaseSmallness:
    skipped: bool
    reason: str = ""
    left: float = math.nan
    right: float = math.nan


def base_smallness_check(p: AdjointState, regime: RegimeCase) -> BaseSmallness:
    """Max of p on S_{-k} and S_k (only meaningful when both drifts are nonzero)."""
    if regime.tag != RegimeTag.COMPATIBILITY:
        return BaseSmallness(True, "not the compatibility regime")
    if any(regime.zero_flags):
        return BaseSmallness(True, "a zero effective drift: no exponential smallness expected")
    g = p.grid
    q = p.normalized(Normalization.MAX_ONE)
    return BaseSmallness(False, "", float(q[g.base_faces_left.cells].max()), float(q[g.base_faces_right.cells].max()))


def fit_base_decay(ks, base_values) -> float:
    """Exponential rate of base maxima across a k-sequence."""
    ks = np.asarray(ks, float)
    vals = np.asarray(base_values, float)
    return -_line_fit(ks, np.log(vals))[0]


def weighted_moment_norm(grid, table) -> float:
    """``||(1 + x1^2) f||_{L2} + ||(1 + x1^2) g||_{L2(Sigma)}`` on the grid."""
    x = grid.cell_centers[:, 0]
    val = math.sqrt(float(np.sum(((1 + x**2) * table.f_cell) ** 2 * grid.cell_volumes)))
    lat = grid.lateral_faces
    if len(lat):
        xl = lat.centers[:, 0]
        val += math.sqrt(float(np.sum(((1 + xl**2) * table.g_lateral) ** 2 * lat.areas)))
    return val


# ---------------------------------------------------------------- orchestration


@dataclass(frozen=True)
class InfiniteOptions:
    k_sequence: tuple = (4, 6, 8, 12, 16)
    window: float = 2.0
    tol: float = 1e-6
    compat_tol: float | None = None  # defaults to tol
    cells_per_unit: int = 64
    cross_section: CrossSection = CrossSection()
    scheme: Scheme = Scheme.UPWIND
    K_minus: float = 0.0
    K_plus: float = 0.0
    anchor_window: tuple = (0.0, 1.0)
    eps_drift: float = 1e-6
    solve: SolveOptions = SolveOptions()

    def __post_init__(self):
        ks = tuple(float(k) for k in self.k_sequence)
        object.__setattr__(self, "k_sequence", ks)
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("k_sequence must be nonempty and strictly increasing")
        if any(k < self.window + 2 for k in ks):
            raise ValueError(f"every k must be >= window + 2 = {self.window + 2}")

    @property
    def compatibility_tolerance(self) -> float:
        return self.tol if self.compat_tol is None else self.compat_tol


@dataclass
class CylinderSolution:
    regime: RegimeCase
    ks: list
    window_x1: np.ndarray
    window_values: list
    history: list  # sup difference on the window between consecutive k
    converged: bool
    grid: CylinderGrid
    values: np.ndarray
    K_minus: float = math.nan
    K_plus: float = math.nan
    gamma_minus: float = math.nan
    gamma_plus: float = math.nan
    fits: dict = field(default_factory=dict)
    compatibility: CompatibilityReport | None = None
    adjoint: AdjointState | None = None
    decay: DecayReport | None = None
    M: float = math.nan
    flags: list = field(default_factory=list)


def regime_for(model: CoefficientModel, opts: InfiniteOptions) -> tuple[RegimeCase, object]:
    dr = compute_drifts(model, opts.cross_section, opts.cells_per_unit, opts.solve)
    return classify_regime(dr.b_minus, dr.b_plus, opts.eps_drift), dr


def solve_at_k(model: CoefficientModel, regime: RegimeCase, k: float, opts: InfiniteOptions):
    """One truncated solve with the regime's base conditions.

    Returns ``(problem, u, compatibility report or None)``.
    """
    prob = build_problem(model, k, opts.cells_per_unit, opts.cross_section,
                         scheme=opts.scheme, regime=regime)
    grid, table = prob.grid, prob.table
    tag = regime.tag
    if tag == RegimeTag.TWO_PARAMETER:
        homog = replace(table, f_cell=np.zeros_like(table.f_cell), g_lateral=np.zeros_like(table.g_lateral))
        u_h = _solve_dirichlet(grid, homog, BaseCondition.dirichlet(opts.K_minus, opts.K_plus), opts.scheme, opts.solve)
        u_f = _solve_dirichlet(grid, table, BaseCondition.dirichlet(0.0, 0.0), opts.scheme, opts.solve)
        return prob, u_h + u_f, None
    if tag in (RegimeTag.ONE_PARAMETER_LEFT, RegimeTag.ONE_PARAMETER_RIGHT):
        u = _solve_dirichlet(grid, table, BaseCondition.dirichlet(0.0, 0.0), opts.scheme, opts.solve)
        return prob, u, None

    prob = replace(prob, bc=BaseCondition.neumann())
    adjoint = solve_adjoint_truncated(prob, opts.solve)
    p = adjoint.normalized(Normalization.INTEGRAL_ONE)
    functional = compatibility_residual(p, grid, table)
    dn = table.data_norm()
    if abs(functional) > opts.compatibility_tolerance * dn:
        report = CompatibilityReport(functional, math.nan, math.nan, dn, adjoint)
        raise IncompatibleData(
            f"compatibility functional {functional:.6e} exceeds "
            f"{opts.compatibility_tolerance:g} x data norm {dn:.6e} at k={k:g}",
            report,
        )
    u, report = solve_truncated_neumann(prob, opts.solve, opts.anchor_window, adjoint=adjoint)
    return prob, u, report


def solve_infinite(model: CoefficientModel, regime: RegimeCase | None = None,
                   opts: InfiniteOptions = InfiniteOptions()) -> CylinderSolution:
    """Approximate the bounded solution on the infinite cylinder by growing truncations.

    Stops at the first k whose solution on the reporting window differs from the
    previous one by less than ``opts.tol`` (sup norm); otherwise the sequence is
    exhausted and the result is flagged ``not-converged``.
    """
    if regime is None:
        regime, _ = regime_for(model, opts)
    ks, wins, hist = [], [], []
    window_x1 = None
    prob = u = report = None
    converged = False
    for k in opts.k_sequence:
        prob, u, report = solve_at_k(model, regime, k, opts)
        grid = prob.grid
        wcells = grid.cells_between(-opts.window, opts.window)
        ks.append(k)
        wins.append(u[wcells].copy())
        if window_x1 is None:
            window_x1 = grid.cell_centers[wcells, 0]
        if len(wins) > 1:
            d = float(np.max(np.abs(wins[-1] - wins[-2])))
            hist.append(d)
            log.info("k=%g window change %.3e", k, d)
            if d < opts.tol:
                converged = True
                break

    grid = prob.grid
    sol = CylinderSolution(regime, ks, window_x1, wins, hist, converged, grid, u,
                           compatibility=report, adjoint=report.adjoint if report else None)
    if not converged:
        sol.flags.append("not-converged")
    if regime.boundary_case:
        sol.flags.append("boundary-case")

    for side in SIDES:
        try:
            fit = fit_stabilization(grid.cell_centers[:, 0], u, grid.cell_volumes, side, outer_third=True)
        except InsufficientWindows:
            continue
        sol.fits[side] = fit
        if side == "left":
            sol.K_minus, sol.gamma_minus = fit.K, fit.gamma
        else:
            sol.K_plus, sol.gamma_plus = fit.K, fit.gamma

    try:
        sol.decay = verify_decay(model, grid)
        if not sol.decay.passed:
            sol.flags.append("hypothesis-violated")
    except ValueError:
        sol.flags.append("decay-unchecked")
    sol.M = weighted_moment_norm(grid, prob.table)
    return sol
