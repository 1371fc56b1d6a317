"""Piecewise-periodic coefficient data and its sampling onto grids.

A :class:`CoefficientModel` carries diagonal diffusion ``a``, drift ``b`` per zone
(left/middle/right of the interface cylinder ``G_{-1}^1``) plus sources ``f`` on
the volume and ``g`` on the lateral boundary. Fields are callables on points of
shape ``(m, d)`` with ``x[:, 0]`` the axial coordinate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import NonElliptic
from .geometry import CellGrid, CylinderGrid, Zone, zone_of

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, x):
        return np.full(len(x), float(self.value))


@dataclass(frozen=True)
class FourierBox:
    """Cross-section profile ``offset + sum(c cos(w x_j) + s sin(w x_j))``.

    Terms are ``(axis, wavenumber, cos_amp, sin_amp)`` with ``axis`` counting
    cross-section axes from 0.
    """

    offset: float = 1.0
    terms: tuple[tuple[int, float, float, float], ...] = ()

    def __call__(self, x):
        out = np.full(len(x), float(self.offset))
        for axis, w, c, s in self.terms:
            xj = x[:, 1 + int(axis)]
            out += c * np.cos(w * xj) + s * np.sin(w * xj)
        return out


@dataclass(frozen=True)
class FourierAxial:
    """``sum_m (c_m cos(2 pi m x1) + s_m sin(2 pi m x1))`` times a cross profile."""

    modes: tuple[tuple[int, float, float], ...]
    cross_profile: Union[Constant, FourierBox] = Constant(1.0)

    def __call__(self, x):
        x1 = x[:, 0]
        out = np.zeros(len(x))
        for m, c, s in self.modes:
            out += c * np.cos(TWO_PI * m * x1) + s * np.sin(TWO_PI * m * x1)
        return out * self.cross_profile(x)

    @property
    def max_mode(self) -> int:
        return max((abs(int(m)) for m, _, _ in self.modes), default=0)


@dataclass(frozen=True)
class SignAxial:
    """``scale * sign(x1)`` with sign(0) = 0."""

    scale: float = 1.0

    def __call__(self, x):
        return self.scale * np.sign(x[:, 0])


@dataclass(frozen=True)
class IndicatorAxial:
    """``value`` on lo < x1 < hi, ``value / 2`` exactly at the endpoints, else 0."""

    lo: float
    hi: float
    value: float = 1.0

    def __call__(self, x):
        x1 = x[:, 0]
        inside = (x1 > self.lo) & (x1 < self.hi)
        edge = (x1 == self.lo) | (x1 == self.hi)
        return self.value * (inside + 0.5 * edge)


@dataclass(frozen=True)
class Tabulated:
    """Axial table, linearly interpolated. Queries outside the table are errors."""

    x1: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        xs = tuple(float(v) for v in self.x1)
        vs = tuple(float(v) for v in self.values)
        object.__setattr__(self, "x1", xs)
        object.__setattr__(self, "values", vs)
        if len(xs) != len(vs) or len(xs) < 2:
            raise ValueError("tabulated field needs >= 2 samples and equal-length x1/values")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("tabulated x1 must be strictly increasing")
        if not np.all(np.isfinite(vs)):
            raise ValueError("tabulated values must be finite")

    @property
    def spacing(self) -> float:
        return float(np.max(np.diff(self.x1)))

    def __call__(self, x):
        x1 = x[:, 0]
        lo, hi = self.x1[0], self.x1[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(x1 < lo - slack) or np.any(x1 > hi + slack):
            raise ValueError(
                f"tabulated field covers [{lo}, {hi}] but was queried at "
                f"[{x1.min()}, {x1.max()}]"
            )
        return np.interp(x1, self.x1, self.values)


@dataclass(frozen=True)
class FieldSum:
    terms: tuple

    def __call__(self, x):
        out = np.zeros(len(x))
        for t in self.terms:
            out += t(x)
        return out


ScalarField = Union[Constant, FourierAxial, SignAxial, IndicatorAxial, Tabulated, FieldSum]


def iter_leaves(fld):
    if isinstance(fld, FieldSum):
        for t in fld.terms:
            yield from iter_leaves(t)
    else:
        yield fld


@dataclass(frozen=True)
class ZoneFields:
    """A d-vector of scalar fields per zone."""

    left: tuple
    middle: tuple
    right: tuple

    @classmethod
    def uniform(cls, fields) -> "ZoneFields":
        t = tuple(fields)
        return cls(t, t, t)

    def zone(self, z: Zone) -> tuple:
        return (self.left, self.middle, self.right)[int(z)]

    def eval_zone(self, z: Zone, x: np.ndarray) -> np.ndarray:
        comps = self.zone(z)
        return np.stack([fld(x) for fld in comps], axis=1) if len(x) else np.zeros((0, len(comps)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate by zone of each point (interface points +-1 use the middle fields)."""
        z = zone_of(x[:, 0])
        out = np.zeros((len(x), len(self.left)))
        for zz in Zone:
            sel = z == zz
            if np.any(sel):
                out[sel] = self.eval_zone(zz, x[sel])
        return out


# sample windows used by the periodicity check, one per periodic zone
_PERIODIC_PROBE = {Zone.LEFT: (-12.0, -2.0), Zone.RIGHT: (1.5, 11.5)}


@dataclass(frozen=True)
class CoefficientModel:
    """Coefficient data of the convection-diffusion problem.

    ``a`` holds the diagonal of the diffusion matrix. ``g`` may be None (no
    lateral source); it is ignored when ``dim == 1``. ``ellipticity`` is the
    declared lower bound Lambda, checked at sampling time when given.
    """

    dim: int
    a: ZoneFields
    b: ZoneFields
    f: ScalarField = Constant(0.0)
    g: ScalarField | None = None
    ellipticity: float | None = None
    check_periodicity: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        for name, zf in (("a", self.a), ("b", self.b)):
            for z in Zone:
                if len(zf.zone(z)) != self.dim:
                    raise ValueError(
                        f"{name}.{z.name.lower()} has {len(zf.zone(z))} components, expected {self.dim}"
                    )
        if self.ellipticity is not None and not self.ellipticity > 0:
            raise ValueError("declared ellipticity constant must be positive")
        if self.check_periodicity:
            self.verify_periodicity()

    def verify_periodicity(self, n_probe: int = 16, tol: float = 1e-12, seed: int = 0):
        """Check 1-periodicity in x1 of the left and right zone fields."""
        rng = np.random.default_rng(seed)
        for z, (lo, hi) in _PERIODIC_PROBE.items():
            x = np.empty((n_probe, self.dim))
            x[:, 0] = rng.uniform(lo, hi - 1.0, n_probe)
            x[:, 1:] = rng.uniform(0.0, 1.0, (n_probe, self.dim - 1))
            shifted = x.copy()
            shifted[:, 0] += 1.0
            for name, zf in (("a", self.a), ("b", self.b)):
                try:
                    v0, v1 = zf.eval_zone(z, x), zf.eval_zone(z, shifted)
                except ValueError as exc:
                    raise ValueError(f"{name}.{z.name.lower()} is not periodic: {exc}") from None
                err = np.max(np.abs(v0 - v1) / np.maximum(1.0, np.abs(v0)))
                if err > tol:
                    raise ValueError(
                        f"{name}.{z.name.lower()} is not 1-periodic in x1 (mismatch {err:.3e})"
                    )

    def max_fourier_mode(self) -> int:
        m = 0
        for zf in (self.a, self.b):
            for z in Zone:
                for fld in zf.zone(z):
                    for leaf in iter_leaves(fld):
                        if isinstance(leaf, FourierAxial):
                            m = max(m, leaf.max_mode)
        for fld in (self.f, self.g):
            if fld is not None:
                for leaf in iter_leaves(fld):
                    if isinstance(leaf, FourierAxial):
                        m = max(m, leaf.max_mode)
        return m

    def with_sources(self, f=None, g=None) -> "CoefficientModel":
        return CoefficientModel(
            self.dim, self.a, self.b,
            self.f if f is None else f,
            self.g if g is None else g,
            self.ellipticity, check_periodicity=False,
        )

    def mirrored(self) -> "CoefficientModel":
        """Coefficients of the problem under x1 -> -x1 (axial drift changes sign)."""
        def flip(fld):
            return _Mirror(fld)

        def flip_b(fields):
            return tuple(_Negate(_Mirror(fld)) if i == 0 else _Mirror(fld) for i, fld in enumerate(fields))

        a = ZoneFields(tuple(map(flip, self.a.right)), tuple(map(flip, self.a.middle)), tuple(map(flip, self.a.left)))
        b = ZoneFields(flip_b(self.b.right), flip_b(self.b.middle), flip_b(self.b.left))
        g = None if self.g is None else _Mirror(self.g)
        return CoefficientModel(self.dim, a, b, _Mirror(self.f), g, self.ellipticity, check_periodicity=False)


@dataclass(frozen=True)
class _Mirror:
    inner: object

    def __call__(self, x):
        y = x.copy()
        y[:, 0] = -y[:, 0]
        return self.inner(y)


@dataclass(frozen=True)
class _Negate:
    inner: object

    def __call__(self, x):
        return -self.inner(x)


@dataclass(frozen=True)
class CoefficientTable:
    """Coefficients sampled on a specific grid.

    ``a_face`` / ``b_face`` are the normal components on interior faces (normal
    oriented from left to right cell). Base arrays are empty on cell grids.
    """

    grid: object
    a_cell: np.ndarray
    b_cell: np.ndarray
    a_face: np.ndarray
    b_face: np.ndarray
    a_base_left: np.ndarray
    b_base_left: np.ndarray
    a_base_right: np.ndarray
    b_base_right: np.ndarray
    f_cell: np.ndarray
    g_lateral: np.ndarray

    def data_norm(self) -> float:
        """Discrete ||f||_{L2} + ||g||_{L2(Sigma)}."""
        g = self.grid
        fn = math.sqrt(float(np.sum(self.f_cell**2 * g.cell_volumes)))
        gn = math.sqrt(float(np.sum(self.g_lateral**2 * g.lateral_faces.areas))) if len(self.g_lateral) else 0.0
        return fn + gn


def _check_tabulated(fld, lo: float, hi: float):
    for leaf in iter_leaves(fld):
        if isinstance(leaf, Tabulated) and (leaf.x1[0] > lo + 1e-12 or leaf.x1[-1] < hi - 1e-12):
            raise ValueError(
                f"tabulated field covers [{leaf.x1[0]}, {leaf.x1[-1]}] but the grid samples [{lo}, {hi}]"
            )


def sample_on_grid(model: CoefficientModel, grid, zone: Zone | None = None) -> CoefficientTable:
    """Sample ``model`` on a cylinder grid, or on a cell grid for one periodic ``zone``.

    On a cell grid the coordinates are shifted into the zone (x1 - 2 for the left
    zone, x1 + 1 for the right) and sources vanish.
    """
    if model.dim != grid.dim:
        raise ValueError(f"model dimension {model.dim} does not match grid dimension {grid.dim}")
    if not isinstance(grid, CellGrid):
        for fld in (model.f, model.g):
            if fld is not None:
                _check_tabulated(fld, grid.lo, grid.hi)

    faces = grid.interior_faces
    if isinstance(grid, CellGrid):
        if zone not in (Zone.LEFT, Zone.RIGHT):
            raise ValueError("cell-grid sampling needs zone LEFT or RIGHT")
        shift = -2.0 if zone == Zone.LEFT else 1.0

        def ev(zf, pts):
            y = pts.copy()
            y[:, 0] += shift
            return zf.eval_zone(zone, y)

        f_cell = np.zeros(grid.n_cells)
        g_lat = np.zeros(len(grid.lateral_faces))
    else:
        def ev(zf, pts):
            return zf(pts)

        f_cell = model.f(grid.cell_centers) if model.f is not None else np.zeros(grid.n_cells)
        lat = grid.lateral_faces
        g_lat = model.g(lat.centers) if (model.g is not None and len(lat)) else np.zeros(len(lat))

    a_cell = ev(model.a, grid.cell_centers)
    b_cell = ev(model.b, grid.cell_centers)
    a_face = 0.5 * (a_cell[faces.left, faces.axis] + a_cell[faces.right, faces.axis])
    b_face = ev(model.b, faces.centers)[np.arange(len(faces)), faces.axis]

    bl, br = grid.base_faces_left, grid.base_faces_right
    a_bl = a_cell[bl.cells, 0]
    a_br = a_cell[br.cells, 0]
    b_bl = ev(model.b, bl.centers)[:, 0] if len(bl) else np.zeros(0)
    b_br = ev(model.b, br.centers)[:, 0] if len(br) else np.zeros(0)

    table = CoefficientTable(grid, a_cell, b_cell, a_face, b_face, a_bl, b_bl, a_br, b_br, f_cell, g_lat)
    if model.ellipticity is not None:
        lam = float(np.min(a_cell))
        if lam < model.ellipticity:
            raise NonElliptic(f"sampled diffusion {lam:g} below declared ellipticity {model.ellipticity:g}")
    return table


def verify_ellipticity(table: CoefficientTable) -> float:
    """Smallest sampled diagonal diffusion entry; raises :class:`NonElliptic` if not positive."""
    lam = float(min(np.min(table.a_cell), np.min(table.a_face) if len(table.a_face) else np.inf))
    if not lam > 0:
        raise NonElliptic(f"diffusion coefficient is not positive (min sampled value {lam:g})")
    return lam


@dataclass
class DecayReport:
    C0: float
    gamma0: float
    windows: list  # (n, ||f||_{G_n^{n+1}}, ||g||_{Sigma_n^{n+1}})
    passed: bool
    compact_support: bool = False


def window_norms(grid: CylinderGrid, cell_values, lateral_values=None):
    """L2 norms of cell data (and lateral face data) on unit windows (n, n+1)."""
    n_lo, n_hi = int(math.floor(grid.lo + 1e-12)), int(math.ceil(grid.hi - 1e-12))
    x = grid.cell_centers[:, 0]
    lat = grid.lateral_faces
    xl = lat.centers[:, 0] if len(lat) else np.zeros(0)
    out = []
    for n in range(n_lo, n_hi):
        sel = (x > n) & (x < n + 1)
        if not np.any(sel):
            continue
        fn = math.sqrt(float(np.sum(cell_values[sel] ** 2 * grid.cell_volumes[sel])))
        gn = 0.0
        if lateral_values is not None and len(xl):
            sl = (xl > n) & (xl < n + 1)
            gn = math.sqrt(float(np.sum(lateral_values[sl] ** 2 * lat.areas[sl])))
        out.append((n, fn, gn))
    return out


def verify_decay(model: CoefficientModel, grid: CylinderGrid, floor: float = 1e-13,
                 min_rate: float = 1e-6) -> DecayReport:
    """Fit ``||f||_{G_n^{n+1}} + ||g||_{Sigma_n^{n+1}} <= C0 exp(-gamma0 dist)`` over unit windows.

    ``dist`` is the distance of the window from the origin, min(|n|, |n+1|).
    """
    table = sample_on_grid(model, grid)
    wins = window_norms(grid, table.f_cell, table.g_lateral)
    if min(sum(1 for n, *_ in wins if n >= 0), sum(1 for n, *_ in wins if n < 0)) < 4:
        raise ValueError("decay check needs at least 4 unit windows per side")
    dist = np.array([min(abs(n), abs(n + 1)) for n, *_ in wins], dtype=float)
    tot = np.array([fn + gn for _, fn, gn in wins])
    keep = tot > floor
    if not np.any(keep):
        return DecayReport(0.0, math.inf, wins, True, compact_support=True)
    outer = [i for i, (n, *_ ) in enumerate(wins) if n == wins[0][0] or n == wins[-1][0]]
    if not np.any(keep[outer]):
        return DecayReport(float(tot.max()), math.inf, wins, True, compact_support=True)
    if len(np.unique(dist[keep])) < 2:
        return DecayReport(float(tot.max()), 0.0, wins, False)
    slope, intercept = np.polyfit(dist[keep], np.log(tot[keep]), 1)
    gamma0 = -float(slope)
    return DecayReport(float(math.exp(intercept)), gamma0, wins, gamma0 > min_rate)
