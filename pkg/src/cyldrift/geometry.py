"""Tensor-product finite-volume grids on truncated cylinders and periodicity cells.

Cells are numbered axial-major: ``index = i_axial * n_cross + j_cross`` with the
cross-section multi-index flattened in C order. This keeps the bandwidth of
assembled operators equal to the number of cross-section cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property

import numpy as np

from .errors import GridError

_UNIT_TOL = 1e-9


class Zone(IntEnum):
    LEFT = 0
    MIDDLE = 1
    RIGHT = 2


def zone_of(x1: np.ndarray) -> np.ndarray:
    """Zone label per axial coordinate; the interface points +-1 belong to the middle."""
    x1 = np.asarray(x1, dtype=float)
    out = np.full(x1.shape, int(Zone.MIDDLE), dtype=np.int8)
    out[x1 < -1.0] = Zone.LEFT
    out[x1 > 1.0] = Zone.RIGHT
    return out


@dataclass(frozen=True)
class CrossSection:
    """Axis-aligned box Q in R^(d-1) with a uniform tensor grid.

    ``dim == 0`` is the degenerate 1D cylinder: Q is a point with unit measure
    and no lateral boundary.
    """

    extents: tuple[tuple[float, float], ...] = ()
    cells_per_axis: tuple[int, ...] = ()

    def __post_init__(self):
        ext = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        cpa = tuple(int(c) for c in self.cells_per_axis)
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "cells_per_axis", cpa)
        if len(ext) != len(cpa):
            raise GridError(
                f"extents has {len(ext)} axes but cells_per_axis has {len(cpa)}"
            )
        for j, (lo, hi) in enumerate(ext):
            if not hi > lo:
                raise GridError(f"cross_section.extents[{j}]: need hi > lo, got ({lo}, {hi})")
        for j, c in enumerate(cpa):
            if c < 1:
                raise GridError(f"cross_section.cells_per_axis[{j}] must be positive, got {c}")

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.extents, self.cells_per_axis)])

    @property
    def measure(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.extents])) if self.dim else 1.0

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells_per_axis)) if self.dim else 1

    @property
    def cell_area(self) -> float:
        return float(np.prod(self.spacing)) if self.dim else 1.0

    @cached_property
    def multi_index(self) -> np.ndarray:
        """(n_cells, dim) integer multi-indices in C order."""
        if self.dim == 0:
            return np.zeros((1, 0), dtype=int)
        grids = np.meshgrid(*[np.arange(n) for n in self.cells_per_axis], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @cached_property
    def centers(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros((1, 0))
        lo = np.array([e[0] for e in self.extents])
        return lo + (self.multi_index + 0.5) * self.spacing

    def flat(self, multi: np.ndarray) -> np.ndarray:
        if self.dim == 0:
            return np.zeros(len(multi), dtype=int)
        return np.ravel_multi_index(tuple(multi.T), self.cells_per_axis)


@dataclass(frozen=True)
class FaceSet:
    """Boundary faces, each attached to a single cell.

    ``axis`` is the coordinate axis of the normal (0 is x1) and ``sign`` the
    orientation of the outward normal along it.
    """

    cells: np.ndarray
    areas: np.ndarray
    axis: np.ndarray
    sign: np.ndarray
    centers: np.ndarray

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class InteriorFaces:
    """Faces shared by two cells; the normal points from ``left`` to ``right`` along ``axis``."""

    left: np.ndarray
    right: np.ndarray
    axis: np.ndarray
    areas: np.ndarray
    dist: np.ndarray
    centers: np.ndarray

    def __len__(self):
        return len(self.left)


def _empty_faces(d: int) -> FaceSet:
    return FaceSet(
        np.zeros(0, dtype=int), np.zeros(0), np.zeros(0, dtype=int), np.zeros(0, dtype=int),
        np.zeros((0, d)),
    )


@dataclass(frozen=True)
class _TensorGrid:
    lo: float
    axial_cells: int
    h: float
    cross_section: CrossSection
    periodic: bool = field(default=False, init=False)

    @property
    def dim(self) -> int:
        return self.cross_section.dim + 1

    @property
    def n_cross(self) -> int:
        return self.cross_section.n_cells

    @property
    def n_cells(self) -> int:
        return self.axial_cells * self.n_cross

    @property
    def hi(self) -> float:
        return self.lo + self.axial_cells * self.h

    @cached_property
    def x1(self) -> np.ndarray:
        """Axial centers of the slabs."""
        return self.lo + (np.arange(self.axial_cells) + 0.5) * self.h

    @cached_property
    def axial_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.axial_cells), self.n_cross)

    @cached_property
    def cross_index(self) -> np.ndarray:
        return np.tile(np.arange(self.n_cross), self.axial_cells)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        c = np.empty((self.n_cells, self.dim))
        c[:, 0] = self.x1[self.axial_index]
        c[:, 1:] = self.cross_section.centers[self.cross_index]
        return c

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        return np.full(self.n_cells, self.h * self.cross_section.cell_area)

    def index(self, i_axial, j_cross):
        return np.asarray(i_axial) * self.n_cross + np.asarray(j_cross)

    @cached_property
    def interior_faces(self) -> InteriorFaces:
        cs = self.cross_section
        n_ax, n_cr = self.axial_cells, self.n_cross
        lefts, rights, axes, areas, dists, centers = [], [], [], [], [], []

        # axial faces
        i = np.arange(n_ax if self.periodic else n_ax - 1)
        ii, jj = np.meshgrid(i, np.arange(n_cr), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        lefts.append(self.index(ii, jj))
        rights.append(self.index((ii + 1) % n_ax, jj))
        m = len(ii)
        axes.append(np.zeros(m, dtype=int))
        areas.append(np.full(m, cs.cell_area))
        dists.append(np.full(m, self.h))
        xf = self.lo + (ii + 1) * self.h
        if self.periodic:
            xf = np.where(ii == n_ax - 1, self.lo, xf)
        c = np.empty((m, self.dim))
        c[:, 0] = xf
        c[:, 1:] = cs.centers[jj]
        centers.append(c)

        # cross-section faces, replicated over axial slabs
        sp = cs.spacing
        for ax in range(cs.dim):
            mi = cs.multi_index
            sel = mi[:, ax] < cs.cells_per_axis[ax] - 1
            jl = np.flatnonzero(sel)
            nb = mi[sel].copy()
            nb[:, ax] += 1
            jr = cs.flat(nb)
            ii, kk = np.meshgrid(np.arange(n_ax), np.arange(len(jl)), indexing="ij")
            ii, kk = ii.ravel(), kk.ravel()
            lefts.append(self.index(ii, jl[kk]))
            rights.append(self.index(ii, jr[kk]))
            m = len(ii)
            axes.append(np.full(m, ax + 1))
            areas.append(np.full(m, self.h * cs.cell_area / sp[ax]))
            dists.append(np.full(m, sp[ax]))
            c = np.empty((m, self.dim))
            c[:, 0] = self.x1[ii]
            c[:, 1:] = cs.centers[jl[kk]]
            c[:, 1 + ax] += 0.5 * sp[ax]
            centers.append(c)

        return InteriorFaces(
            np.concatenate(lefts), np.concatenate(rights), np.concatenate(axes),
            np.concatenate(areas), np.concatenate(dists), np.concatenate(centers),
        )

    @cached_property
    def lateral_faces(self) -> FaceSet:
        cs = self.cross_section
        if cs.dim == 0:
            return _empty_faces(self.dim)
        sp = cs.spacing
        out = {k: [] for k in ("cells", "areas", "axis", "sign", "centers")}
        for ax in range(cs.dim):
            for sign, edge in ((-1, 0), (1, cs.cells_per_axis[ax] - 1)):
                js = np.flatnonzero(cs.multi_index[:, ax] == edge)
                ii, kk = np.meshgrid(np.arange(self.axial_cells), np.arange(len(js)), indexing="ij")
                ii, kk = ii.ravel(), kk.ravel()
                m = len(ii)
                out["cells"].append(self.index(ii, js[kk]))
                out["areas"].append(np.full(m, self.h * cs.cell_area / sp[ax]))
                out["axis"].append(np.full(m, ax + 1))
                out["sign"].append(np.full(m, sign))
                c = np.empty((m, self.dim))
                c[:, 0] = self.x1[ii]
                c[:, 1:] = cs.centers[js[kk]]
                c[:, 1 + ax] += sign * 0.5 * sp[ax]
                out["centers"].append(c)
        return FaceSet(*(np.concatenate(out[k]) for k in ("cells", "areas", "axis", "sign", "centers")))

    def _base(self, right: bool) -> FaceSet:
        if self.periodic:
            return _empty_faces(self.dim)
        i = self.axial_cells - 1 if right else 0
        j = np.arange(self.n_cross)
        c = np.empty((self.n_cross, self.dim))
        c[:, 0] = self.hi if right else self.lo
        c[:, 1:] = self.cross_section.centers
        return FaceSet(
            self.index(np.full(self.n_cross, i), j),
            np.full(self.n_cross, self.cross_section.cell_area),
            np.zeros(self.n_cross, dtype=int),
            np.full(self.n_cross, 1 if right else -1),
            c,
        )

    @cached_property
    def base_faces_left(self) -> FaceSet:
        return self._base(False)

    @cached_property
    def base_faces_right(self) -> FaceSet:
        return self._base(True)

    def cells_between(self, a: float, b: float) -> np.ndarray:
        """Indices of cells whose axial center lies in (a, b)."""
        x = self.cell_centers[:, 0]
        return np.flatnonzero((x > a) & (x < b))


@dataclass(frozen=True)
class CylinderGrid(_TensorGrid):
    """Grid on the finite cylinder (lo, hi) x Q; symmetric grids have lo = -k."""

    @property
    def half_length(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @cached_property
    def zone_of_cell(self) -> np.ndarray:
        return zone_of(self.cell_centers[:, 0])

    @property
    def cells_per_unit(self) -> int:
        return int(round(1.0 / self.h))


@dataclass(frozen=True)
class CellGrid(_TensorGrid):
    """Periodicity cell T^1 x Q; the axial direction wraps around with period 1."""

    def __post_init__(self):
        object.__setattr__(self, "periodic", True)

    def axial_neighbor(self, i_axial: int, step: int = 1) -> int:
        return (i_axial + step) % self.axial_cells


def _check_unit_divisible(axial_cells: int, length: float) -> int:
    per_unit = axial_cells / length
    if abs(per_unit - round(per_unit)) > _UNIT_TOL * max(1.0, per_unit) or round(per_unit) < 1:
        raise GridError(
            f"axial spacing {length / axial_cells:g} does not divide the unit period "
            f"({per_unit:g} cells per unit length)"
        )
    return int(round(per_unit))


def build_cylinder_grid(k: float, axial_cells: int, cs: CrossSection) -> CylinderGrid:
    """Uniform grid on G_{-k}^k = (-k, k) x Q."""
    k = float(k)
    if k < 2:
        raise GridError(f"half length k must be >= 2 so all three zones are nonempty, got {k}")
    if axial_cells < 4:
        raise GridError(f"axial_cells must be >= 4, got {axial_cells}")
    per_unit = _check_unit_divisible(axial_cells, 2 * k)
    if abs(k * per_unit - round(k * per_unit)) > _UNIT_TOL * max(1.0, k * per_unit):
        raise GridError(f"k={k:g} is not a multiple of the axial spacing; faces would miss x1 = +-1")
    return CylinderGrid(lo=-k, axial_cells=int(axial_cells), h=2 * k / axial_cells, cross_section=cs)


def build_segment_grid(lo: float, hi: float, cells_per_unit: int, cs: CrossSection) -> CylinderGrid:
    """Uniform grid on (lo, hi) x Q for arbitrary (e.g. semi-infinite truncated) segments."""
    length = float(hi) - float(lo)
    if length <= 0:
        raise GridError(f"need hi > lo, got ({lo}, {hi})")
    n = length * cells_per_unit
    if abs(n - round(n)) > _UNIT_TOL * max(1.0, n) or round(n) < 2:
        raise GridError(f"segment length {length:g} is not a multiple of 1/{cells_per_unit}")
    n = int(round(n))
    return CylinderGrid(lo=float(lo), axial_cells=n, h=length / n, cross_section=cs)


def build_cell_grid(axial_cells: int, cs: CrossSection) -> CellGrid:
    if axial_cells < 2:
        raise GridError(f"periodic cell needs at least 2 axial cells, got {axial_cells}")
    return CellGrid(lo=0.0, axial_cells=int(axial_cells), h=1.0 / axial_cells, cross_section=cs)
