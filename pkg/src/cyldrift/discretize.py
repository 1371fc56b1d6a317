"""Finite-volume assembly of the convection-diffusion operator and its discrete adjoint.

The stored ``matrix`` is the pointwise operator (integrated cell balance divided
by the cell volume), so ``A @ u`` approximates ``-div(a grad u) + b . grad u`` at
cell centers. Right-hand sides are integrated cell balances; linear solves use
``W @ A`` where ``W`` holds the cell volumes. With this convention the discrete
adjoint ``W^-1 A^T W`` has the kernel that annihilates every compatible
integrated right-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientTable
from .errors import AdjointOfDirichlet, SchemeError


class Scheme(str, Enum):
    UPWIND = "upwind"
    CENTRAL = "central"


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed base values: a scalar or one value per cross-section cell."""

    value: Union[float, tuple] = 0.0

    def values(self, n_cross: int) -> np.ndarray:
        v = np.asarray(self.value, dtype=float)
        return np.full(n_cross, float(v)) if v.ndim == 0 else v.reshape(n_cross)


@dataclass(frozen=True)
class ConormalZero:
    """Homogeneous conormal (natural) condition on a base."""


@dataclass(frozen=True)
class BaseCondition:
    left: Union[Dirichlet, ConormalZero]
    right: Union[Dirichlet, ConormalZero]

    @classmethod
    def dirichlet(cls, k_minus: float = 0.0, k_plus: float = 0.0) -> "BaseCondition":
        return cls(Dirichlet(k_minus), Dirichlet(k_plus))

    @classmethod
    def neumann(cls) -> "BaseCondition":
        return cls(ConormalZero(), ConormalZero())

    @property
    def has_dirichlet(self) -> bool:
        return isinstance(self.left, Dirichlet) or isinstance(self.right, Dirichlet)


@dataclass(frozen=True)
class DiscreteOperator:
    matrix: sp.csr_matrix
    weights: np.ndarray
    base_condition: BaseCondition | None
    scheme: Scheme
    adjoint: bool = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def integrated(self) -> sp.csr_matrix:
        return sp.csr_matrix(sp.diags(self.weights) @ self.matrix)

    @property
    def singular(self) -> bool:
        """Pure conormal/periodic operators have a one-dimensional kernel."""
        return self.base_condition is None or not self.base_condition.has_dirichlet


def _convective(beta: np.ndarray, area: np.ndarray, scheme: Scheme):
    """(diagonal, off-diagonal) coefficients of the flux ``area * beta * (u_face - u_P)``.

    ``beta`` is the outward normal drift seen from the owning cell P.
    """
    if scheme == Scheme.UPWIND:
        off = area * np.minimum(beta, 0.0)
    else:
        off = 0.5 * area * beta
    return -off, off


def _dirichlet_terms(grid, table: CoefficientTable, bc: BaseCondition, scheme: Scheme):
    """Diagonal additions and integrated rhs contributions of eliminated Dirichlet bases."""
    diag = np.zeros(grid.n_cells)
    rhs = np.zeros(grid.n_cells)
    if bc is None:
        return diag, rhs
    sides = (
        (bc.left, grid.base_faces_left, table.a_base_left, table.b_base_left),
        (bc.right, grid.base_faces_right, table.a_base_right, table.b_base_right),
    )
    for cond, faces, a, b in sides:
        if not isinstance(cond, Dirichlet) or len(faces) == 0:
            continue
        K = cond.values(grid.n_cross)
        D = a * faces.areas / (0.5 * grid.h)
        beta = b * faces.sign
        if scheme == Scheme.UPWIND:
            c = -faces.areas * np.minimum(beta, 0.0)
        else:
            c = -0.5 * faces.areas * beta
        np.add.at(diag, faces.cells, D + c)
        np.add.at(rhs, faces.cells, (D + c) * K)
    return diag, rhs


def assemble_primal(grid, table: CoefficientTable, bc: BaseCondition | None,
                    scheme: Scheme | str = Scheme.UPWIND,
                    certify_positivity: bool = False) -> DiscreteOperator:
    """Two-point-flux assembly of ``A u = -div(a grad u) + b . grad u``.

    Lateral faces carry no flux (the lateral datum ``g`` enters the right-hand
    side only). ``bc`` is ignored for periodic cell grids and may be None there.
    """
    scheme = Scheme(scheme)
    if certify_positivity and scheme == Scheme.CENTRAL:
        raise SchemeError("the central scheme cannot certify positivity (no M-matrix structure)")
    if table.grid is not grid:
        raise ValueError("coefficient table was sampled on a different grid")
    if grid.periodic:
        bc = None
    elif bc is None:
        raise ValueError("a base condition is required on a cylinder grid")

    fc = grid.interior_faces
    D = table.a_face * fc.areas / fc.dist
    dl, ol = _convective(table.b_face, fc.areas, scheme)   # seen from the left cell
    dr, or_ = _convective(-table.b_face, fc.areas, scheme)  # seen from the right cell

    n = grid.n_cells
    diag = np.zeros(n)
    np.add.at(diag, fc.left, D + dl)
    np.add.at(diag, fc.right, D + dr)
    bdiag, _ = _dirichlet_terms(grid, table, bc, scheme)
    diag += bdiag

    rows = np.concatenate([np.arange(n), fc.left, fc.right])
    cols = np.concatenate([np.arange(n), fc.right, fc.left])
    vals = np.concatenate([diag, -D + ol, -D + or_])
    vol = grid.cell_volumes
    M = sp.csr_matrix((vals / vol[rows], (rows, cols)), shape=(n, n))
    M.sum_duplicates()
    return DiscreteOperator(M, vol.copy(), bc, scheme)


def assemble_rhs(grid, table: CoefficientTable, bc: BaseCondition | None,
                 scheme: Scheme | str = Scheme.UPWIND) -> np.ndarray:
    """Integrated cell balance: ``f vol + sum(g area over lateral faces) + base terms``."""
    scheme = Scheme(scheme)
    rhs = table.f_cell * grid.cell_volumes
    lat = grid.lateral_faces
    if len(lat):
        np.add.at(rhs, lat.cells, table.g_lateral * lat.areas)
    if not grid.periodic:
        rhs = rhs + _dirichlet_terms(grid, table, bc, scheme)[1]
    return rhs


def discrete_adjoint(op: DiscreteOperator) -> DiscreteOperator:
    """Weighted transpose ``W^-1 A^T W``: the operator with <A u, p>_W = <u, A* p>_W."""
    if op.base_condition is not None and op.base_condition.has_dirichlet:
        raise AdjointOfDirichlet("the adjoint is only formed for conormal or periodic bases")
    W = op.weights
    At = sp.csr_matrix(sp.diags(1.0 / W) @ op.matrix.T @ sp.diags(W))
    return DiscreteOperator(At, W, op.base_condition, op.scheme, adjoint=not op.adjoint)


def weighted_inner(u, v, w) -> float:
    return float(np.sum(w * u * v))


def axial_adjoint_flux(grid, table: CoefficientTable, p: np.ndarray, scheme: Scheme | str = Scheme.UPWIND):
    """Flux ``a dp/dx1 + b1 p`` through every axial interior face, as conserved by the discrete adjoint.

    Returns (face indices into ``grid.interior_faces``, flux densities). For the
    upwind scheme the convective part takes ``p`` from the downstream cell, which
    is the transpose of donor-cell upwinding; the central scheme averages.
    """
    scheme = Scheme(scheme)
    fc = grid.interior_faces
    sel = np.flatnonzero(fc.axis == 0)
    pl, pr = p[fc.left[sel]], p[fc.right[sel]]
    b = table.b_face[sel]
    diff = table.a_face[sel] * (pr - pl) / fc.dist[sel]
    if scheme == Scheme.UPWIND:
        conv = np.maximum(b, 0.0) * pr + np.minimum(b, 0.0) * pl
    else:
        conv = 0.5 * b * (pl + pr)
    return sel, diff + conv
