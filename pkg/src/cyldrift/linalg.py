"""Sparse solves, anchored pure-Neumann systems and the adjoint ground state."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretize import DiscreteOperator
from .errors import (
    IterationLimitExceeded,
    NonPositiveGroundState,
    ResidualTooLarge,
    SingularWithoutAnchor,
)

log = logging.getLogger(__name__)

# above this many unknowns the default switches to the iterative method
DIRECT_SIZE_LIMIT = 200_000


class Method(str, Enum):
    DIRECT = "direct"
    ITERATIVE = "iterative"


@dataclass(frozen=True)
class SolveOptions:
    method: Method | None = None  # None: direct unless the system is large
    tol: float = 1e-10
    max_iter: int = 10000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.method is not None:
            object.__setattr__(self, "method", Method(self.method))

    def method_for(self, n: int) -> Method:
        if self.method is not None:
            return self.method
        return Method.DIRECT if n <= DIRECT_SIZE_LIMIT else Method.ITERATIVE


@dataclass(frozen=True)
class Anchor:
    """Constraint ``sum(w_i x_i) / sum(w_i) = value`` over ``indices``."""

    indices: np.ndarray
    weights: np.ndarray | None = None
    value: float = 0.0

    def row(self, n: int) -> np.ndarray:
        w = np.zeros(n)
        ww = np.ones(len(self.indices)) if self.weights is None else np.asarray(self.weights, float)
        w[np.asarray(self.indices)] = ww / ww.sum()
        return w


@dataclass
class GroundStateResult:
    vector: np.ndarray
    residual: float
    iterations: int


def _as_system(op):
    if isinstance(op, DiscreteOperator):
        return op.integrated, op.singular, op.weights
    M = sp.csr_matrix(op)
    return M, False, np.ones(M.shape[0])


def _inf_norm(M) -> float:
    return float(abs(M).sum(axis=1).max()) if M.nnz else 0.0


def _direct(M, rhs):
    try:
        lu = spla.splu(sp.csc_matrix(M))
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SingularWithoutAnchor(str(exc)) from None
    return lu.solve(rhs)


def _iterative(M, rhs, opts: SolveOptions):
    d = M.diagonal()
    d = np.where(np.abs(d) > 0, d, 1.0)
    prec = spla.LinearOperator(M.shape, matvec=lambda v: v / d)
    x, info = spla.bicgstab(M, rhs, rtol=opts.tol * 1e-2, atol=0.0, maxiter=opts.max_iter, M=prec)
    if info > 0:
        raise IterationLimitExceeded(f"BiCGSTAB did not converge in {opts.max_iter} iterations")
    if info < 0:
        raise ResidualTooLarge("BiCGSTAB breakdown")
    return x


def solve_linear(op, rhs, opts: SolveOptions | None = None, anchor: Anchor | None = None) -> np.ndarray:
    """Solve ``(W A) x = rhs``; ``op`` is a :class:`DiscreteOperator` or a plain matrix.

    Singular conormal systems need an ``anchor``. They are solved through the
    bordered matrix ``[[W A, W 1], [anchor_row, 0]]``, which is nonsingular when
    the left kernel of ``W A`` is a positive vector; the extra multiplier absorbs
    any incompatible part of ``rhs``, and that shows up as a residual failure.
    The iterative method solves the singular system as is and then adds the
    constant that satisfies the anchor.
    """
    opts = opts or SolveOptions()
    M, singular, W = _as_system(op)
    n = M.shape[0]
    rhs = np.asarray(rhs, dtype=float)
    if singular and anchor is None:
        raise SingularWithoutAnchor("operator without Dirichlet bases needs an anchor constraint")

    method = opts.method_for(n + (anchor is not None))
    if anchor is not None and method == Method.ITERATIVE:
        # Krylov iterates stay consistent on a compatible singular system; the
        # kernel of a conormal operator is the constants, so shift afterwards.
        row = anchor.row(n)
        x = _iterative(M, rhs, opts)
        x = x + (anchor.value - row @ x)
    elif anchor is not None:
        row = anchor.row(n)
        col = W / W.sum() * _inf_norm(M)
        A = sp.bmat([[M, sp.csr_matrix(col[:, None])], [sp.csr_matrix(row[None, :]), None]], format="csr")
        x = _direct(A, np.concatenate([rhs, [anchor.value]]))[:n]
    else:
        x = _direct(M, rhs) if method == Method.DIRECT else _iterative(M, rhs, opts)
    if not np.all(np.isfinite(x)):
        raise SingularWithoutAnchor("solve produced non-finite values (singular system?)")

    res = float(np.max(np.abs(M @ x - rhs))) if n else 0.0
    scale = float(np.max(np.abs(rhs), initial=0.0)) + _inf_norm(M) * float(np.max(np.abs(x), initial=0.0))
    if res > opts.tol * max(scale, np.finfo(float).tiny):
        raise ResidualTooLarge(f"residual {res:.3e} exceeds {opts.tol:g} x {scale:.3e}")
    if anchor is not None:
        got = float(anchor.row(n) @ x)
        if abs(got - anchor.value) > 1e-12 * max(1.0, float(np.max(np.abs(x), initial=0.0))):
            raise ResidualTooLarge(f"anchor violated: {got!r} != {anchor.value!r}")
    return x


def ground_state(adj: DiscreteOperator, opts: SolveOptions | None = None,
                 x0: np.ndarray | None = None, shift: float = 1e-8) -> GroundStateResult:
    """Positive kernel vector of ``adj`` by shifted inverse power iteration.

    Iterates ``x <- (A* + sigma I)^-1 x`` with ``sigma = shift * ||A*||_inf``,
    normalizing to unit max norm, from the all-ones vector unless ``x0`` is
    given. The shifted matrix is factored once with a sparse direct LU
    regardless of ``opts.method``. ``residual`` is ``||A* p||_inf / ||A*||_inf``.
    """
    opts = opts or SolveOptions()
    A = adj.matrix
    n = A.shape[0]
    norm = _inf_norm(A)
    if norm == 0.0:
        return GroundStateResult(np.ones(n), 0.0, 0)
    sigma = shift * norm
    lu = spla.splu(sp.csc_matrix(A + sigma * sp.identity(n, format="csr")))
    x = np.ones(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    x /= x[np.argmax(np.abs(x))]
    for it in range(1, opts.max_iter + 1):
        y = lu.solve(x)
        y /= y[np.argmax(np.abs(y))]
        step = float(np.max(np.abs(y - x)))
        x = y
        if step < opts.tol:
            break
    else:
        raise IterationLimitExceeded(f"inverse power iteration stalled after {opts.max_iter} steps")

    if np.min(x) <= 0.0:
        raise NonPositiveGroundState(
            f"ground state has non-positive entries (min {np.min(x):.3e}); "
            "is the operator an M-matrix (upwind scheme)?"
        )
    residual = float(np.max(np.abs(A @ x))) / norm
    if residual > opts.tol:
        raise ResidualTooLarge(f"ground-state residual {residual:.3e} above {opts.tol:g}")
    return GroundStateResult(x, residual, it)
