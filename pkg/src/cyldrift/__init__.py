"""Convection-diffusion problems in infinite cylinders with periodic ends.

Typical use::

    from cyldrift import InfiniteOptions, solve_infinite
    from cyldrift.demos import example2_model

    sol = solve_infinite(example2_model(), opts=InfiniteOptions(k_sequence=(6, 8)))
"""
from .cell import (
    Normalization,
    RegimeCase,
    RegimeTag,
    classify_regime,
    compute_drifts,
    effective_drift,
    solve_cell_ground_state,
)
from .coefficients import (
    CoefficientModel,
    Constant,
    FieldSum,
    FourierAxial,
    FourierBox,
    IndicatorAxial,
    SignAxial,
    Tabulated,
    ZoneFields,
    sample_on_grid,
    verify_decay,
)
from .config import RunConfig, parse_config
from .cylinder import (
    InfiniteOptions,
    build_problem,
    fit_stabilization,
    solve_adjoint_truncated,
    solve_infinite,
    solve_semi_infinite,
    solve_truncated_dirichlet,
    solve_truncated_neumann,
)
from .discretize import BaseCondition, ConormalZero, Dirichlet, Scheme, assemble_primal, assemble_rhs, discrete_adjoint
from .geometry import CrossSection, build_cell_grid, build_cylinder_grid
from .linalg import Anchor, SolveOptions, ground_state, solve_linear

__version__ = "0.1.0"
