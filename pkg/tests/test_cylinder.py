import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cyldrift.cell import Normalization, RegimeTag, classify_regime
from cyldrift.coefficients import (
    CoefficientModel,
    Constant,
    FieldSum,
    FourierAxial,
    FourierBox,
    IndicatorAxial,
    SignAxial,
    Tabulated,
    ZoneFields,
)
from cyldrift.cylinder import (
    ExponentialRate,
    InfiniteOptions,
    PeriodicStabilization,
    base_smallness_check,
    build_problem,
    compatibility_residual,
    fit_base_decay,
    fit_stabilization,
    monotonicity_profile,
    solve_adjoint_truncated,
    solve_infinite,
    solve_semi_infinite,
    solve_truncated_dirichlet,
    solve_truncated_neumann,
)
from cyldrift.demos import (
    EXAMPLE2_JUMP,
    example1_model,
    example1_solution,
    example1_sup,
    example2_adjoint,
    example2_model,
    example2_solution,
)
from cyldrift.errors import IncompatibleData, InsufficientWindows
from cyldrift.geometry import CrossSection, build_segment_grid

from conftest import cross_section, random_model
from oracles import example1_bvp, semi_negative_drift, two_parameter_toy

SIGN = ZoneFields((Constant(-1.0),), (SignAxial(1.0),), (Constant(1.0),))


def model_1d(b, f=Constant(0.0), a=Constant(1.0)):
    return CoefficientModel(1, ZoneFields.uniform([a]), b, f=f)


def flat(value):
    return ZoneFields.uniform([Constant(value)])


# ---------------------------------------------------------------- Dirichlet truncations


@given(c=st.floats(-5, 5), seed=st.integers(0, 1000))
def test_dirichlet_constant_data(c, seed):
    m = random_model(np.random.default_rng(seed), 1, drift_signs=(1, -1), source=False)
    prob = build_problem(m, 3, 16)
    np.testing.assert_allclose(solve_truncated_dirichlet(prob, c, c), c, atol=1e-12 * max(1, abs(c)))


def test_dirichlet_harmonic_is_linear():
    prob = build_problem(model_1d(flat(0.0)), 4, 16)
    u = solve_truncated_dirichlet(prob, -2.0, 3.0)
    x = prob.grid.x1
    np.testing.assert_allclose(u, -2.0 + 5.0 * (x + 4) / 8, atol=1e-10)


def test_example1_closed_form_against_bvp_oracle():
    for k in (4, 6):
        sol = example1_bvp(k)
        x = np.linspace(-k, k, 401)
        ref = sol(x)
        np.testing.assert_allclose(example1_solution(x, k), ref, rtol=1e-5, atol=1e-6 * example1_sup(k))
        assert abs(np.max(np.abs(ref)) - example1_sup(k)) <= 1e-5 * example1_sup(k)


def test_example1_fv_converges_to_oracle():
    errs = []
    for cpu in (16, 32, 64):
        prob = build_problem(example1_model(), 5, cpu)
        u = solve_truncated_dirichlet(prob)
        errs.append(np.max(np.abs(u - example1_solution(prob.grid.x1, 5))) / example1_sup(5))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05


def test_example1_growth():
    sups = [np.max(np.abs(solve_truncated_dirichlet(build_problem(example1_model(), k, 32)))) for k in range(4, 9)]
    ratios = np.array(sups[1:]) / np.array(sups[:-1])
    assert np.all(ratios >= 2)
    np.testing.assert_allclose(ratios, math.e, rtol=0.02)


def test_example1_is_incompatible_in_the_limit():
    with pytest.raises(IncompatibleData) as info:
        solve_infinite(example1_model(), opts=InfiniteOptions(k_sequence=(6, 8), cells_per_unit=32))
    assert info.value.report.functional < 0


# ---------------------------------------------------------------- adjoint state


def test_adjoint_no_drift():
    m = model_1d(flat(0.0))
    prob = build_problem(m, 6, 16, regime=classify_regime(0.0, 0.0))
    st_ = solve_adjoint_truncated(prob)
    np.testing.assert_allclose(st_.p_values, 1.0, atol=1e-12)
    for side in ("left", "right"):
        fit = st_.side(side)
        assert isinstance(fit, PeriodicStabilization)
        assert fit.distance <= 1e-10 and fit.stabilized


def test_adjoint_example2():
    prob = build_problem(example2_model(), 8, 64, regime=classify_regime(-1.0, 1.0))
    st_ = solve_adjoint_truncated(prob)
    p = st_.normalized(Normalization.MAX_ONE)
    assert np.max(np.abs(p - example2_adjoint(prob.grid.x1))) < 0.02
    for side in ("left", "right"):
        fit = st_.side(side)
        assert isinstance(fit, ExponentialRate)
        assert abs(fit.delta - 1.0) <= 0.05 and fit.r2 > 0.999
    integral = st_.normalized(Normalization.INTEGRAL_ONE)
    assert np.sum(integral * prob.grid.cell_volumes) == pytest.approx(1.0, rel=1e-14)


def mixed_model():
    b = ZoneFields((Constant(-1.0),), (Tabulated((-1.0, 1.0), (-1.0, 0.0)),), (Constant(0.0),))
    return model_1d(b)


def test_adjoint_mixed_left_exponential_right_periodic():
    prob = build_problem(mixed_model(), 8, 64, regime=classify_regime(-1.0, 0.0))
    st_ = solve_adjoint_truncated(prob)
    assert isinstance(st_.left, ExponentialRate) and abs(st_.left.delta - 1.0) <= 0.1
    assert isinstance(st_.right, PeriodicStabilization) and st_.right.distance <= 10 * prob.grid.h
    # the right tail is flat: the periodic ground state with zero drift is constant
    np.testing.assert_allclose(st_.right.reference, st_.right.reference[0], rtol=1e-10)


def test_adjoint_needs_model_for_zero_side():
    prob = build_problem(model_1d(flat(0.0)), 4, 8, regime=classify_regime(0.0, 0.0))
    with pytest.raises(ValueError):
        solve_adjoint_truncated(replace(prob, model=None))


def test_monotonicity_example2_and_constant():
    prob = build_problem(example2_model(), 6, 64, regime=classify_regime(-1.0, 1.0))
    beta, prof = monotonicity_profile(solve_adjoint_truncated(prob))
    assert beta <= 1 + 5 * prob.grid.h
    assert prof[0][0] < prof[-1][0]
    const = solve_adjoint_truncated(build_problem(model_1d(flat(0.0)), 4, 8))
    assert monotonicity_profile(const)[0] == pytest.approx(1.0, abs=1e-12)


def test_monotonicity_2d_cross_variation():
    cs = CrossSection(((0.0, 1.0),), (4,))
    prof = FourierBox(1.0, ((0, math.pi, 0.2, 0.0),))
    b1 = ZoneFields((FourierAxial(((0, -1.0, 0.0),), prof),), (SignAxial(1.0),), (FourierAxial(((0, 1.0, 0.0),), prof),))
    m = CoefficientModel(2, ZoneFields.uniform([Constant(1.0), Constant(1.0)]),
                         ZoneFields(b1.left + (Constant(0.0),), b1.middle + (Constant(0.0),), b1.right + (Constant(0.0),)))
    prob = build_problem(m, 4, 16, cs, regime=classify_regime(-1.0, 1.0))
    beta, _ = monotonicity_profile(solve_adjoint_truncated(prob))
    assert math.isfinite(beta) and beta >= 1.0


def test_base_smallness_example2():
    base = []
    for k in (4, 6, 8):
        prob = build_problem(example2_model(), k, 64, regime=classify_regime(-1.0, 1.0))
        chk = base_smallness_check(solve_adjoint_truncated(prob), prob.regime)
        assert not chk.skipped
        base.append(max(chk.left, chk.right))
    assert abs(fit_base_decay([4, 6, 8], base) - 1.0) <= 0.15


def test_base_smallness_skipped():
    prob = build_problem(mixed_model(), 4, 16, regime=classify_regime(-1.0, 0.0))
    assert base_smallness_check(solve_adjoint_truncated(prob), prob.regime).skipped
    prob = build_problem(model_1d(flat(0.0)), 4, 16, regime=classify_regime(0.0, 0.0))
    assert base_smallness_check(solve_adjoint_truncated(prob), prob.regime).skipped


# ---------------------------------------------------------------- compatibility


def test_compatibility_residual_cases():
    prob = build_problem(example2_model(), 8, 64)
    st_ = solve_adjoint_truncated(prob)
    assert abs(compatibility_residual(st_, prob.grid, prob.table)) <= 1e-3
    zero = build_problem(model_1d(SIGN), 4, 16)
    assert compatibility_residual(solve_adjoint_truncated(zero), zero.grid, zero.table) == 0.0


def test_neumann_zero_data():
    prob = build_problem(model_1d(SIGN), 4, 16)
    u, rep = solve_truncated_neumann(prob)
    assert rep.r_k == 0.0
    np.testing.assert_array_equal(u, 0.0)


def test_neumann_example2_matches_closed_form():
    prob = build_problem(example2_model(), 8, 64)
    u, rep = solve_truncated_neumann(prob)
    x = prob.grid.x1
    win = prob.grid.cells_between(0.0, 1.0)
    v = example2_solution(x)
    v = v - np.sum(v[win] * prob.grid.cell_volumes[win]) / np.sum(prob.grid.cell_volumes[win])
    assert np.max(np.abs(u - v)) <= 5 * prob.grid.h
    assert abs((u[0] - u[-1]) - EXAMPLE2_JUMP) <= 5e-3
    assert abs(rep.corrected_residual) <= 1e-12 * rep.data_norm


def test_neumann_incompatible_source_is_corrected():
    prob = build_problem(example2_model(), 6, 32)
    adj = solve_adjoint_truncated(prob)
    p = adj.normalized(Normalization.INTEGRAL_ONE)
    prob_p = replace(prob, table=replace(prob.table, f_cell=p.copy()))
    u, rep = solve_truncated_neumann(prob_p, adjoint=adj)
    assert rep.functional > 0 and rep.r_k < 0
    assert abs(rep.corrected_residual) <= 1e-12 * rep.data_norm


def test_anchor_shift_changes_solution_by_constant():
    prob = build_problem(example2_model(), 6, 32)
    u1, _ = solve_truncated_neumann(prob, anchor_window=(0.0, 1.0))
    u2, _ = solve_truncated_neumann(prob, anchor_window=(-3.0, -2.0))
    d = u1 - u2
    assert np.max(np.abs(d - d.mean())) <= 1e-10


# ---------------------------------------------------------------- semi-infinite


def test_semi_constant():
    m = random_model(np.random.default_rng(3), 1, drift_signs=(1, 1), source=False)
    res = solve_semi_infinite(m, 2.5, 2.5, 8, 16)
    np.testing.assert_allclose(res.values, 2.5, atol=1e-12)


def test_semi_negative_drift_rate():
    res = solve_semi_infinite(model_1d(flat(-1.0)), 1.0, 0.0, 12, 64)
    assert res.case == "negative"
    assert abs(res.gamma - 1.0) <= 0.1
    assert np.max(np.abs(res.values - semi_negative_drift(res.grid.x1, 12))) < 0.02
    assert abs(res.constant) < 1e-3


def test_semi_zero_drift_linear():
    res = solve_semi_infinite(model_1d(flat(0.0)), 0.0, 1.0, 8, 32)
    assert res.case == "zero"
    np.testing.assert_allclose(res.values, res.grid.x1 / 8, atol=2 * res.grid.h**2)
    assert res.linear_deviation <= 2 * res.grid.h**2


def test_semi_positive_drift_constant():
    res = solve_semi_infinite(model_1d(flat(1.0)), 1.0, 0.0, 24, 32)
    assert res.case == "positive"
    # v = 1 - (e^x - 1)/(e^k - 1): the mid-cylinder plateau is 1 up to e^{-k/2}
    assert abs(res.constant - 1.0) < 1e-3


# ---------------------------------------------------------------- stabilization fits


def _samples(fn, lo=0.0, hi=12.0, n=64):
    g = build_segment_grid(lo, hi, n, CrossSection())
    return g.x1, fn(g.x1), g.cell_volumes


def test_fit_exponential():
    x, u, w = _samples(lambda x: 3 + np.exp(-2 * x))
    fit = fit_stabilization(x, u, w, "right")
    assert abs(fit.K - 3) <= 1e-6 and abs(fit.gamma - 2) <= 0.02 and not fit.poor_fit


def test_fit_constant_gives_infinite_rate():
    x, u, w = _samples(lambda x: 5 + 0 * x)
    fit = fit_stabilization(x, u, w, "right")
    assert fit.K == 5 and fit.gamma == math.inf


def test_fit_algebraic_is_poor():
    x, u, w = _samples(lambda x: 1 / (1 + x**2))
    fit = fit_stabilization(x, u, w, "right")
    assert fit.poor_fit and fit.r2 < 0.995


def test_fit_left_side_and_window_count():
    x, u, w = _samples(lambda x: -1 + np.exp(1.5 * x), lo=-10.0, hi=0.0)
    fit = fit_stabilization(x, u, w, "left")
    assert abs(fit.K + 1) < 1e-5 and abs(fit.gamma - 1.5) <= 0.02
    x, u, w = _samples(lambda x: x, lo=0.0, hi=4.0)
    with pytest.raises(InsufficientWindows):
        fit_stabilization(x, u, w, "right")


# ---------------------------------------------------------------- growing truncations


def test_two_parameter_toy():
    m = model_1d(ZoneFields((Constant(1.0),), (SignAxial(-1.0),), (Constant(-1.0),)))
    opts = InfiniteOptions(k_sequence=(8, 12, 16, 20, 24), cells_per_unit=64, K_minus=-1.0, K_plus=1.0)
    sol = solve_infinite(m, opts=opts)
    assert sol.regime.tag == RegimeTag.TWO_PARAMETER
    assert sol.converged
    assert abs(sol.K_minus + 1) <= 1e-3 and abs(sol.K_plus - 1) <= 1e-3
    assert abs(sol.gamma_minus - 1) <= 0.1 and abs(sol.gamma_plus - 1) <= 0.1
    assert np.max(np.abs(sol.values - two_parameter_toy(sol.grid.x1))) < 0.02


def one_parameter_model():
    return model_1d(flat(-1.0), f=IndicatorAxial(-1.0, 1.0, 1.0))


def test_one_parameter_uniqueness():
    opts1 = InfiniteOptions(k_sequence=(8, 12, 16, 20, 24))
    opts2 = InfiniteOptions(k_sequence=(10, 14, 18, 22, 26))
    s1, s2 = solve_infinite(one_parameter_model(), opts=opts1), solve_infinite(one_parameter_model(), opts=opts2)
    assert s1.regime.tag == RegimeTag.ONE_PARAMETER_LEFT
    assert s1.converged and s2.converged
    d = s1.window_values[-1] - s2.window_values[-1]
    assert np.max(np.abs(d - d.mean())) <= 1e-6


def test_compatibility_uniqueness_and_mirror():
    s1 = solve_infinite(example2_model(), opts=InfiniteOptions(k_sequence=(6, 8)))
    s2 = solve_infinite(example2_model(), opts=InfiniteOptions(k_sequence=(7, 9, 11)))
    d = s1.window_values[-1] - s2.window_values[-1]
    assert np.max(np.abs(d - d.mean())) <= 1e-6
    # mirroring Example 2 only flips the sign of its odd source; the solution is u(-x1)
    mir = solve_infinite(example2_model().mirrored(), opts=InfiniteOptions(k_sequence=(6, 8)))
    w1, w2 = s1.window_values[-1], mir.window_values[-1][::-1]
    assert np.max(np.abs((w1 - w1.mean()) - (w2 - w2.mean()))) < 1e-10


def test_mirror_reverses_regime():
    m = model_1d(ZoneFields((Constant(1.0),), (Constant(0.0),), (Constant(1.0),)), f=IndicatorAxial(-1, 1, 1))
    s = solve_infinite(m, opts=InfiniteOptions(k_sequence=(8, 12, 16)))
    r = solve_infinite(m.mirrored(), opts=InfiniteOptions(k_sequence=(8, 12, 16)))
    assert s.regime.tag == RegimeTag.ONE_PARAMETER_RIGHT and r.regime.tag == RegimeTag.ONE_PARAMETER_LEFT
    np.testing.assert_allclose(s.window_values[-1], r.window_values[-1][::-1], atol=1e-10)


def test_flags():
    sol = solve_infinite(mixed_model().with_sources(f=IndicatorAxial(-1, 1, 0.0)),
                         opts=InfiniteOptions(k_sequence=(6, 8)))
    assert "boundary-case" in sol.flags
    m = model_1d(ZoneFields((Constant(1.0),), (SignAxial(-1.0),), (Constant(-1.0),)))
    sol = solve_infinite(m, opts=InfiniteOptions(k_sequence=(4, 6), K_minus=-1, K_plus=1))
    assert "not-converged" in sol.flags and not sol.converged
    constant_f = model_1d(flat(-1.0), f=Constant(1.0))
    sol = solve_infinite(constant_f, opts=InfiniteOptions(k_sequence=(6, 8)))
    assert "hypothesis-violated" in sol.flags


def test_options_validation():
    with pytest.raises(ValueError):
        InfiniteOptions(k_sequence=(8, 6))
    with pytest.raises(ValueError):
        InfiniteOptions(k_sequence=(4, 6), window=4.0)


def test_two_dimensional_compatibility_solve():
    rng = np.random.default_rng(7)
    m = random_model(rng, 2, drift_signs=(-1, 1))
    opts = InfiniteOptions(k_sequence=(6, 8), cells_per_unit=16, cross_section=cross_section(2),
                           compat_tol=1.0)  # only the corrected solve is exercised here
    sol = solve_infinite(m, opts=opts)
    rep = sol.compatibility
    assert abs(rep.corrected_residual) <= 1e-12 * rep.data_norm
