"""Shared builders for randomized coefficient configurations."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cyldrift.coefficients import (
    CoefficientModel,
    Constant,
    FieldSum,
    FourierAxial,
    FourierBox,
    IndicatorAxial,
    SignAxial,
    ZoneFields,
)
from cyldrift.geometry import CrossSection

settings.register_profile("ci", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def periodic_field(rng, mean, amp, cross=None):
    """mean + one or two random axial modes, optionally modulated across the section."""
    modes = tuple((m, amp * rng.uniform(-1, 1), amp * rng.uniform(-1, 1)) for m in (1, 2))
    prof = Constant(1.0) if cross is None else cross
    return FieldSum((Constant(mean), FourierAxial(modes, prof)))


def random_model(rng, dim=1, drift_signs=(-1, 1), source=True):
    """Random model whose left/right axial drifts have the requested signs (0 means b = 0).

    Axial b stays within sign(s) * [0.5, 1.5], so each zone's effective drift has sign s.
    Diffusion stays in [0.5, 1.5].
    """
    cross = None
    if dim > 1:
        cross = FourierBox(1.0, ((0, np.pi, 0.3 * rng.uniform(-1, 1), 0.0),))

    def a_fields():
        return tuple(periodic_field(rng, 1.0, 0.15, cross if i == 0 else None) for i in range(dim))

    def b_fields(s):
        first = Constant(0.0) if s == 0 else periodic_field(rng, float(s), 0.15 * (1 if dim == 1 else 0.7), cross)
        return (first,) + tuple(Constant(0.0) for _ in range(dim - 1))

    a_left, a_mid, a_right = a_fields(), a_fields(), a_fields()
    a = ZoneFields(a_left, a_mid, a_right)
    mid_b = (FieldSum((SignAxial(rng.uniform(0.2, 1.0)), Constant(rng.uniform(-0.5, 0.5)))),) + tuple(
        Constant(0.0) for _ in range(dim - 1))
    b = ZoneFields(b_fields(drift_signs[0]), mid_b, b_fields(drift_signs[1]))
    f, g = Constant(0.0), None
    if source:
        lo = rng.uniform(-1.5, -0.2)
        f = FieldSum((IndicatorAxial(lo, lo + rng.uniform(0.3, 1.5), rng.uniform(-2, 2)),
                      IndicatorAxial(-0.5, 0.5, rng.uniform(-1, 1))))
        if dim > 1:
            g = IndicatorAxial(-1.0, 1.0, rng.uniform(-1, 1))
    return CoefficientModel(dim, a, b, f, g)


def cross_section(dim, n=3):
    if dim == 1:
        return CrossSection()
    return CrossSection(((0.0, 1.0),) * (dim - 1), (n,) * (dim - 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
