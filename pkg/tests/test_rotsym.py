import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spheremass.extension_builder import PrescribedScalar, scalar_energy
from spheremass.modified_ricci_flow import run_flow
from spheremass.rotsym import (
    DomainError,
    HorizonError,
    MassProfile,
    RotSymMetric,
    c0_rotsym,
    check_profile_decay,
    initial_mean_curvature,
    prescribed_scalar_for,
    scalar_from_profile,
    schwarzschild_u,
)
from spheremass.sphere_geometry import AxisymMetric


def test_scalar_from_profile_examples():
    t = np.linspace(1, 50, 200)
    np.testing.assert_array_equal(scalar_from_profile(MassProfile.constant(0.3), t), 0.0)
    np.testing.assert_allclose(scalar_from_profile(MassProfile.powerlaw_approach(0.25, 3), t), 3 * t**-6, rtol=1e-14)
    r = np.linspace(1, 100, 100)
    table = MassProfile.table(r, np.full(100, 0.25))
    np.testing.assert_allclose(scalar_from_profile(table, t), 0.0, atol=1e-12)
    with pytest.raises(DomainError):
        scalar_from_profile(MassProfile.powerlaw_approach(0.25, 3), 0.5)


def test_schwarzschild_u_examples():
    assert schwarzschild_u(0.0, 3.0) == 1.0
    assert schwarzschild_u(0.25, 1.0) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert schwarzschild_u(0.25, 1e12) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(HorizonError):
        schwarzschild_u(0.25, 0.5)
    assert RotSymMetric(MassProfile.constant(0.25)).u(1.0) == pytest.approx(math.sqrt(2))


def test_profile_validation():
    with pytest.raises(ValueError):
        MassProfile.constant(-0.1)
    with pytest.raises(ValueError):
        MassProfile.table([1, 2, 3], [0.1, 0.05, 0.2])
    with pytest.raises(ValueError):
        MassProfile.constant(0.6)
    assert MassProfile.powerlaw_approach(0.25, 3).value(1.0) == 0.0


def test_profile_decay_reports():
    rep = check_profile_decay(MassProfile.constant(0.2))
    assert rep.verifiable and rep.passes and rep.weighted_sup == 0.0
    rep = check_profile_decay(MassProfile.powerlaw_approach(0.25, 3))
    # r^2 |m''| = 3 r^-3 at the left end of each window
    assert rep.verifiable and rep.passes
    assert rep.weighted_sup == pytest.approx(3.0, rel=1e-12)
    r = np.linspace(1, 20, 40)
    kinked = MassProfile.table(r, np.minimum(0.02 * (r - 1), 0.1))
    rep = check_profile_decay(kinked)
    assert not rep.verifiable and "kink" in rep.reason
    smooth = MassProfile.table(r, 0.25 * (1 - r**-3.0))
    assert check_profile_decay(smooth).verifiable
    with pytest.raises(ValueError):
        check_profile_decay(MassProfile.constant(0.1), alpha=1.0)


def test_c0_examples():
    assert c0_rotsym(MassProfile.constant(0.3)) == 0.0
    assert c0_rotsym(MassProfile.constant(0.0)) == 0.0
    # 2 m(t) - 2 m(1) - (t - 1) = (1 - t^-3)/2 - (t - 1) peaks at t = 1.5^(1/4)
    t = 1.5**0.25
    expected = 0.5 * (1 - t**-3) - (t - 1)
    assert c0_rotsym(MassProfile.powerlaw_approach(0.25, 3)) == pytest.approx(expected, abs=1e-12)


def test_c0_matches_quadrature_on_round_trace():
    trace = run_flow(AxisymMetric.round(64), 20.0)
    p = MassProfile.powerlaw_approach(0.25, 3)
    assert scalar_energy(trace, prescribed_scalar_for(p)) == pytest.approx(c0_rotsym(p), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.45), st.floats(0.5, 6.0))
def test_powerlaw_profile_properties(m_inf, q):
    p = MassProfile.powerlaw_approach(m_inf, q)
    t = np.geomspace(1, 1e4, 300)
    m = p.value(t)
    assert np.all(np.diff(m) >= 0) and np.all(m < t / 2)
    np.testing.assert_allclose(scalar_from_profile(p, t), 4 * p.derivative(t) / t**2)
    R = prescribed_scalar_for(p)
    np.testing.assert_allclose(R(3.0, np.array([0.1]))[0], scalar_from_profile(p, 3.0), rtol=1e-12, atol=1e-300)
    assert c0_rotsym(p) >= 0.0
    u1 = 2 / initial_mean_curvature(p)
    assert u1 == pytest.approx(1.0)


def test_table_interpolation_is_monotone():
    r = np.array([1.0, 2.0, 3.0, 5.0, 8.0])
    m = np.array([0.0, 0.1, 0.1, 0.2, 0.21])
    p = MassProfile.table(r, m)
    x = np.linspace(1, 12, 500)
    assert np.all(np.diff(p.value(x)) >= -1e-15)
    assert p.limit == 0.21 and p.value(20.0) == 0.21
    with pytest.raises(ValueError):
        prescribed_scalar_for(p)
