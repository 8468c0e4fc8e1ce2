import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alebgk.kinetic import (AdmissibilityError, ChuField, GasParameters, Moments,
                            VelocityGrid, field_moments, maxwellian, maxwellian_1d,
                            maxwellian_2d, moments_from_field, relaxation_time)

UNIT = GasParameters(1.0, 1.0)


def test_velocity_grid_nodes_and_weight():
    g = VelocityGrid(1, 5, 2.0)
    np.testing.assert_allclose(g.axis, [-2, -1, 0, 1, 2])
    assert g.weight == pytest.approx(1.0)
    g2 = VelocityGrid(2, 3, 1.0)
    assert g2.size == 9
    assert g2.weight == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(3, 5, 1.0), (1, 1, 1.0), (1, 5, 0.0)])
def test_velocity_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        VelocityGrid(*args)


def test_maxwellian_1d_peak():
    grid = VelocityGrid(1, 3, 1.0)
    G1, G2 = maxwellian_1d(Moments(1.0, 0.0, 1.0), UNIT, grid)
    assert G1[1] == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-12)
    assert G2[1] == pytest.approx(2.0 * G1[1], rel=1e-12)


def test_maxwellian_1d_quadrature():
    grid = VelocityGrid(1, 40, 10.0)
    G1, _ = maxwellian_1d(Moments(1.0, 0.0, 1.0), UNIT, grid)
    assert abs(G1.sum() * grid.weight - 1.0) < 1e-12


def test_maxwellian_rejects_zero_density():
    grid = VelocityGrid(1, 8, 5.0)
    with pytest.raises(AdmissibilityError) as err:
        maxwellian([1.0, 0.0], np.zeros((2, 1)), [1.0, 1.0], UNIT, grid)
    assert err.value.point == 1
    assert err.value.quantity == "rho"


def test_maxwellian_2d_peak_and_isotropy():
    grid = VelocityGrid(2, 5, 2.0)
    G1, G2 = maxwellian_2d(Moments(1.0, [0.0, 0.0], 1.0), UNIT, grid)
    centre = np.flatnonzero(np.all(grid.nodes == 0.0, axis=1))[0]
    assert G1[centre] == pytest.approx(1.0 / (2 * math.pi), rel=1e-12)
    assert G2[centre] == pytest.approx(1.0 / (2 * math.pi), rel=1e-12)
    M = G1.reshape(5, 5)
    np.testing.assert_allclose(M, M.T, rtol=1e-14)


def test_maxwellian_2d_quadrature():
    grid = VelocityGrid(2, 60, 8.0)
    G1, _ = maxwellian_2d(Moments(1.0, [0.0, 0.0], 1.0), UNIT, grid)
    assert abs(G1.sum() * grid.weight - 1.0) < 1e-10


def test_moments_round_trip_1d():
    grid = VelocityGrid(1, 60, 12.0)
    G1, G2 = maxwellian([2.0], [[0.3]], [1.4], UNIT, grid)
    rho, U, T, E = field_moments(G1, G2, grid, UNIT)
    assert rho[0] == pytest.approx(2.0, abs=1e-9)
    assert U[0, 0] == pytest.approx(0.3, abs=1e-9)
    assert T[0] == pytest.approx(1.4, abs=1e-9)
    assert E[0] == pytest.approx(1.5 * 2.0 * 1.4 + 0.5 * 2.0 * 0.09, abs=1e-8)


def test_moments_zero_field_rejected():
    grid = VelocityGrid(1, 10, 5.0)
    with pytest.raises(AdmissibilityError):
        field_moments(np.zeros((1, 10)), np.zeros((1, 10)), grid, UNIT)


def test_moments_from_field_single_point():
    grid = VelocityGrid(2, 40, 8.0)
    G1, G2 = maxwellian([1.0, 3.0], [[0.0, 0.0], [0.5, -0.2]], [1.0, 0.8], UNIT, grid)
    m = moments_from_field(ChuField(G1, G2), grid, UNIT, 1)
    assert m.rho == pytest.approx(3.0, rel=1e-8)
    np.testing.assert_allclose(m.U, [0.5, -0.2], atol=1e-8)
    assert m.T == pytest.approx(0.8, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(rho=st.floats(0.1, 10.0), u=st.floats(-1.0, 1.0), T=st.floats(0.2, 2.0),
       c=st.floats(0.01, 100.0))
def test_moment_round_trip_and_scaling(rho, u, T, c):
    Rs = 1.0
    vmax = 6.0 * math.sqrt(Rs * T) + abs(u) + 1.0
    grid = VelocityGrid(1, 60, vmax)
    G1, G2 = maxwellian([rho], [[u]], [T], UNIT, grid)
    r, U, TT, _ = field_moments(G1, G2, grid, UNIT)
    assert r[0] == pytest.approx(rho, rel=1e-8)
    assert U[0, 0] == pytest.approx(u, abs=1e-8 * max(1.0, abs(u)))
    assert TT[0] == pytest.approx(T, rel=1e-8)
    r2, U2, T2, _ = field_moments(c * G1, c * G2, grid, UNIT)
    assert r2[0] == pytest.approx(c * r[0], rel=1e-12)
    assert U2[0, 0] == pytest.approx(U[0, 0], abs=1e-12)
    assert T2[0] == pytest.approx(TT[0], rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(rho=st.floats(0.1, 5.0), ux=st.floats(-0.5, 0.5), uy=st.floats(-0.5, 0.5),
       T=st.floats(0.3, 2.0))
def test_maxwellian_positive_and_conservative_2d(rho, ux, uy, T):
    grid = VelocityGrid(2, 40, 6.0 * math.sqrt(T) + 1.5)
    G1, G2 = maxwellian([rho], [[ux, uy]], [T], UNIT, grid)
    assert np.all(G1 > 0) and np.all(G2 > 0)
    r, U, TT, _ = field_moments(G1, G2, grid, UNIT)
    np.testing.assert_allclose([r[0], U[0, 0], U[0, 1], TT[0]], [rho, ux, uy, T],
                               rtol=1e-8, atol=1e-8)


def test_relaxation_time_argon():
    lam, tau = relaxation_time(3.86e-2, 270.0, GasParameters(208.0, 1.0, d=3.68e-10))
    assert lam == pytest.approx(1.605e-1, rel=1e-3)
    assert tau == pytest.approx(5.404e-4, rel=1e-3)


def test_relaxation_time_cavity_row():
    # the tabulated pair is reproduced at 617760 Pa; the listed 61776 Pa is off by ten
    gas = GasParameters(208.0, 1.0, d=3.68e-10)
    lam, tau = relaxation_time(617760.0, 270.0, gas)
    assert lam == pytest.approx(1.00292e-8, rel=1e-4)
    assert tau == pytest.approx(3.37671e-11, rel=1e-4)
    lam_listed, _ = relaxation_time(61776.0, 270.0, gas)
    assert lam_listed == pytest.approx(10.0 * lam, rel=1e-12)


def test_relaxation_time_density_scaling():
    gas = GasParameters(208.0, 1.0)
    lam1, _ = relaxation_time(1.0, 300.0, gas)
    lam2, _ = relaxation_time(2.0, 300.0, gas)
    assert lam2 == pytest.approx(0.5 * lam1, rel=1e-14)


@pytest.mark.parametrize("p0,T0", [(0.0, 300.0), (1.0, -1.0)])
def test_relaxation_time_rejects_bad_input(p0, T0):
    with pytest.raises(ValueError):
        relaxation_time(p0, T0, GasParameters(208.0, 1.0))


def test_gas_parameters_validation():
    with pytest.raises(ValueError):
        GasParameters(0.0, 1.0)
    with pytest.raises(ValueError):
        GasParameters(1.0, 0.0)
