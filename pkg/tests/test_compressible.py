import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turbmax import compressible as C
from turbmax.grid import SpaceTimeGrid
from turbmax.growth import IsentropicGrowth
from turbmax.integrands import isentropic_energy
from turbmax.measure import DiscreteYoungMeasure, MeasureError, add_concentration, constant_mixture, convex_combine, young_of_function
from turbmax.sampling import random_admissible_compressible
from turbmax.weakform import TestFunctionDictionary

G = SpaceTimeGrid(1.0, 2, 8, 8)
GAMMA = 1.4


def dirac_state(rho, u, g=G, gamma=GAMMA):
    z = C.state(np.asarray(rho, float), np.asarray(u, float))
    return young_of_function(np.tile(z, (g.n_cells, 1)), g, IsentropicGrowth(gamma))


def shock(g, with_data=True):
    # stationary two-shock profile in x_2 with equal mass and momentum flux (gamma = 2)
    x2 = np.tile(g.x_centers[:, 1], g.nt)
    rho = np.where(x2 < math.pi, 1.0, 2.0)
    m = math.sqrt(6.0)
    u = np.stack([0 * rho, m / rho], axis=1)
    Y = young_of_function(C.state(rho, u), g, IsentropicGrowth(2.0))
    data = C.CompressibleData(g, 2.0, rho[: g.n_space], u[: g.n_space])
    return Y, data


def test_state_and_vacuum():
    z = C.state(np.array(4.0), np.array([1.0, -2.0]))
    assert np.array_equal(z, [4.0, 2.0, -4.0])
    with pytest.raises(MeasureError):
        C.state(np.array(0.0), np.array([1.0, 0.0]))
    with pytest.raises(MeasureError):
        constant_mixture(G, [[0.0, 1.0, 0.0]], [1.0], IsentropicGrowth(GAMMA))


def test_data_validation():
    with pytest.raises(ValueError):
        C.CompressibleData(G, 1.0, 1.0, [0.0, 0.0])
    with pytest.raises(ValueError):
        C.CompressibleData(G, 1.4, -1.0, [0.0, 0.0])
    with pytest.raises(ValueError):
        C.CompressibleData(G, 1.4, np.ones(3), [0.0, 0.0])
    d = C.CompressibleData(G, 2.0, 2.0, [1.0, 0.0])
    assert d.initial_energy == pytest.approx((1.0 + 4.0) * (2 * math.pi) ** 2, rel=1e-14)


def test_constant_state_residuals_vanish():
    Y = dirac_state(1.3, [0.4, -0.2])
    data = C.CompressibleData(G, GAMMA, 1.3, [0.4, -0.2])
    tol = 10 * C.default_residual_tol(G)
    assert np.max(np.abs(C.residual_mass_c(Y, data))) <= tol
    assert np.max(np.abs(C.residual_momentum_c(Y, data))) <= tol


def test_wrong_initial_density_is_caught():
    Y = dirac_state(1.3, [0.4, -0.2])
    data = C.CompressibleData(G, GAMMA, 1.0, [0.4, -0.2])
    assert np.max(np.abs(C.residual_mass_c(Y, data))) > 1e-2


def test_mixture_with_matching_moments():
    rho0, u0 = 1.0, np.array([0.5, 0.0])
    z1 = np.array([0.6, 0.2, 0.1])
    # second atom fixes <a1> = rho0 and <sqrt(a1) a'> = rho0 u0 with equal weights
    r2 = 2 * rho0 - z1[0]
    p2 = (2 * rho0 * u0 - math.sqrt(z1[0]) * z1[1:]) / math.sqrt(r2)
    Y = constant_mixture(G, [z1, np.r_[r2, p2]], [0.5, 0.5], IsentropicGrowth(GAMMA))
    data = C.CompressibleData(G, GAMMA, rho0, u0)
    assert np.max(np.abs(C.residual_mass_c(Y, data))) <= 10 * C.default_residual_tol(G)


def test_pressure_is_needed_for_the_shock():
    Y, data = shock(G)
    with_p = np.max(np.abs(C.residual_momentum_c(Y, data)))
    without = np.max(np.abs(C.residual_momentum_c(Y, data, include_pressure=False)))
    assert with_p <= C.default_residual_tol(G)
    assert without > 20 * with_p


def test_concentration_shift_matches_direct_sum(rng):
    g = SpaceTimeGrid(1.0, 2, 2, 3)
    D = TestFunctionDictionary.build("vector", 1.0, 2, K=1, n_profiles=2)
    Y = dirac_state(1.0, [0.2, 0.1], g)
    data = C.CompressibleData(g, GAMMA, 1.0, [0.2, 0.1])
    mass = np.zeros(g.n_lambda_cells)
    mass[: g.n_cells] = rng.uniform(0, 1, g.n_cells)
    th = IsentropicGrowth(GAMMA).project(np.array([[0.7, 0.3, -0.5]]))[1][0]
    Z = add_concentration(Y, mass, th)
    shift = C.residual_momentum_c(Z, data, D, normalize=False) - C.residual_momentum_c(Y, data, D, normalize=False)
    M = np.outer(th[1:], th[1:]) + th[0] ** GAMMA * np.eye(2)
    t, x = g.cell_centers()
    expected = np.zeros(D.size)
    for j in range(D.size):
        _, _, grad = D.subset([j]).values(t, x)
        for c in range(g.n_cells):
            expected[j] += mass[c] * np.sum(M * grad[0, c])
    assert np.allclose(shift, expected, rtol=1e-12, atol=1e-14)
    # the mass equation never sees concentration
    assert np.array_equal(C.residual_mass_c(Z, data, normalize=False), C.residual_mass_c(Y, data, normalize=False))


def test_admissibility_examples():
    data = C.CompressibleData(G, GAMMA, 1.2, [0.3, 0.1])
    rep = C.check_admissibility_c(dirac_state(1.2, [0.3, 0.1]), data)
    assert rep.admissible and np.max(np.abs(rep.margins)) <= 1e-12 * data.initial_energy
    rep = C.check_admissibility_c(dirac_state(2.4, [0.3, 0.1]), data)
    assert not rep.admissible and np.all(rep.margins < 0)


def test_concentration_lowers_margin_exactly():
    data = C.CompressibleData(G, GAMMA, 1.2, [0.3, 0.1])
    Y = dirac_state(1.2, [0.3, 0.1])
    eps = 0.05
    th = np.array([0.0, 1.0, 0.0])
    Z = add_concentration(Y, np.r_[np.full(G.n_cells, eps * G.dt / G.n_space), np.zeros(G.n_layer)], th)
    f_inf = float(isentropic_energy(GAMMA).recession(th[None])[0])
    drop = C.check_admissibility_c(Y, data).margins - C.check_admissibility_c(Z, data).margins
    assert np.allclose(drop, eps * f_inf, rtol=1e-12)


def test_lambda_bound_constants():
    assert C.lambda_bound_constant(2.0) == 2.0
    assert C.lambda_bound_constant(4.0) == 3.0
    assert C.lambda_bound_constant(1.4) == 2.0
    data = C.CompressibleData(G, GAMMA, 1.0, [0.0, 0.0])
    lhs, rhs, holds = C.lambda_mass_bound(dirac_state(1.0, [0.0, 0.0]), data)
    assert lhs == 0.0 and holds and rhs == 2.0 * G.T * data.initial_energy


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.4, 2.0, 3.0, 5.0]))
def test_lambda_bound_on_admissible_measures(seed, gamma):
    Y, data = random_admissible_compressible(np.random.default_rng(seed), SpaceTimeGrid(1.0, 2, 2, 3), gamma)
    assert C.check_admissibility_c(Y, data).admissible
    assert C.lambda_mass_bound(Y, data)[2]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_combination_keeps_admissibility_and_surface(seed, tau):
    rng = np.random.default_rng(seed)
    g = SpaceTimeGrid(1.0, 2, 2, 3)
    Y1, data = random_admissible_compressible(rng, g, 2.0)
    Y2, _ = random_admissible_compressible(rng, g, 2.0)
    data2 = C.CompressibleData(g, 2.0, data.rho0, data.u0)
    Y = convex_combine(Y1, Y2, tau)
    e1 = C.check_admissibility_c(Y1, data).admissible
    e2 = C.check_admissibility_c(Y2, data2).admissible
    if e1 and e2:
        assert C.check_admissibility_c(Y, data).admissible
    live = Y.angle_weights > 0
    assert np.max(Y.growth.surface_residual(Y.angles[live]), initial=0.0) <= 1e-12
    assert np.allclose(C.slice_energies(Y), tau * C.slice_energies(Y1) + (1 - tau) * C.slice_energies(Y2), rtol=1e-12)


def test_measure_must_match_model():
    data = C.CompressibleData(G, 2.0, 1.0, [0.0, 0.0])
    with pytest.raises(MeasureError):
        C.residual_mass_c(dirac_state(1.0, [0.0, 0.0], gamma=1.4), data)
    with pytest.raises(MeasureError):
        C.residual_mass_c(young_of_function(np.zeros((G.n_cells, 2)), G), data)


def test_check_report():
    Y, data = shock(G)
    rep = C.check(Y, data)
    assert rep.solves
    assert rep.to_dict()["residuals"]["mass"]["max_normalized"] <= rep.residual_tol
