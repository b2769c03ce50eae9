import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turbmax.growth import IsentropicGrowth, PowerGrowth, quadratic
from turbmax.integrands import (
    builtin_energy,
    hessian_bilinear,
    hessian_quad,
    isentropic_energy,
    kinetic_energy,
    linear_integrand,
    recession_residuals,
    squared_norm,
)
from turbmax.sampling import random_angles

ENERGIES = [kinetic_energy(), squared_norm()] + [isentropic_energy(g) for g in (1.4, 2.0, 3.0, 4.0)]


def _dim(f):
    return 3 if isinstance(f.growth, IsentropicGrowth) else 2


@pytest.mark.parametrize("f", ENERGIES, ids=lambda f: f"{f.name}-{f.growth!r}")
def test_recession_consistency_decreasing(f, rng):
    thetas = random_angles(rng, f.growth, (8,), _dim(f))
    res = recession_residuals(f, thetas, (1e3, 1e4, 1e6), precision=60)
    assert np.all(np.diff(res) < 0)
    assert res[-1] <= 1e-6 * np.min(f.recession(thetas))


def test_float_recession_plateaus_at_rounding(rng):
    # doubles stop resolving the residual once it falls below eps; the
    # high-precision path keeps decreasing
    f = isentropic_energy(3.0)
    th = random_angles(rng, f.growth, (4,), 3)
    lo = recession_residuals(f, th, (1e3, 1e4))
    hi = recession_residuals(f, th, (1e3, 1e4), precision=40)
    assert lo[-1] < 1e-15
    # exact residual is f_inf / (1 + s^6)
    assert hi[-1] == pytest.approx(np.max(f.recession(th)) / (1 + 1e24), rel=1e-10)


def test_recession_values():
    assert kinetic_energy().recession(np.array([[0.6, 0.8]]))[0] == 0.5
    assert squared_norm().recession(np.array([[1.0, 0.0]]))[0] == 1.0
    f = isentropic_energy(2.0)
    assert f.recession(np.array([1.0, 0.0])) == 1.0  # b1^2 / (2 - 1)
    assert f.recession(np.array([0.0, 1.0])) == 0.5


vec = st.lists(st.floats(-5, 5), min_size=3, max_size=3)


@settings(max_examples=100)
@given(vec, st.sampled_from([1.4, 2.0, 3.0]))
def test_isentropic_gradient_matches_finite_differences(z, gamma):
    z = np.array(z)
    z[0] = abs(z[0]) + 0.1
    f = isentropic_energy(gamma)
    h = 1e-6
    fd = np.array([(f.eval(z + h * e) - f.eval(z - h * e)) / (2 * h) for e in np.eye(3)])
    g = f.gradient(z)
    assert np.allclose(g, fd, rtol=1e-6, atol=1e-6 * (1 + np.abs(g).max()))


@given(vec)
def test_quadratic_gradients(z):
    z = np.array(z)
    assert np.array_equal(kinetic_energy().gradient(z), z)
    assert np.array_equal(squared_norm().gradient(z), 2 * z)


@given(vec, st.sampled_from(ENERGIES))
def test_energies_nonnegative(z, f):
    z = np.array(z)[: _dim(f)]
    z[0] = abs(z[0])
    assert f.eval(z) >= 0


def test_hessian_forms():
    u = np.array([[1.0, 2.0], [3.0, -1.0]])
    assert np.array_equal(hessian_quad(kinetic_energy(), u), [5.0, 10.0])
    assert np.array_equal(hessian_quad(squared_norm(), u), [10.0, 20.0])
    assert hessian_bilinear(kinetic_energy(), u[0], u[1]) == 1.0
    assert hessian_quad(linear_integrand([1.0, 1.0]), u).tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        hessian_quad(isentropic_energy(2.0), u)


def test_builtin_energy():
    assert builtin_energy(quadratic()).name == "energy"
    assert builtin_energy(IsentropicGrowth(2.0)).growth == IsentropicGrowth(2.0)
    with pytest.raises(ValueError):
        builtin_energy(PowerGrowth(3.0))


def test_compatibility():
    assert kinetic_energy().compatible_with(quadratic())
    assert not kinetic_energy().compatible_with(IsentropicGrowth(2.0))
    assert not isentropic_energy(2.0).compatible_with(IsentropicGrowth(3.0))
