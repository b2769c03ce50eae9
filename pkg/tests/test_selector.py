import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turbmax import incompressible as I
from turbmax.functional import jensen_defect
from turbmax.grid import SpaceTimeGrid
from turbmax.growth import IsentropicGrowth
from turbmax.integrands import isentropic_energy, kinetic_energy, linear_integrand, squared_norm
from turbmax.measure import MeasureError, convex_combine_n, young_of_function
from turbmax.sampling import degenerate_family, random_candidate_family
from turbmax.selector import (
    CandidateCheckError,
    CandidateSet,
    HullObjective,
    SelectionError,
    SimplexWeights,
    brute_force_simplex,
    maximize,
    objective,
    simplex_grid,
    uniqueness_diagnostic,
)

G = SpaceTimeGrid(1.0, 2, 2, 3)


def const(v, g=G):
    return young_of_function(np.tile(np.asarray(v, float), (g.n_cells, 1)), g)


def test_simplex_weights_validation():
    assert SimplexWeights([0.25, 0.75]).to_list() == [0.25, 0.75]
    for bad in ([], [0.5, 0.6], [1.5, -0.5], [np.nan, 1.0]):
        with pytest.raises(SelectionError):
            SimplexWeights(bad)


def test_objective_at_vertices_and_center(rng):
    Ys = random_candidate_family(rng, G, 3)
    f = kinetic_energy()
    for i, Y in enumerate(Ys):
        assert objective(np.eye(3)[i], Ys, f)[0] == pytest.approx(jensen_defect(Y, f).value, rel=1e-12, abs=1e-12)
    th = np.full(3, 1 / 3)
    assert objective(th, Ys, f)[0] == pytest.approx(jensen_defect(convex_combine_n(Ys, th), f).value, rel=1e-12)


@pytest.mark.parametrize("quadratic", [True, False])
def test_gradient_matches_finite_differences(rng, quadratic):
    if quadratic:
        Ys, f = random_candidate_family(rng, G, 3), squared_norm()
    else:
        Ys, f = random_candidate_family(rng, G, 3, IsentropicGrowth(2.0)), isentropic_energy(2.0)
    H = HullObjective(Ys, f)
    assert H.quadratic == quadratic
    th = np.array([0.2, 0.3, 0.5])
    h = 1e-6
    fd = np.array([(H.value(th + h * e) - H.value(th - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.allclose(H.gradient(th), fd, rtol=1e-6, atol=1e-6 * H.scale)


def test_toy_problem():
    Y1, Y2 = const([1.0, 0.0]), const([-1.0, 0.0])
    res = maximize([Y1, Y2], squared_norm())
    assert res.converged and res.gap <= res.tol
    assert res.theta.theta[0] == pytest.approx(0.5, abs=1e-12)
    assert res.value == pytest.approx(G.total_volume, rel=1e-14)
    assert np.allclose(res.barycenter_field, 0.0, atol=1e-15)


def test_single_candidate(rng):
    res = maximize([random_candidate_family(rng, G, 1)[0]], kinetic_energy())
    assert res.theta.to_list() == [1.0] and res.iterations == 0 and res.converged


def test_duplicates_converge_at_start(rng):
    Y = random_candidate_family(rng, G, 1)[0]
    res = maximize([Y, Y], kinetic_energy())
    assert res.gap <= res.tol and res.iterations == 0
    assert res.theta.to_list() == [1.0, 0.0]  # ties go to the lowest index


@pytest.mark.parametrize("variant", ["away", "vanilla"])
def test_history_is_monotone(rng, variant):
    Ys = random_candidate_family(rng, G, 4)
    res = maximize(Ys, kinetic_energy(), variant=variant, max_iter=20000)
    h = np.array(res.history)
    assert np.all(np.diff(h) >= -1e-12 * res.tol - 1e-14 * abs(h).max())
    assert res.converged


def test_certificate_is_sound(rng):
    for growth, f in ((None, kinetic_energy()), (IsentropicGrowth(2.0), isentropic_energy(2.0))):
        Ys = random_candidate_family(rng, G, 3, growth)
        res = maximize(Ys, f)
        _, best = brute_force_simplex(Ys, f, 60)
        slack = 1e-12 * HullObjective(Ys, f).scale
        assert best <= res.value + res.gap + slack
        assert res.value >= best - slack


def test_linear_integrand_has_zero_defect(rng):
    Ys = random_candidate_family(rng, G, 3)
    f = linear_integrand([1.0, -2.0])
    H = HullObjective(Ys, f)
    for th in simplex_grid(3, 4):
        assert abs(H.value(th)) <= 1e-12 * H.scale
    res = maximize(Ys, f)
    assert res.converged and sorted(res.theta.to_list()) == [0.0, 0.0, 1.0]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations(range(4)))
def test_order_invariance(seed, perm):
    Ys = random_candidate_family(np.random.default_rng(seed), G, 4)
    a = maximize(Ys, kinetic_energy())
    b = maximize([Ys[i] for i in perm], kinetic_energy())
    assert a.value == pytest.approx(b.value, rel=1e-10, abs=1e-10)
    assert np.allclose(a.barycenter_field, b.barycenter_field, atol=1e-6)


def test_brute_force_edges(rng):
    Ys = random_candidate_family(rng, G, 3)
    f = kinetic_energy()
    th, v = brute_force_simplex(Ys, f, 1)
    vals = [jensen_defect(Y, f).value for Y in Ys]
    assert v == pytest.approx(max(vals), rel=1e-12) and th[int(np.argmax(vals))] == 1.0
    assert len(simplex_grid(3, 4)) == 15
    with pytest.raises(SelectionError):
        brute_force_simplex(random_candidate_family(rng, G, 5), f, 2)


def test_uniqueness_diagnostic(rng):
    Ys = random_candidate_family(rng, G, 3)
    f = kinetic_energy()
    runs = [maximize(Ys, f, theta0=rng.dirichlet(np.ones(3))) for _ in range(3)]
    rep = uniqueness_diagnostic(runs)
    assert rep.passed and rep.to_dict()["n_results"] == 3
    assert uniqueness_diagnostic(runs[:1]).passed
    with pytest.raises(SelectionError):
        uniqueness_diagnostic([maximize(Ys, f, max_iter=0, theta0=[1 / 3] * 3)])
    with pytest.raises(SelectionError):
        uniqueness_diagnostic([maximize(Ys, linear_integrand([1.0, 0.0]))])
    with pytest.raises(SelectionError):
        uniqueness_diagnostic([])


def test_degenerate_family_has_distinct_weights_same_barycenter():
    rng = np.random.default_rng(7)
    Ys = degenerate_family(rng, G, 3)
    f = kinetic_energy()
    runs = [maximize(Ys, f, theta0=rng.dirichlet(np.ones(4))) for _ in range(6)]
    rep = uniqueness_diagnostic(runs)
    assert rep.passed


def test_candidate_set_validation():
    with pytest.raises(SelectionError):
        CandidateSet([])
    with pytest.raises(SelectionError):
        CandidateSet([const([0.0, 0.0])], model="navier-stokes")
    with pytest.raises(SelectionError):
        CandidateSet([const([0.0, 0.0])], model="incompressible")
    g = SpaceTimeGrid(1.0, 2, 8, 8)
    data = I.IncompressibleData(g, [1.0, 0.0])
    assert len(CandidateSet([const([1.0, 0.0], g)], "incompressible", data)) == 1
    with pytest.raises(CandidateCheckError):
        CandidateSet([const([1.0, 0.0], g), const([2.0, 0.0], g)], "incompressible", data)
    with pytest.raises(MeasureError):
        CandidateSet([const([0.0, 0.0]), const([0.0, 0.0], SpaceTimeGrid(1.0, 2, 3, 3))])


def test_growth_mismatch_rejected(rng):
    with pytest.raises(MeasureError):
        HullObjective(random_candidate_family(rng, G, 2), isentropic_energy(2.0))


def test_bad_start_and_variant(rng):
    Ys = random_candidate_family(rng, G, 2)
    with pytest.raises(SelectionError):
        maximize(Ys, kinetic_energy(), theta0=[1 / 3] * 3)
    with pytest.raises(ValueError):
        maximize(Ys, kinetic_energy(), variant="pairwise")
