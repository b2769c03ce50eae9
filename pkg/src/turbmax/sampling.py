"""Random instance generators for property tests, acceptance runs and scripts.

All generators take a ``numpy.random.Generator`` so runs are reproducible.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .compressible import CompressibleData, slice_energies
from .grid import SpaceTimeGrid
from .growth import GrowthStructure, IsentropicGrowth, PowerGrowth, quadratic
from .integrands import isentropic_energy
from .measure import DiscreteYoungMeasure


def random_phase_points(rng: np.random.Generator, growth: GrowthStructure, shape: tuple, m: int, spread: float = 1.0) -> np.ndarray:
    """Points away from vacuum for isentropic growth, Gaussian otherwise."""
    z = spread * rng.normal(size=shape + (m,))
    if isinstance(growth, IsentropicGrowth):
        z[..., 0] = spread * rng.uniform(0.1, 2.0, size=shape)
    return z


def random_angles(rng: np.random.Generator, growth: GrowthStructure, shape: tuple, m: int) -> np.ndarray:
    """Points on the recession surface of ``growth``."""
    z = rng.normal(size=shape + (m,))
    if isinstance(growth, IsentropicGrowth):
        z[..., 0] = np.abs(z[..., 0]) + 1e-3
    z = z.reshape(-1, m)
    return growth.project(z)[1].reshape(shape + (m,))


def random_measure(
    rng: np.random.Generator,
    grid: SpaceTimeGrid,
    growth: Optional[GrowthStructure] = None,
    m: Optional[int] = None,
    K: int = 3,
    J: int = 2,
    concentration: bool = True,
    lambda_scale: float = 1.0,
    final_layer: bool = False,
    spread: float = 1.0,
) -> DiscreteYoungMeasure:
    """Random atoms with Dirichlet weights and, optionally, sparse random concentration."""
    growth = growth or quadratic()
    m = m or (grid.d + 1 if isinstance(growth, IsentropicGrowth) else grid.d)
    n = grid.n_cells
    atoms = random_phase_points(rng, growth, (n, K), m, spread)
    weights = rng.dirichlet(np.ones(K), size=n)
    weights[rng.random((n, K)) < 0.1] = 0.0  # exercise empty slots
    dead = weights.sum(axis=1) == 0
    weights[dead, 0] = 1.0
    weights /= weights.sum(axis=1, keepdims=True)
    L = grid.n_lambda_cells
    if not concentration:
        return DiscreteYoungMeasure(grid, growth, atoms, weights)
    lam = lambda_scale * rng.exponential(size=L) / n
    lam[rng.random(L) < 0.5] = 0.0
    if not final_layer:
        lam[n:] = 0.0
    angles = random_angles(rng, growth, (L, J), m)
    aw = rng.dirichlet(np.ones(J), size=L)
    aw[lam == 0] = 0.0
    return DiscreteYoungMeasure(grid, growth, atoms, weights, lam, angles, aw)


def spread_around(rng: np.random.Generator, b: np.ndarray, growth: GrowthStructure, K: int = 3, spread: float = 1.0):
    """Atoms and weights with exact per-cell mean ``b`` (density offsets stay above vacuum)."""
    n, m = b.shape
    w = rng.dirichlet(np.ones(K), size=n)
    u = spread * rng.normal(size=(n, K, m))
    u -= np.einsum("nk,nkm->nm", w, u)[:, None, :]
    if isinstance(growth, IsentropicGrowth):
        room = 0.9 * b[:, 0] / np.maximum(np.abs(u[..., 0]).max(axis=1), 1e-300)
        u *= np.minimum(1.0, room)[:, None, None]
    return b[:, None, :] + u, w


def random_barycenter(rng: np.random.Generator, grid: SpaceTimeGrid, growth: GrowthStructure, m: int) -> np.ndarray:
    b = rng.normal(size=(grid.n_cells, m))
    if isinstance(growth, IsentropicGrowth):
        b[:, 0] = rng.uniform(0.5, 2.0, size=grid.n_cells)
    return b


def equal_barycenter_pair(rng: np.random.Generator, grid: SpaceTimeGrid, growth: Optional[GrowthStructure] = None, shift: Optional[np.ndarray] = None):
    """Two measures whose barycenter fields agree, or differ by ``shift`` if given.

    Atoms are offsets with zero weighted mean, so the barycenter is exact up to
    one rounding per coordinate.
    """
    growth = growth or quadratic()
    m = grid.d + 1 if isinstance(growth, IsentropicGrowth) else grid.d
    b = random_barycenter(rng, grid, growth, m)
    a1, w1 = spread_around(rng, b, growth)
    b2 = b if shift is None else b + shift
    a2, w2 = spread_around(rng, b2, growth, K=2)
    Y1 = DiscreteYoungMeasure(grid, growth, a1, w1)
    Y2 = DiscreteYoungMeasure(grid, growth, a2, w2)
    if rng.random() < 0.5:
        L = grid.n_lambda_cells
        lam = np.zeros(L)
        lam[: grid.n_cells] = rng.exponential(size=grid.n_cells) / grid.n_cells
        theta = random_angles(rng, growth, (L, 1), m)
        Y2 = Y2.with_concentration(lam, theta, (lam > 0).astype(float)[:, None])
    return Y1, Y2


def random_candidate_family(
    rng: np.random.Generator, grid: SpaceTimeGrid, n: int = 4, growth: Optional[GrowthStructure] = None, K: int = 3
) -> list:
    return [random_measure(rng, grid, growth, K=K) for _ in range(n)]


def reflected(Y: DiscreteYoungMeasure) -> DiscreteYoungMeasure:
    """Point reflection of every cell's atoms through its barycenter.

    Barycenters are unchanged, and so is every quadratic energy; the
    measure itself differs unless it is symmetric.
    """
    if not isinstance(Y.growth, PowerGrowth):
        raise ValueError("reflection is only energy-preserving for quadratic growth")
    b = Y.barycenter()
    return DiscreteYoungMeasure(
        Y.grid, Y.growth, 2.0 * b[:, None, :] - Y.atoms, Y.weights, Y.lambda_mass, Y.angles, Y.angle_weights
    )


def degenerate_family(rng: np.random.Generator, grid: SpaceTimeGrid, n: int = 3) -> list:
    """``n`` random candidates plus a reflected copy of the first: optimal weights are not unique."""
    base = random_candidate_family(rng, grid, n)
    return base + [reflected(base[0])]


def random_compressible_data(rng: np.random.Generator, grid: SpaceTimeGrid, gamma: float) -> CompressibleData:
    rho0 = rng.uniform(0.2, 2.0, size=grid.n_space)
    u0 = rng.normal(size=(grid.n_space, grid.d))
    return CompressibleData(grid, gamma, rho0, u0)


def _min_recession_angle(growth: IsentropicGrowth, m: int) -> np.ndarray:
    """Surface point where the recession energy is smallest."""
    theta = np.zeros(m)
    if growth.gamma < 3.0:
        theta[1] = 1.0  # |b'|^2 / 2 = 1/2
    else:
        theta[0] = 1.0  # b1^gamma / (gamma - 1) = 1/(gamma - 1)
    return theta


def random_admissible_compressible(rng: np.random.Generator, grid: SpaceTimeGrid, gamma: float, K: int = 2, J: int = 2):
    """A compressible measure obeying the per-slice energy inequality, with its data.

    Oscillation atoms are rescaled by ``(c a1, c^(gamma/2) a')`` so that the
    energy scales exactly like ``c^gamma``; the concentration then uses a random
    share of the energy left in each slice.  A quarter of the instances place
    all angles where the recession energy is minimal, which makes the
    concentration-mass bound nearly tight.
    """
    growth = IsentropicGrowth(gamma)
    data = random_compressible_data(rng, grid, gamma)
    e0 = data.initial_energy
    m = grid.d + 1
    n = grid.n_cells
    atoms = random_phase_points(rng, growth, (n, K), m)
    weights = rng.dirichlet(np.ones(K), size=n)
    Y = DiscreteYoungMeasure(grid, growth, atoms, weights)
    alpha = rng.uniform(0.0, 1.0)
    c = (alpha * e0 / slice_energies(Y).max()) ** (1.0 / gamma)
    atoms = np.concatenate([c * atoms[..., :1], c ** (gamma / 2.0) * atoms[..., 1:]], axis=-1)
    Y = DiscreteYoungMeasure(grid, growth, atoms, weights)
    left = e0 - slice_energies(Y)  # per slice, >= (1 - alpha) e0 up to rounding
    L = grid.n_lambda_cells
    if rng.random() < 0.25:
        angles = np.broadcast_to(_min_recession_angle(growth, m), (L, 1, m)).copy()
        aw = np.ones((L, 1))
    else:
        angles = random_angles(rng, growth, (L, J), m)
        aw = rng.dirichlet(np.ones(J), size=L)
    f_inf = (aw * isentropic_energy(gamma).recession(angles)).sum(axis=1)
    share = rng.exponential(size=n)
    share[rng.random(n) < 0.3] = 0.0
    share = grid.slice_of(share)
    beta = 1.0 if rng.random() < 0.2 else rng.uniform(0.0, 1.0)
    lam = np.zeros(L)
    for i in range(grid.nt):
        tot = share[i].sum()
        if tot == 0 or left[i] <= 0:
            continue
        fi = grid.slice_of(f_inf[:n])[i]
        # lambda_c = k * share_c with sum_c k share_c f_inf_c / dt = beta * left_i
        k = beta * left[i] * grid.dt / math.fsum(share[i] * fi)
        lam[i * grid.n_space : (i + 1) * grid.n_space] = k * share[i] * (1.0 - 1e-12)
    aw[lam == 0] = 0.0
    return Y.with_concentration(lam, angles, aw), data
