"""Measure-valued solutions of the isentropic compressible Euler equations.

Phase points are ``(a1, a')`` with ``a1`` standing for the density and ``a'``
for ``sqrt(rho) u``; the pressure law is ``p(rho) = rho**gamma``.  Angle
atoms ``(b1, b')`` live on ``{b1^(2 gamma) + |b'|^4 = 1, b1 >= 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import SpaceTimeGrid
from .growth import IsentropicGrowth
from .integrands import isentropic_energy
from .measure import VACUUM_FLOOR, DiscreteYoungMeasure, MeasureError
from .weakform import AdmissibilityReport, ResidualReport, ResidualSet, TestFunctionDictionary, weak_residuals
from .incompressible import default_residual_tol


def state(rho, u) -> np.ndarray:
    """Phase coordinates ``(rho, sqrt(rho) u)`` from density and velocity."""
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(rho <= VACUUM_FLOOR):
        raise MeasureError("density must stay away from vacuum")
    return np.concatenate([rho[..., None], np.sqrt(rho)[..., None] * u], axis=-1)


@dataclass(frozen=True)
class CompressibleData:
    """Initial density ``(n_space,)`` and velocity ``(n_space, d)`` at spatial cell centers."""

    grid: SpaceTimeGrid
    gamma: float
    rho0: np.ndarray
    u0: np.ndarray

    def __post_init__(self):
        g = self.grid
        if not self.gamma > 1:
            raise ValueError(f"adiabatic exponent must exceed 1, got {self.gamma!r}")
        rho0 = np.array(self.rho0, dtype=float)
        u0 = np.array(self.u0, dtype=float)
        if rho0.ndim == 0:
            rho0 = np.full(g.n_space, float(rho0))
        if u0.ndim == 1 and u0.shape[0] == g.d:
            u0 = np.tile(u0, (g.n_space, 1))
        if rho0.shape != (g.n_space,) or u0.shape != (g.n_space, g.d):
            raise ValueError("rho0 / u0 do not match the spatial grid")
        if not (np.all(np.isfinite(rho0)) and np.all(np.isfinite(u0))):
            raise ValueError("initial data contain NaN or infinite values")
        if np.any(rho0 <= 0):
            raise ValueError("initial density must be strictly positive (vacuum is excluded)")
        rho0.flags.writeable = False
        u0.flags.writeable = False
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "u0", u0)

    @property
    def growth(self) -> IsentropicGrowth:
        return IsentropicGrowth(self.gamma)

    @property
    def momentum0(self) -> np.ndarray:
        return self.rho0[:, None] * self.u0

    @property
    def initial_energy(self) -> float:
        e = 0.5 * self.rho0 * (self.u0**2).sum(axis=1) + self.rho0**self.gamma / (self.gamma - 1.0)
        return math.fsum(self.grid.space_volume * e)


def default_dictionaries(grid: SpaceTimeGrid, K: int = 3, n_profiles: int = 4):
    scalar = TestFunctionDictionary.build("scalar", grid.T, grid.d, K, n_profiles)
    vector = TestFunctionDictionary.build("vector", grid.T, grid.d, K, n_profiles)
    return scalar, vector


def _check_measure(Y: DiscreteYoungMeasure, data: Optional[CompressibleData] = None) -> None:
    if not isinstance(Y.growth, IsentropicGrowth):
        raise MeasureError("compressible measures use isentropic growth")
    if Y.m != 1 + Y.grid.d:
        raise MeasureError(f"phase dimension {Y.m} must be 1 + d = {1 + Y.grid.d}")
    if np.any((Y.weights > 0) & (Y.atoms[..., 0] <= VACUUM_FLOOR)):
        raise MeasureError("vacuum atom")
    if data is not None:
        if data.gamma != Y.growth.gamma:
            raise MeasureError("measure and data use different adiabatic exponents")
        if data.grid.d != Y.grid.d or data.grid.nx != Y.grid.nx:
            raise ValueError("initial data and measure use different spatial grids")


def _scale(Y, initial):
    return Y.finite_mass() + Y.grid.space_volume * float(np.abs(initial).sum())


def residual_mass_c(
    Y: DiscreteYoungMeasure,
    data: CompressibleData,
    tests: Optional[TestFunctionDictionary] = None,
    normalize: bool = True,
) -> np.ndarray:
    """``int int [<nu, a1> d_t psi + <nu, sqrt(a1) a'> . grad psi] dx dt + int rho0 psi(0) dx``."""
    _check_measure(Y, data)
    g = Y.grid
    tests = tests or default_dictionaries(g)[0]
    density = Y.barycenter()[:, :1]
    mom = np.einsum("nk,nk,nkj->nj", Y.weights, np.sqrt(Y.atoms[..., 0]), Y.atoms[..., 1:])
    raw = weak_residuals(g, tests, mom[:, None, :], density=density, initial=data.rho0[:, None])
    if not normalize:
        return raw
    return raw / (tests.norms() * _scale(Y, data.rho0))


def momentum_flux_c(Y: DiscreteYoungMeasure, include_pressure: bool = True) -> np.ndarray:
    """``<nu, a' (x) a'> + <nu, a1^gamma> I`` plus concentration terms per unit volume."""
    g = Y.grid
    gam = Y.growth.gamma
    ap = Y.atoms[..., 1:]
    F = np.einsum("nk,nki,nkj->nij", Y.weights, ap, ap)
    eye = np.eye(g.d)
    if include_pressure:
        F = F + (Y.weights * Y.atoms[..., 0] ** gam).sum(axis=1)[:, None, None] * eye
    if Y.angles.shape[1]:
        aw = Y.angle_weights[: g.n_cells]
        bp = Y.angles[: g.n_cells, :, 1:]
        G = np.einsum("nk,nki,nkj->nij", aw, bp, bp)
        if include_pressure:
            G = G + (aw * Y.angles[: g.n_cells, :, 0] ** gam).sum(axis=1)[:, None, None] * eye
        F = F + (Y.lambda_mass[: g.n_cells] / g.cell_volume)[:, None, None] * G
    return F


def residual_momentum_c(
    Y: DiscreteYoungMeasure,
    data: CompressibleData,
    tests: Optional[TestFunctionDictionary] = None,
    normalize: bool = True,
    include_pressure: bool = True,
) -> np.ndarray:
    """Momentum residuals against general (not necessarily divergence-free) vector tests.

    ``include_pressure=False`` drops both pressure terms; it exists only as an
    ablation to show that the pressure is needed.
    """
    _check_measure(Y, data)
    g = Y.grid
    tests = tests or default_dictionaries(g)[1]
    if tests.components != g.d:
        raise ValueError("momentum tests must be vector fields")
    density = np.einsum("nk,nk,nkj->nj", Y.weights, np.sqrt(Y.atoms[..., 0]), Y.atoms[..., 1:])
    raw = weak_residuals(g, tests, momentum_flux_c(Y, include_pressure), density=density, initial=data.momentum0)
    if not normalize:
        return raw
    return raw / (tests.norms() * _scale(Y, data.momentum0))


def slice_energies(Y: DiscreteYoungMeasure) -> np.ndarray:
    g = Y.grid
    f = isentropic_energy(Y.growth.gamma)
    osc = g.slice_of(Y.cell_means(f))
    conc = g.slice_of(Y.lambda_mass * Y.angle_means(f))
    return np.array([math.fsum(g.space_volume * osc[i]) + math.fsum(conc[i]) / g.dt for i in range(g.nt)])


def check_admissibility_c(Y: DiscreteYoungMeasure, data: CompressibleData, tol: Optional[float] = None) -> AdmissibilityReport:
    """Per-slice margins of the energy inequality with the full concentration energy."""
    _check_measure(Y, data)
    e0 = data.initial_energy
    se = slice_energies(Y)
    tol = 1e-12 * (1.0 + abs(e0)) if tol is None else tol
    return AdmissibilityReport(e0, se, e0 - se, Y.final_layer_mass, tol)


def lambda_bound_constant(gamma: float) -> float:
    return max(2.0, gamma - 1.0)


def lambda_mass_bound(Y: DiscreteYoungMeasure, data: CompressibleData) -> tuple[float, float, bool]:
    """``(lambda_total, max(2, gamma - 1) T E0, holds)`` for an admissible measure."""
    _check_measure(Y, data)
    lhs = Y.total_lambda
    rhs = lambda_bound_constant(data.gamma) * Y.grid.T * data.initial_energy
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-12)


def check(
    Y: DiscreteYoungMeasure,
    data: CompressibleData,
    K: int = 3,
    n_profiles: int = 4,
    residual_tol: Optional[float] = None,
    energy_tol: Optional[float] = None,
) -> ResidualReport:
    scalar, vector = default_dictionaries(Y.grid, K, n_profiles)
    mass = ResidualSet("mass", residual_mass_c(Y, data, scalar, normalize=False), residual_mass_c(Y, data, scalar), scalar)
    mom = ResidualSet(
        "momentum", residual_momentum_c(Y, data, vector, normalize=False), residual_momentum_c(Y, data, vector), vector
    )
    tol = default_residual_tol(Y.grid) if residual_tol is None else residual_tol
    return ResidualReport([mass, mom], tol, check_admissibility_c(Y, data, energy_tol))
