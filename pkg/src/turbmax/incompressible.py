"""Measure-valued solutions of the incompressible Euler equations on the torus.

Phase space is velocity space ``R^d``.  The pressure never appears: momentum
tests are divergence-free, which removes the gradient term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import SpaceTimeGrid
from .growth import PowerGrowth
from .integrands import kinetic_energy
from .measure import DiscreteYoungMeasure, MeasureError
from .weakform import (
    DIV_TOL,
    AdmissibilityReport,
    ResidualReport,
    ResidualSet,
    TestFunctionDictionary,
    weak_residuals,
)

# Normalized momentum residual of the steady shear flow v = (sin x2, 0) behaves
# like C_EST * resolution**2; see scripts/calibrate_residual_constant.py.
C_EST = 1.95e-2


def default_residual_tol(grid: SpaceTimeGrid) -> float:
    return 10.0 * C_EST * grid.resolution**2


@dataclass(frozen=True)
class IncompressibleData:
    """Initial velocity sampled at spatial cell centers, shape ``(n_space, d)``."""

    grid: SpaceTimeGrid
    v0: np.ndarray

    def __post_init__(self):
        v0 = np.array(self.v0, dtype=float)
        if v0.ndim == 1 and v0.shape[0] == self.grid.d:
            v0 = np.tile(v0, (self.grid.n_space, 1))
        if v0.shape != (self.grid.n_space, self.grid.d):
            raise ValueError(f"v0 must have shape {(self.grid.n_space, self.grid.d)}, got {v0.shape}")
        if not np.all(np.isfinite(v0)):
            raise ValueError("v0 contains NaN or infinite values")
        v0.flags.writeable = False
        object.__setattr__(self, "v0", v0)

    @classmethod
    def from_function(cls, grid: SpaceTimeGrid, v0) -> "IncompressibleData":
        return cls(grid, np.asarray(v0(grid.x_centers), dtype=float))

    @property
    def initial_energy(self) -> float:
        return math.fsum(self.grid.space_volume * 0.5 * (self.v0**2).sum(axis=1))


def default_dictionaries(grid: SpaceTimeGrid, K: int = 3, n_profiles: int = 4):
    scalar = TestFunctionDictionary.build("scalar", grid.T, grid.d, K, n_profiles)
    vector = TestFunctionDictionary.build("solenoidal", grid.T, grid.d, K, n_profiles)
    return scalar, vector


def _check_measure(Y: DiscreteYoungMeasure) -> None:
    if not isinstance(Y.growth, PowerGrowth) or Y.growth.p != 2.0:
        raise MeasureError("incompressible measures use quadratic growth")
    if Y.m != Y.grid.d:
        raise MeasureError(f"phase dimension {Y.m} must equal space dimension {Y.grid.d}")


def _scale(Y: DiscreteYoungMeasure, initial: Optional[np.ndarray] = None) -> float:
    s = Y.finite_mass()
    if initial is not None:
        s += Y.grid.space_volume * float(np.abs(initial).sum())
    return s


def _normalize(raw, tests, scale):
    return raw / (tests.norms() * scale)


def residual_mass(Y: DiscreteYoungMeasure, tests: Optional[TestFunctionDictionary] = None, normalize: bool = True) -> np.ndarray:
    """Residuals of ``int int <nu, v> . grad psi dx dt`` for each scalar test ``psi``."""
    _check_measure(Y)
    g = Y.grid
    tests = tests or default_dictionaries(g)[0]
    if tests.components != 1:
        raise ValueError("mass residual needs scalar tests")
    flux = Y.barycenter()[:, None, :]
    raw = weak_residuals(g, tests, flux)
    return _normalize(raw, tests, _scale(Y)) if normalize else raw


def momentum_flux(Y: DiscreteYoungMeasure) -> np.ndarray:
    """``<nu, v (x) v>`` plus the concentration term ``lambda <nu_inf, theta (x) theta>`` per unit volume."""
    g = Y.grid
    F = np.einsum("nk,nki,nkj->nij", Y.weights, Y.atoms, Y.atoms)
    if Y.angles.shape[1]:
        lam = Y.lambda_mass[: g.n_cells]
        A = Y.angles[: g.n_cells]
        G = np.einsum("nk,nki,nkj->nij", Y.angle_weights[: g.n_cells], A, A)
        F = F + (lam / g.cell_volume)[:, None, None] * G
    return F


def residual_momentum(
    Y: DiscreteYoungMeasure,
    data: IncompressibleData,
    tests: Optional[TestFunctionDictionary] = None,
    normalize: bool = True,
) -> np.ndarray:
    """Residuals of the momentum equation against divergence-free tests ``phi``.

    ``int int [<nu, v> . d_t phi + <nu, v (x) v> : grad phi] dx dt
    + int <nu_inf, theta (x) theta> : grad phi dlambda + int v0 . phi(0) dx``.
    Final-layer concentration does not contribute since every test vanishes at ``t = T``.
    """
    _check_measure(Y)
    g = Y.grid
    if data.grid.d != g.d or data.grid.nx != g.nx:
        raise ValueError("initial data and measure use different spatial grids")
    tests = tests or default_dictionaries(g)[1]
    if tests.components != g.d or tests.divergence_residual() > DIV_TOL:
        raise ValueError("momentum tests must be divergence-free vector fields")
    raw = weak_residuals(g, tests, momentum_flux(Y), density=Y.barycenter(), initial=data.v0)
    return _normalize(raw, tests, _scale(Y, data.v0)) if normalize else raw


def check_admissibility(Y: DiscreteYoungMeasure, data: IncompressibleData, tol: Optional[float] = None) -> AdmissibilityReport:
    """Per-slice energy margins ``E0 - [int <nu, |v|^2>/2 dx + lambda_t(T^d)/2]``.

    ``lambda_t`` is the slice's interior concentration mass divided by ``dt``.
    Mass on the final layer is concentrated at a single time and admits no
    time-disintegration, so it makes the measure inadmissible.
    """
    _check_measure(Y)
    g = Y.grid
    f = kinetic_energy(Y.growth)
    osc = g.slice_of(Y.cell_means(f))  # (nt, n_space)
    lam = g.slice_of(Y.lambda_mass)
    e0 = data.initial_energy
    slice_energy = np.array(
        [math.fsum(g.space_volume * osc[i]) + 0.5 * math.fsum(lam[i]) / g.dt for i in range(g.nt)]
    )
    margins = e0 - slice_energy
    tol = 1e-12 * (1.0 + abs(e0)) if tol is None else tol
    return AdmissibilityReport(e0, slice_energy, margins, Y.final_layer_mass, tol)


def check(
    Y: DiscreteYoungMeasure,
    data: IncompressibleData,
    K: int = 3,
    n_profiles: int = 4,
    residual_tol: Optional[float] = None,
    energy_tol: Optional[float] = None,
) -> ResidualReport:
    scalar, vector = default_dictionaries(Y.grid, K, n_profiles)
    mass = ResidualSet("mass", residual_mass(Y, scalar, normalize=False), residual_mass(Y, scalar), scalar)
    mom_raw = residual_momentum(Y, data, vector, normalize=False)
    mom = ResidualSet("momentum", mom_raw, _normalize(mom_raw, vector, _scale(Y, data.v0)), vector)
    tol = default_residual_tol(Y.grid) if residual_tol is None else residual_tol
    return ResidualReport([mass, mom], tol, check_admissibility(Y, data, energy_tol))
