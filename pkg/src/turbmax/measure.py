"""Finite-atomic generalized Young measures on a space-time grid.

A :class:`DiscreteYoungMeasure` stores, per interior cell, a probability
measure made of weighted phase atoms (the oscillation measure), and per
concentration cell (interior cells plus the final-time layer) a nonnegative
mass together with a probability measure of weighted angle atoms on the
recession surface.

Storage is padded: ``atoms`` has shape ``(n_cells, K, m)`` and ``weights``
shape ``(n_cells, K)``; slots beyond a cell's atom count carry weight zero
and a copy of a valid atom, so vectorized evaluation never touches points
outside the integrand's domain.  Zero-weight atoms are therefore not
distinguishable from absent ones and are dropped by the cell views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import SpaceTimeGrid
from .growth import SURFACE_TOL, GrowthStructure, IsentropicGrowth, quadratic
from .integrands import ConvexIntegrand

WEIGHT_TOL = 1e-12
VACUUM_FLOOR = 1e-14


class MeasureError(ValueError):
    """Invalid measure data or incompatible measures."""


@dataclass(frozen=True)
class PhaseAtom:
    z: tuple
    w: float


@dataclass(frozen=True)
class AngleAtom:
    theta: tuple
    w: float


@dataclass(frozen=True)
class CellMeasure:
    """One cell's slice of the triple: phase atoms, concentration mass, angle atoms."""

    atoms: tuple = ()
    lambda_mass: float = 0.0
    angle_atoms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "angle_atoms", tuple(self.angle_atoms))
        if not self.lambda_mass >= 0:
            raise MeasureError(f"lambda_mass must be nonnegative, got {self.lambda_mass!r}")
        if (self.lambda_mass == 0) != (len(self.angle_atoms) == 0):
            raise MeasureError("angle atoms must be present exactly when lambda_mass > 0")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _sanitize(points: np.ndarray, weights: np.ndarray, filler: np.ndarray) -> np.ndarray:
    """Overwrite zero-weight slots with the first positive-weight point of the cell (or ``filler``)."""
    points = points.copy()
    if points.shape[1] == 0:
        return points
    pos = weights > 0
    first = np.argmax(pos, axis=1)
    rows = np.arange(points.shape[0])
    ref = points[rows, first]
    ref[~pos.any(axis=1)] = filler
    mask = ~pos
    points[mask] = np.broadcast_to(ref[:, None, :], points.shape)[mask]
    return points


@dataclass(frozen=True, eq=False)
class DiscreteYoungMeasure:
    """Immutable finite-atomic generalized Young measure.

    Parameters
    ----------
    grid, growth
        Space-time grid and the growth structure the measure is built for.
    atoms, weights
        Phase atoms ``(n_cells, K, m)`` and their weights ``(n_cells, K)``.
    lambda_mass
        Concentration mass per concentration cell, ``(grid.n_lambda_cells,)``.
        This is a mass, not a density.
    angles, angle_weights
        Angle atoms ``(n_lambda_cells, J, m)`` on the recession surface and their
        weights; all weights of a cell vanish exactly when its mass vanishes.
    """

    grid: SpaceTimeGrid
    growth: GrowthStructure
    atoms: np.ndarray
    weights: np.ndarray
    lambda_mass: Optional[np.ndarray] = None
    angles: Optional[np.ndarray] = None
    angle_weights: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g = self.grid
        atoms = np.array(self.atoms, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if atoms.ndim == 2:
            atoms = atoms[:, None, :]
        if weights.ndim == 1:
            weights = weights[:, None]
        if atoms.ndim != 3 or atoms.shape[0] != g.n_cells:
            raise MeasureError(f"atoms must have shape (n_cells={g.n_cells}, K, m), got {atoms.shape}")
        if weights.shape != atoms.shape[:2]:
            raise MeasureError(f"weights shape {weights.shape} does not match atoms {atoms.shape[:2]}")
        m = atoms.shape[2]
        self.growth.check_dimension(m)
        if not np.all(np.isfinite(atoms)):
            raise MeasureError("NaN or infinite phase atom")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise MeasureError("phase weights must be finite and nonnegative")
        sums = weights.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > WEIGHT_TOL)
        if bad.size:
            raise MeasureError(f"cell {bad[0]}: phase weights sum to {sums[bad[0]]!r}, not 1")
        if isinstance(self.growth, IsentropicGrowth):
            vac = (weights > 0) & (atoms[..., 0] <= VACUUM_FLOOR)
            if vac.any():
                raise MeasureError(f"cell {np.argwhere(vac)[0][0]}: vacuum atom (density <= {VACUUM_FLOOR})")
        atoms = _sanitize(atoms, weights, atoms[0, 0])

        L = g.n_lambda_cells
        lam = np.zeros(L) if self.lambda_mass is None else np.array(self.lambda_mass, dtype=float)
        if lam.shape != (L,):
            raise MeasureError(f"lambda_mass must have shape ({L},), got {lam.shape}")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise MeasureError("lambda_mass must be finite and nonnegative")
        if self.angles is None:
            if np.any(lam > 0):
                raise MeasureError("concentration mass given without angle atoms")
            angles = np.zeros((L, 0, m))
            aw = np.zeros((L, 0))
        else:
            angles = np.array(self.angles, dtype=float)
            aw = np.array(self.angle_weights, dtype=float)
            if angles.ndim == 2:
                angles = angles[:, None, :]
            if aw.ndim == 1:
                aw = aw[:, None]
        if angles.shape[0] != L or angles.shape[2] != m or aw.shape != angles.shape[:2]:
            raise MeasureError(f"angle arrays have inconsistent shapes {angles.shape}, {aw.shape}")
        if not np.all(np.isfinite(angles)) or not np.all(np.isfinite(aw)) or np.any(aw < 0):
            raise MeasureError("angle atoms and weights must be finite, weights nonnegative")
        asum = aw.sum(axis=1)
        charged = lam > 0
        bad = np.flatnonzero(charged & (np.abs(asum - 1.0) > WEIGHT_TOL))
        if bad.size:
            raise MeasureError(f"cell {bad[0]}: angle weights sum to {asum[bad[0]]!r}, not 1")
        bad = np.flatnonzero(~charged & (asum != 0))
        if bad.size:
            raise MeasureError(f"cell {bad[0]}: angle atoms present where lambda_mass is 0")
        if angles.shape[1]:
            res = self.growth.surface_residual(angles)
            off = (aw > 0) & ~(res <= SURFACE_TOL)
            if off.any():
                i = np.argwhere(off)[0]
                raise MeasureError(f"cell {i[0]}: angle atom off the recession surface (residual {res[i[0], i[1]]:.3e})")
            angles = _sanitize(angles, aw, self.growth.canonical_point(m))

        object.__setattr__(self, "atoms", _readonly(atoms))
        object.__setattr__(self, "weights", _readonly(weights))
        object.__setattr__(self, "lambda_mass", _readonly(lam))
        object.__setattr__(self, "angles", _readonly(angles))
        object.__setattr__(self, "angle_weights", _readonly(aw))

        mass = math.fsum(g.cell_volume * (weights * self.growth.weight(atoms)).sum(axis=1)) + math.fsum(lam)
        if not math.isfinite(mass):
            raise MeasureError("measure violates the finite-mass bound")

    # -- basic properties -------------------------------------------------

    @property
    def m(self) -> int:
        """Phase-space dimension."""
        return self.atoms.shape[2]

    @property
    def total_lambda(self) -> float:
        return math.fsum(self.lambda_mass)

    @property
    def final_layer_mass(self) -> float:
        return math.fsum(self.lambda_mass[self.grid.n_cells:])

    def finite_mass(self) -> float:
        """``sum vol <nu, weight> + lambda(closure)``."""
        w = (self.weights * self.growth.weight(self.atoms)).sum(axis=1)
        return math.fsum(self.grid.cell_volume * w) + self.total_lambda

    def cell(self, index: int) -> CellMeasure:
        """View of one concentration cell; final-layer cells have no phase atoms."""
        g = self.grid
        if index < 0 or index >= g.n_lambda_cells:
            raise IndexError(f"cell index {index} out of range")
        atoms = ()
        if index < g.n_cells:
            atoms = tuple(
                PhaseAtom(tuple(map(float, self.atoms[index, k])), float(w))
                for k, w in enumerate(self.weights[index]) if w > 0
            )
        angles = tuple(
            AngleAtom(tuple(map(float, self.angles[index, j])), float(w))
            for j, w in enumerate(self.angle_weights[index]) if w > 0
        )
        return CellMeasure(atoms, float(self.lambda_mass[index]), angles)

    def cells(self) -> list[CellMeasure]:
        return [self.cell(i) for i in range(self.grid.n_lambda_cells)]

    @classmethod
    def from_cells(cls, grid: SpaceTimeGrid, growth: GrowthStructure, cells: Sequence[CellMeasure]) -> "DiscreteYoungMeasure":
        """Assemble from one :class:`CellMeasure` per concentration cell (final layer last)."""
        if len(cells) != grid.n_lambda_cells:
            raise MeasureError(f"expected {grid.n_lambda_cells} cells, got {len(cells)}")
        inner = cells[: grid.n_cells]
        if any(not c.atoms for c in inner):
            raise MeasureError("every interior cell needs at least one phase atom")
        if any(c.atoms for c in cells[grid.n_cells:]):
            raise MeasureError("final-layer cells carry no phase atoms")
        m = len(inner[0].atoms[0].z)
        K = max(len(c.atoms) for c in inner)
        J = max((len(c.angle_atoms) for c in cells), default=0)
        atoms = np.zeros((grid.n_cells, K, m))
        weights = np.zeros((grid.n_cells, K))
        for i, c in enumerate(inner):
            for k, a in enumerate(c.atoms):
                if len(a.z) != m:
                    raise MeasureError(f"cell {i}: atom dimension {len(a.z)} != {m}")
                atoms[i, k] = a.z
                weights[i, k] = a.w
        lam = np.array([c.lambda_mass for c in cells], dtype=float)
        angles = np.zeros((grid.n_lambda_cells, J, m))
        aw = np.zeros((grid.n_lambda_cells, J))
        for i, c in enumerate(cells):
            for j, a in enumerate(c.angle_atoms):
                angles[i, j] = a.theta
                aw[i, j] = a.w
        return cls(grid, growth, atoms, weights, lam, angles, aw)

    def with_concentration(self, lambda_mass, angles, angle_weights) -> "DiscreteYoungMeasure":
        """Same oscillation measure, replaced concentration part."""
        return DiscreteYoungMeasure(self.grid, self.growth, self.atoms, self.weights, lambda_mass, angles, angle_weights)

    # -- cached per-cell quantities ----------------------------------------

    def cell_means(self, f: ConvexIntegrand) -> np.ndarray:
        """``<nu_cell, f>`` for every interior cell."""
        return (self.weights * f.eval(self.atoms)).sum(axis=1)

    def angle_means(self, f: ConvexIntegrand) -> np.ndarray:
        """``<nu_inf_cell, f_inf>`` for every concentration cell (0 where the mass vanishes)."""
        if self.angles.shape[1] == 0:
            return np.zeros(self.grid.n_lambda_cells)
        return (self.angle_weights * f.recession(self.angles)).sum(axis=1)

    def barycenter(self) -> np.ndarray:
        key = "barycenter"
        if key not in self._cache:
            b = np.einsum("nk,nkm->nm", self.weights, self.atoms)
            self._cache[key] = _readonly(b)
        return self._cache[key]


# -- constructors -------------------------------------------------------------


def _field_on_grid(v, grid: SpaceTimeGrid) -> np.ndarray:
    if callable(v):
        t, x = grid.cell_centers()
        field_ = np.asarray(v(t, x), dtype=float)
    else:
        field_ = np.asarray(v, dtype=float)
        if field_.ndim == 2 and field_.shape[0] == grid.n_space and grid.nt > 1:
            field_ = np.tile(field_, (grid.nt, 1))
    if field_.ndim == 1:
        field_ = field_[:, None]
    if field_.shape[0] != grid.n_cells:
        raise MeasureError(f"field has {field_.shape[0]} rows, grid has {grid.n_cells} cells")
    return field_


def young_of_function(v, grid: SpaceTimeGrid, growth: Optional[GrowthStructure] = None) -> DiscreteYoungMeasure:
    """Dirac measure of a field sampled at cell centers; no concentration.

    ``v`` is either a callable ``v(t, x)`` returning ``(P, m)`` values at
    points ``t (P,)``, ``x (P, d)``, an array over all interior cells, or an
    array over spatial cells only (repeated in time).
    """
    growth = growth or quadratic()
    field_ = _field_on_grid(v, grid)
    if not np.all(np.isfinite(field_)):
        raise MeasureError("NaN or infinite value in field")
    return DiscreteYoungMeasure(grid, growth, field_[:, None, :], np.ones((grid.n_cells, 1)))


def constant_mixture(grid: SpaceTimeGrid, points, weights, growth: Optional[GrowthStructure] = None) -> DiscreteYoungMeasure:
    """The same atomic measure in every interior cell."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    atoms = np.broadcast_to(points, (grid.n_cells,) + points.shape)
    w = np.broadcast_to(weights, (grid.n_cells, len(weights)))
    return DiscreteYoungMeasure(grid, growth or quadratic(), atoms, w)


def uniform_concentration(Y: DiscreteYoungMeasure, total_mass: float, theta, where: str = "interior") -> DiscreteYoungMeasure:
    """Add ``total_mass`` spread evenly over interior cells (or the final layer), all at angle ``theta``."""
    g = Y.grid
    added = np.zeros(g.n_lambda_cells)
    if where == "interior":
        added[: g.n_cells] = total_mass / g.n_cells
    elif where == "final":
        if not g.includes_final_layer:
            raise MeasureError("grid has no final layer")
        added[g.n_cells:] = total_mass / g.n_layer
    else:
        raise ValueError(f"unknown placement {where!r}")
    return add_concentration(Y, added, theta)


def add_concentration(Y: DiscreteYoungMeasure, added_mass, theta) -> DiscreteYoungMeasure:
    """Add per-cell concentration mass ``added_mass`` carried by the single angle ``theta``."""
    added = np.asarray(added_mass, dtype=float)
    if added.shape != Y.lambda_mass.shape or np.any(added < 0):
        raise MeasureError("added mass must be a nonnegative array over concentration cells")
    theta = np.asarray(theta, dtype=float)
    lam = Y.lambda_mass + added
    L = Y.grid.n_lambda_cells
    angles = np.concatenate([Y.angles, np.broadcast_to(theta, (L, 1, Y.m))], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        old_share = np.where(lam > 0, Y.lambda_mass / lam, 0.0)
        new_share = np.where(lam > 0, added / lam, 0.0)
    aw = np.concatenate([Y.angle_weights * old_share[:, None], new_share[:, None]], axis=1)
    return _compact(Y.grid, Y.growth, Y.atoms, Y.weights, lam, angles, aw)


# -- algebra --------------------------------------------------------------


def _merge_rows(points: np.ndarray, weights: np.ndarray):
    """Drop zero weights and merge identical points of one cell, keeping first-seen order."""
    keep = weights > 0
    pts = points[keep]
    w = weights[keep]
    if len(w) <= 1:
        return pts, w
    uniq, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    if len(uniq) == len(w):
        return pts, w
    inverse = np.asarray(inverse).ravel()
    merged = np.zeros(len(uniq))
    np.add.at(merged, inverse, w)
    order = np.argsort(first)
    return uniq[order], merged[order]


def _pack(rows: list, n: int, m: int):
    K = max((len(w) for _, w in rows), default=0)
    pts = np.zeros((n, K, m))
    wts = np.zeros((n, K))
    for i, (p, w) in enumerate(rows):
        pts[i, : len(w)] = p
        wts[i, : len(w)] = w
    return pts, wts


def _compact(grid, growth, atoms, weights, lam, angles, aw) -> DiscreteYoungMeasure:
    m = atoms.shape[2]
    rows = [_merge_rows(atoms[i], weights[i]) for i in range(grid.n_cells)]
    atoms, weights = _pack(rows, grid.n_cells, m)
    arows = [_merge_rows(angles[i], aw[i]) for i in range(grid.n_lambda_cells)]
    angles, aw = _pack(arows, grid.n_lambda_cells, m)
    return DiscreteYoungMeasure(grid, growth, atoms, weights, lam, angles, aw)


def _check_compatible(measures: Sequence[DiscreteYoungMeasure]) -> None:
    first = measures[0]
    for Y in measures[1:]:
        if Y.grid != first.grid:
            raise MeasureError("measures live on different grids")
        if Y.growth != first.growth:
            raise MeasureError("measures have different growth structures")
        if Y.m != first.m:
            raise MeasureError("measures have different phase dimensions")


def _mix(measures: Sequence[DiscreteYoungMeasure], theta: np.ndarray) -> DiscreteYoungMeasure:
    grid = measures[0].grid
    used = [(Y, t) for Y, t in zip(measures, theta) if t > 0]
    if len(used) == 1:
        return used[0][0]
    atoms = np.concatenate([Y.atoms for Y, _ in used], axis=1)
    weights = np.concatenate([t * Y.weights for Y, t in used], axis=1)
    lam = sum(t * Y.lambda_mass for Y, t in used)
    angles = np.concatenate([Y.angles for Y, _ in used], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        shares = [np.where(lam > 0, t * Y.lambda_mass / lam, 0.0) for Y, t in used]
    aw = np.concatenate([s[:, None] * Y.angle_weights for s, (Y, _) in zip(shares, used)], axis=1)
    return _compact(grid, measures[0].growth, atoms, weights, lam, angles, aw)


def convex_combine(Y1: DiscreteYoungMeasure, Y2: DiscreteYoungMeasure, tau: float) -> DiscreteYoungMeasure:
    """Convex combination ``tau * Y1 + (1 - tau) * Y2`` of two generalized Young measures.

    Oscillation measures and concentration masses combine linearly; the angle
    measure of a cell is the mass-weighted merge of the two angle measures.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    _check_compatible([Y1, Y2])
    return _mix([Y1, Y2], np.array([tau, 1.0 - tau]))


def convex_combine_n(candidates: Sequence[DiscreteYoungMeasure], theta) -> DiscreteYoungMeasure:
    """Combination of several measures with simplex weights ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if len(candidates) == 0:
        raise ValueError("no measures to combine")
    if theta.shape != (len(candidates),):
        raise ValueError(f"need {len(candidates)} weights, got shape {theta.shape}")
    if np.any(theta < -1e-15) or abs(theta.sum() - 1.0) > 1e-12:
        raise ValueError("weights must lie on the probability simplex")
    _check_compatible(candidates)
    return _mix(candidates, np.clip(theta, 0.0, None))


def coalesce(Y: DiscreteYoungMeasure, eps: float) -> DiscreteYoungMeasure:
    """Merge phase atoms closer than ``eps`` (max-norm) into the earlier one.

    This changes pairings by at most the modulus of continuity of the
    integrand over ``eps``; it is never applied implicitly.
    """
    rows = []
    for i in range(Y.grid.n_cells):
        keep_p, keep_w = [], []
        for z, w in zip(Y.atoms[i], Y.weights[i]):
            if w <= 0:
                continue
            for j, p in enumerate(keep_p):
                if np.max(np.abs(p - z)) <= eps:
                    keep_w[j] += w
                    break
            else:
                keep_p.append(z)
                keep_w.append(w)
        rows.append((np.array(keep_p), np.array(keep_w)))
    atoms, weights = _pack(rows, Y.grid.n_cells, Y.m)
    return DiscreteYoungMeasure(Y.grid, Y.growth, atoms, weights, Y.lambda_mass, Y.angles, Y.angle_weights)


def barycenter(Y: DiscreteYoungMeasure) -> np.ndarray:
    """Mean ``<nu_cell, z>`` per interior cell, shape ``(n_cells, m)``."""
    return Y.barycenter()


def pairing(Y: DiscreteYoungMeasure, f: ConvexIntegrand, phi: Optional[Callable] = None) -> float:
    """``int phi <nu, f> dx + int phi <nu_inf, f_inf> dlambda`` by the midpoint rule.

    ``phi(t, x)`` is evaluated at cell centers (``t = T`` on the final layer);
    ``None`` means ``phi = 1``.  The reduction is a correctly rounded sum over
    cells in a fixed order, so the result is bit-reproducible.
    """
    if not f.compatible_with(Y.growth):
        raise MeasureError(f"integrand growth {f.growth!r} does not match measure growth {Y.growth!r}")
    g = Y.grid
    inner = g.cell_volume * Y.cell_means(f)
    conc = Y.lambda_mass * Y.angle_means(f)
    if phi is not None:
        t, x = g.lambda_centers()
        vals = np.asarray(phi(t, x), dtype=float)
        inner = inner * vals[: g.n_cells]
        conc = conc * vals
    terms = np.concatenate([inner, conc])
    if not np.all(np.isfinite(terms)):
        raise MeasureError("pairing produced a non-finite value")
    return math.fsum(terms)
