"""Test-function dictionaries and the midpoint-rule weak-form residual engine.

Every test function has the separable form ``phi(t, x) = eta_j(t) s(k . x) a``
with time profile ``eta_j(t) = (1 - t/T)^j`` (vanishing at ``t = T``), a
Fourier mode ``s`` in ``{cos, sin}`` (or the constant mode ``k = 0``) and a
constant amplitude vector ``a``.  For divergence-free dictionaries ``a`` is
taken from the range of ``I - k k^T / |k|^2``.

A weak form is described by a *density* ``D`` (paired with ``d_t phi``), a
*flux* ``F`` (paired with ``grad phi`` as ``sum_ij F_ij d_j phi_i``) and an
initial datum ``I`` (paired with ``phi(0, .)``)::

    R(phi) = int int [D . d_t phi + F : grad phi] dx dt + int I . phi(0, x) dx

All integrals use the midpoint rule on the grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import SpaceTimeGrid

DIV_TOL = 1e-12


def half_lattice(d: int, K: int) -> np.ndarray:
    """Nonzero wave vectors with entries in ``[-K, K]``, one of each ``+-k`` pair."""
    out = []
    for k in itertools.product(range(-K, K + 1), repeat=d):
        nz = [c for c in k if c != 0]
        if nz and nz[0] > 0:
            out.append(k)
    return np.array(out, dtype=float).reshape(-1, d)


def _solenoidal_basis(k: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the plane orthogonal to ``k``, shape ``(d - 1, d)``."""
    d = len(k)
    P = np.eye(d) - np.outer(k, k) / (k @ k)
    u, s, _ = np.linalg.svd(P)
    basis = u[:, s > 0.5].T
    # remove the rounding component along k so a . k vanishes to machine precision
    basis = basis - np.outer(basis @ k, k) / (k @ k)
    return basis


@dataclass(frozen=True)
class TestFunctionDictionary:
    """A finite family of separable test functions.

    Arrays are aligned per test: ``power`` (time-profile exponent ``j``),
    ``k`` (wave vector), ``trig`` (0 = cos, 1 = sin) and ``a`` (amplitude).
    """

    __test__ = False  # not a pytest class

    T: float
    d: int
    power: np.ndarray
    k: np.ndarray
    trig: np.ndarray
    a: np.ndarray
    kind: str

    @property
    def size(self) -> int:
        return len(self.power)

    @property
    def components(self) -> int:
        return self.a.shape[1]

    @classmethod
    def build(cls, kind: str, T: float, d: int, K: int = 3, n_profiles: int = 4) -> "TestFunctionDictionary":
        """``kind`` is ``"scalar"``, ``"solenoidal"`` (divergence-free vectors) or ``"vector"``."""
        if K < 0 or n_profiles < 1:
            raise ValueError("need K >= 0 and at least one time profile")
        modes = [(np.zeros(d), 0)] + [(k, t) for k in half_lattice(d, K) for t in (0, 1)]
        spatial = []
        for k, trig in modes:
            if kind == "scalar":
                amps = [np.ones(1)]
            elif kind == "vector" or not k.any():
                amps = list(np.eye(d))
            elif kind == "solenoidal":
                amps = list(_solenoidal_basis(k))
            else:
                raise ValueError(f"unknown dictionary kind {kind!r}")
            spatial.extend((k, trig, a) for a in amps)
        rows = [(j, k, trig, a) for j in range(1, n_profiles + 1) for k, trig, a in spatial]
        return cls(
            T=float(T),
            d=d,
            power=np.array([r[0] for r in rows], dtype=float),
            k=np.array([r[1] for r in rows]).reshape(-1, d),
            trig=np.array([r[2] for r in rows], dtype=int),
            a=np.array([r[3] for r in rows]).reshape(len(rows), -1),
            kind=kind,
        )

    def eta(self, t: np.ndarray) -> np.ndarray:
        """Time profiles at ``t``, shape ``(size, len(t))``."""
        return (1.0 - np.asarray(t)[None, :] / self.T) ** self.power[:, None]

    def deta(self, t: np.ndarray) -> np.ndarray:
        j = self.power[:, None]
        return -(j / self.T) * (1.0 - np.asarray(t)[None, :] / self.T) ** (j - 1.0)

    def spatial(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``s(k . x)`` and ``s'(k . x)`` at points ``x``, each of shape ``(size, len(x))``."""
        phase = self.k @ np.asarray(x).T
        c, s = np.cos(phase), np.sin(phase)
        is_sin = self.trig[:, None] == 1
        return np.where(is_sin, s, c), np.where(is_sin, c, -s)

    def values(self, t: np.ndarray, x: np.ndarray):
        """``phi``, ``d_t phi`` and ``grad phi`` at points ``(t, x)``.

        Shapes ``(size, P, c)``, ``(size, P, c)`` and ``(size, P, c, d)``.
        """
        t = np.asarray(t, dtype=float)
        s, ds = self.spatial(x)
        eta, deta = self.eta(t), self.deta(t)
        phi = (eta * s)[..., None] * self.a[:, None, :]
        dphi = (deta * s)[..., None] * self.a[:, None, :]
        grad = (eta * ds)[..., None, None] * self.a[:, None, :, None] * self.k[:, None, None, :]
        return phi, dphi, grad

    def divergence_residual(self) -> float:
        """Largest ``|a . k|`` relative to ``|k|``; zero for a divergence-free dictionary."""
        kn = np.linalg.norm(self.k, axis=1)
        ak = np.abs(np.einsum("nc,nc->n", self.a, self.k)) if self.components == self.d else np.full(self.size, np.inf)
        ak = np.where(kn > 0, ak / np.where(kn > 0, kn, 1.0), 0.0)
        return float(np.max(ak, initial=0.0))

    def max_discrete_divergence(self, grid: SpaceTimeGrid) -> float:
        """Largest ``|div phi|`` over all tests at the interior cell centers."""
        if self.components != self.d:
            raise ValueError("divergence needs vector-valued tests")
        worst = 0.0
        t, x = grid.cell_centers()
        for j in range(self.size):
            _, _, grad = self.subset([j]).values(t, x)
            worst = max(worst, float(np.max(np.abs(np.trace(grad[0], axis1=-2, axis2=-1)))))
        return worst

    def subset(self, idx) -> "TestFunctionDictionary":
        idx = np.asarray(idx)
        return TestFunctionDictionary(self.T, self.d, self.power[idx], self.k[idx], self.trig[idx], self.a[idx], self.kind)

    def norms(self) -> np.ndarray:
        """``sup|phi| + sup|d_t phi| + sup|grad phi|`` per test (analytic bounds)."""
        an = np.linalg.norm(self.a, axis=1)
        kn = np.linalg.norm(self.k, axis=1)
        return an * (1.0 + self.power / self.T + kn)

    def describe(self, j: int) -> dict:
        return {
            "index": int(j),
            "time_power": int(self.power[j]),
            "k": [int(v) for v in self.k[j]],
            "mode": "sin" if self.trig[j] == 1 else "cos",
            "amplitude": [float(v) for v in self.a[j]],
        }


def weak_residuals(
    grid: SpaceTimeGrid,
    tests: TestFunctionDictionary,
    flux: np.ndarray,
    density: Optional[np.ndarray] = None,
    initial: Optional[np.ndarray] = None,
    chunk: int = 64,
) -> np.ndarray:
    """Raw residuals ``R(phi)`` for every test in ``tests``.

    ``flux`` has shape ``(n_cells, c, d)``, ``density`` ``(n_cells, c)`` and
    ``initial`` ``(n_space, c)`` where ``c`` is the number of test components.
    """
    c = tests.components
    if flux.shape != (grid.n_cells, c, grid.d):
        raise ValueError(f"flux shape {flux.shape} != {(grid.n_cells, c, grid.d)}")
    t, x = grid.t_centers, grid.x_centers
    F = flux.reshape(grid.nt, grid.n_space, c, grid.d)
    D = None if density is None else density.reshape(grid.nt, grid.n_space, c)
    out = np.empty(tests.size)
    for start in range(0, tests.size, chunk):
        sub = tests.subset(np.arange(start, min(start + chunk, tests.size)))
        s, ds = sub.spatial(x)  # (B, n_space)
        eta, deta = sub.eta(t), sub.deta(t)  # (B, nt)
        # a^T F k at every cell, then contract space with s' and time with eta
        aFk = np.einsum("bc,tncj,bj->btn", sub.a, F, sub.k)
        r = np.einsum("btn,bn,bt->b", aFk, ds, eta)
        if D is not None:
            aD = np.einsum("bc,tnc->btn", sub.a, D)
            r = r + np.einsum("btn,bn,bt->b", aD, s, deta)
        r = r * grid.cell_volume
        if initial is not None:
            aI = sub.a @ initial.T  # (B, n_space)
            eta0 = sub.eta(np.zeros(1))[:, 0]
            r = r + grid.space_volume * eta0 * np.einsum("bn,bn->b", aI, s)
        out[start : start + len(r)] = r
    return out


@dataclass
class ResidualSet:
    """Normalized residuals of one weak-form equation over a dictionary."""

    name: str
    raw: np.ndarray
    normalized: np.ndarray
    tests: TestFunctionDictionary

    @property
    def max(self) -> float:
        return float(np.max(np.abs(self.normalized), initial=0.0))

    @property
    def worst(self) -> int:
        return int(np.argmax(np.abs(self.normalized)))

    def to_dict(self) -> dict:
        return {
            "max_normalized": self.max,
            "worst_test": self.tests.describe(self.worst) if self.tests.size else None,
            "n_tests": int(self.tests.size),
        }


@dataclass
class AdmissibilityReport:
    initial_energy: float
    slice_energy: np.ndarray
    margins: np.ndarray
    final_layer_mass: float
    tol: float

    @property
    def disintegrable(self) -> bool:
        """A time-disintegration ``dlambda = dlambda_t dt`` cannot carry mass on a single time."""
        return self.final_layer_mass == 0.0

    @property
    def worst_slice(self) -> int:
        return int(np.argmin(self.margins))

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins))

    @property
    def admissible(self) -> bool:
        return self.disintegrable and bool(np.all(self.margins >= -self.tol))

    def to_dict(self) -> dict:
        return {
            "initial_energy": self.initial_energy,
            "margins": [float(m) for m in self.margins],
            "worst_slice": self.worst_slice,
            "min_margin": self.min_margin,
            "final_layer_mass": self.final_layer_mass,
            "tol": self.tol,
            "admissible": self.admissible,
        }


@dataclass
class ResidualReport:
    """Outcome of a full measure-valued-solution check."""

    residuals: list
    residual_tol: float
    admissibility: AdmissibilityReport

    @property
    def max_residual(self) -> float:
        return max((r.max for r in self.residuals), default=0.0)

    @property
    def solves(self) -> bool:
        return self.max_residual <= self.residual_tol

    @property
    def passed(self) -> bool:
        return self.solves and self.admissibility.admissible

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "residual_tol": self.residual_tol,
            "max_residual": self.max_residual,
            "residuals": {r.name: r.to_dict() for r in self.residuals},
            "admissibility": self.admissibility.to_dict(),
        }
