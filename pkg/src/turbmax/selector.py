"""Maximal selection over the convex hull of finitely many candidate measures.

For candidates ``Y_1..Y_N`` and simplex weights ``theta`` the functional of
the combination is

    g(theta) = sum_i theta_i c_i - int f(sum_i theta_i b_i(x)) dx

where ``c_i`` is the total ``f``-energy of ``Y_i`` (oscillation plus
concentration) and ``b_i`` its barycenter field; both energy parts are linear
under convex combination, only the barycenter term is not.  ``g`` is concave,
so Frank-Wolfe with exact line search ascends monotonically and its gap bounds
the suboptimality over the hull.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .functional import total_energy
from .integrands import ConvexIntegrand, hessian_bilinear
from .measure import DiscreteYoungMeasure, MeasureError, _check_compatible, convex_combine_n

MODELS = ("incompressible", "compressible", "abstract")


class SelectionError(ValueError):
    pass


class CandidateCheckError(SelectionError):
    """A candidate is not an admissible solution of the declared model."""


@dataclass(frozen=True)
class SimplexWeights:
    theta: np.ndarray

    def __post_init__(self):
        th = np.array(self.theta, dtype=float).reshape(-1)
        if th.size == 0:
            raise SelectionError("empty weight vector")
        if not np.all(np.isfinite(th)) or np.any(th < -1e-15) or abs(th.sum() - 1.0) > 1e-12:
            raise SelectionError(f"weights {th.tolist()} are not on the simplex")
        th.flags.writeable = False
        object.__setattr__(self, "theta", th)

    def __len__(self):
        return self.theta.size

    def to_list(self) -> list:
        return [float(v) for v in self.theta]


@dataclass
class CandidateSet:
    """Ordered candidates on one grid, optionally verified as admissible solutions.

    With ``model`` other than ``"abstract"`` every candidate must pass the
    model's residual and admissibility check; the hull then consists of
    admissible solutions as well.
    """

    candidates: list
    model: str = "abstract"
    data: object = None
    verify: bool = True
    residual_tol: Optional[float] = None
    reports: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.candidates = list(self.candidates)
        if not self.candidates:
            raise SelectionError("candidate set is empty")
        if self.model not in MODELS:
            raise SelectionError(f"unknown model {self.model!r}")
        _check_compatible(self.candidates)
        if self.model != "abstract" and self.verify:
            if self.data is None:
                raise SelectionError(f"model {self.model!r} needs initial data")
            if self.model == "incompressible":
                from .incompressible import check
            else:
                from .compressible import check
            self.reports = [check(Y, self.data, residual_tol=self.residual_tol) for Y in self.candidates]
            bad = [i for i, r in enumerate(self.reports) if not r.passed]
            if bad:
                raise CandidateCheckError(f"candidates {bad} fail the {self.model} solution check")

    def __len__(self):
        return len(self.candidates)

    @property
    def grid(self):
        return self.candidates[0].grid


def _as_list(candidates) -> list:
    if isinstance(candidates, CandidateSet):
        return candidates.candidates
    out = list(candidates)
    if not out:
        raise SelectionError("candidate set is empty")
    _check_compatible(out)
    return out


class HullObjective:
    """``g`` and its gradient over the simplex for a fixed candidate list.

    Quadratic integrands are reduced once to ``g(theta) = l . theta -
    theta^T Q theta / 2`` with an ``N x N`` Gram matrix, so every later
    evaluation is exact up to rounding in ``N`` dimensions.
    """

    def __init__(self, candidates: Sequence[DiscreteYoungMeasure], f: ConvexIntegrand):
        cands = _as_list(candidates)
        for Y in cands:
            if not f.compatible_with(Y.growth):
                raise MeasureError(f"integrand growth {f.growth!r} does not match measure growth {Y.growth!r}")
        self.f = f
        self.n = len(cands)
        self.vol = cands[0].grid.cell_volume
        self.c = np.array([total_energy(Y, f) for Y in cands])
        self.B = np.stack([Y.barycenter() for Y in cands])  # (N, n_cells, m)
        self.quadratic = f.hessian is not None
        if self.quadratic:
            zero = np.zeros((1, self.B.shape[2]))
            f0 = float(f.eval(zero)[0])
            g0 = f.gradient(zero)[0] if f.gradient is not None else np.zeros(self.B.shape[2])
            self.lin = np.array([self.c[i] - self.vol * math.fsum(f0 + self.B[i] @ g0) for i in range(self.n)])
            Q = np.empty((self.n, self.n))
            for i in range(self.n):
                for j in range(i, self.n):
                    Q[i, j] = Q[j, i] = self.vol * math.fsum(hessian_bilinear(f, self.B[i], self.B[j]))
            self.Q = Q
        elif f.gradient is None:
            raise SelectionError(f"integrand {f.name!r} has no gradient; the selector needs one")

    @property
    def scale(self) -> float:
        return 1.0 + float(np.max(np.abs(self.c)))

    def mean_field(self, theta: np.ndarray) -> np.ndarray:
        return np.einsum("i,inm->nm", theta, self.B)

    def value(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        if self.quadratic:
            return math.fsum(np.concatenate([self.lin * theta, -0.5 * theta * (self.Q @ theta)]))
        fb = self.f.eval(self.mean_field(theta))
        return math.fsum(np.concatenate([self.c * theta, -self.vol * fb]))

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.quadratic:
            return self.lin - self.Q @ theta
        G = self.f.gradient(self.mean_field(theta))
        return np.array([self.c[i] - self.vol * math.fsum((G * self.B[i]).sum(axis=1)) for i in range(self.n)])

    def curvature(self, d: np.ndarray) -> float:
        """``d^T Q d`` (quadratic integrands only)."""
        return float(d @ self.Q @ d)


def objective(theta, candidates, f: ConvexIntegrand) -> tuple[float, np.ndarray]:
    """``(g(theta), grad g(theta))`` over the simplex."""
    theta = SimplexWeights(theta).theta
    H = HullObjective(candidates, f)
    if theta.size != H.n:
        raise SelectionError(f"need {H.n} weights, got {theta.size}")
    return H.value(theta), H.gradient(theta)


@dataclass
class SelectionResult:
    theta: SimplexWeights
    value: float
    gap: float
    iterations: int
    maximizer: DiscreteYoungMeasure
    barycenter_field: np.ndarray
    total_energy: float
    converged: bool
    tol: float
    history: list
    strictly_convex: bool
    variant: str = "away"

    def to_dict(self, include_field: bool = True) -> dict:
        out = {
            "theta": self.theta.to_list(),
            "value": self.value,
            "gap": self.gap,
            "tol": self.tol,
            "converged": self.converged,
            "iterations": self.iterations,
            "total_energy": self.total_energy,
        }
        if include_field:
            out["barycenter_field"] = [[float(v) for v in row] for row in self.barycenter_field]
        return out


def _slope_root(slope, hi: float) -> float:
    """Exact line search for a concave ``phi`` on ``[0, hi]`` by bisection on the sign of ``phi'``.

    Values of ``phi`` stop resolving the maximizer below about ``sqrt(eps)``
    relative; the slope keeps its sign information down to rounding.
    """
    if slope(hi) >= 0:
        return hi
    a, b = 0.0, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if slope(mid) > 0:
            a = mid
        else:
            b = mid
    return a if a > 0 else b


def _fw_gap(r: np.ndarray, theta: np.ndarray) -> tuple[int, float]:
    s = int(np.argmax(r))  # first maximal index: ties go to the lowest index
    return s, max(float(r[s] - r @ theta), 0.0)


def maximize(
    candidates,
    f: ConvexIntegrand,
    tol: Optional[float] = None,
    max_iter: int = 10_000,
    theta0=None,
    variant: str = "away",
) -> SelectionResult:
    """Frank-Wolfe ascent of ``g`` over the simplex.

    ``variant="away"`` adds away steps (linear convergence on quadratic
    problems); ``"vanilla"`` only moves toward the best vertex.  ``tol`` is
    absolute; the default is ``1e-10`` times the energy scale of the
    candidates.  Without ``theta0`` the start is the best vertex.
    """
    if variant not in ("away", "vanilla"):
        raise ValueError(f"unknown variant {variant!r}")
    cands = _as_list(candidates)
    H = HullObjective(cands, f)
    tol = 1e-10 * H.scale if tol is None else float(tol)
    n = H.n
    if theta0 is None:
        vertex_vals = [H.value(np.eye(n)[i]) for i in range(n)]
        theta = np.eye(n)[int(np.argmax(vertex_vals))]
    else:
        theta = SimplexWeights(theta0).theta.copy()
        if theta.size != n:
            raise SelectionError(f"need {n} weights, got {theta.size}")
    value = H.value(theta)
    history = [value]
    it = 0
    r = H.gradient(theta)
    s, gap = _fw_gap(r, theta)
    while gap > tol and it < max_iter:
        d = -theta.copy()
        d[s] += 1.0
        hi, away = 1.0, None
        if variant == "away":
            support = np.flatnonzero(theta > 0)
            a = int(support[np.argmin(r[support])])
            if float(r @ theta - r[a]) > gap and theta[a] < 1.0:
                d = theta.copy()
                d[a] -= 1.0
                hi, away = theta[a] / (1.0 - theta[a]), a
        if H.quadratic:
            curv = H.curvature(d)
            step = hi if curv <= 0 else min(hi, float(r @ d) / curv)
        else:
            step = _slope_root(lambda x: float(H.gradient(theta + x * d) @ d), hi)
        if step <= 0:
            break
        # exact line search ascends in arithmetic; computed values may still
        # wobble in the last bits near the optimum
        new_theta = theta + step * d
        if step == hi:
            # land exactly on the face the step reaches
            if away is None:
                new_theta = np.eye(n)[s]
            else:
                new_theta[away] = 0.0
        new_theta = np.clip(new_theta, 0.0, None)
        new_theta /= math.fsum(new_theta)
        if np.array_equal(new_theta, theta):
            break  # no representable progress
        it += 1
        theta, value = new_theta, H.value(new_theta)
        history.append(value)
        r = H.gradient(theta)
        s, gap = _fw_gap(r, theta)
    w = SimplexWeights(theta)
    Y = convex_combine_n(cands, w.theta)
    return SelectionResult(
        theta=w,
        value=value,
        gap=gap,
        iterations=it,
        maximizer=Y,
        barycenter_field=H.mean_field(w.theta),
        total_energy=math.fsum(H.c * w.theta),
        converged=gap <= tol,
        tol=tol,
        history=history,
        strictly_convex=f.strictly_convex,
        variant=variant,
    )


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """All weight vectors with entries in ``{0, 1/resolution, ..., 1}``, lexicographic order."""
    rows = [c for c in itertools.product(range(resolution + 1), repeat=n - 1) if sum(c) <= resolution]
    pts = np.array([(*c, resolution - sum(c)) for c in rows], dtype=float).reshape(-1, n)
    return pts / resolution


def brute_force_simplex(candidates, f: ConvexIntegrand, resolution: int, chunk_elems: int = 2_000_000):
    """Exhaustive maximum of ``g`` over a regular simplex grid; an independent oracle.

    Energies come from the direct functional and ``f`` is evaluated at the
    combined barycenters; nothing is shared with :func:`maximize`'s reduction.
    """
    cands = _as_list(candidates)
    if len(cands) > 4:
        raise SelectionError("brute force supports at most 4 candidates")
    if resolution < 1:
        raise ValueError("resolution must be a positive integer")
    c = np.array([total_energy(Y, f) for Y in cands])
    B = np.stack([Y.barycenter() for Y in cands])
    vol = cands[0].grid.cell_volume
    pts = simplex_grid(len(cands), int(resolution))
    per = max(1, chunk_elems // B[0].size)
    best_i, best_v = 0, -np.inf
    for start in range(0, len(pts), per):
        th = pts[start : start + per]
        vals = th @ c - vol * f.eval(np.einsum("pi,inm->pnm", th, B)).sum(axis=1)
        j = int(np.argmax(vals))
        if vals[j] > best_v:
            best_i, best_v = start + j, float(vals[j])
    return pts[best_i], best_v


@dataclass
class UniquenessReport:
    n_results: int
    max_barycenter_diff: float
    max_barycenter_l2: float
    max_energy_rel_diff: float
    bary_tol: float
    energy_rtol: float
    distinct_theta: bool

    @property
    def passed(self) -> bool:
        return self.max_barycenter_diff <= self.bary_tol and self.max_energy_rel_diff <= self.energy_rtol

    def to_dict(self) -> dict:
        return {
            "n_results": self.n_results,
            "max_barycenter_diff": self.max_barycenter_diff,
            "max_barycenter_l2": self.max_barycenter_l2,
            "max_energy_rel_diff": self.max_energy_rel_diff,
            "bary_tol": self.bary_tol,
            "energy_rtol": self.energy_rtol,
            "distinct_theta": self.distinct_theta,
            "passed": self.passed,
        }


def uniqueness_diagnostic(results: Sequence[SelectionResult], bary_tol: float = 1e-6, energy_rtol: float = 1e-8) -> UniquenessReport:
    """Compare converged maximizers: barycenters and total energies must coincide.

    Disagreement beyond tolerance means a bug or an under-converged run.
    """
    results = list(results)
    if not results:
        raise SelectionError("no results to compare")
    for k, r in enumerate(results):
        if not r.converged:
            raise SelectionError(f"result {k} is not converged (gap {r.gap!r} > tol {r.tol!r})")
        if not r.strictly_convex:
            raise SelectionError("uniqueness needs a strictly convex integrand")
    vol = results[0].maximizer.grid.cell_volume
    dmax = l2 = erel = 0.0
    distinct = False
    for a, b in itertools.combinations(results, 2):
        diff = a.barycenter_field - b.barycenter_field
        dmax = max(dmax, float(np.max(np.abs(diff), initial=0.0)))
        l2 = max(l2, math.sqrt(vol * math.fsum((diff**2).ravel())))
        erel = max(erel, abs(a.total_energy - b.total_energy) / max(1.0, abs(a.total_energy), abs(b.total_energy)))
        distinct = distinct or not np.allclose(a.theta.theta, b.theta.theta, rtol=0, atol=1e-6)
    return UniquenessReport(len(results), dmax, l2, erel, bary_tol, energy_rtol, distinct)
