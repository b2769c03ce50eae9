"""The Jensen-defect turbulence functional and related energies.

For a measure ``Y = (nu, lambda, nu_inf)`` and a convex integrand ``f``::

    V_f(Y) = int [<nu, f> - f(<nu, .>)] dx + int <nu_inf, f_inf> dlambda

The per-cell defect is evaluated in Bregman form,
``sum_k w_k [f(z_k) - f(b) - grad f(b) . (z_k - b)]`` with ``b`` the cell
barycenter, which equals ``<nu, f> - f(b)`` exactly in arithmetic and keeps
every summand nonnegative up to rounding.  Quadratic integrands use the
closed form ``sum_k w_k (z_k - b)^T H (z_k - b) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrands import ConvexIntegrand, hessian_quad
from .measure import DiscreteYoungMeasure, MeasureError, convex_combine


@dataclass(frozen=True)
class FunctionalReport:
    value: float
    oscillation_part: float
    concentration_part: float
    total_energy: float
    defect_density: np.ndarray

    @property
    def scale(self) -> float:
        """Magnitude used for relative floating-point tolerances."""
        return 1.0 + abs(self.oscillation_part) + abs(self.concentration_part)


def _check(Y: DiscreteYoungMeasure, f: ConvexIntegrand) -> None:
    if not f.compatible_with(Y.growth):
        raise MeasureError(f"integrand growth {f.growth!r} does not match measure growth {Y.growth!r}")


def defect_density(Y: DiscreteYoungMeasure, f: ConvexIntegrand) -> np.ndarray:
    """Per-cell Jensen defect ``<nu, f> - f(<nu, .>)``."""
    _check(Y, f)
    b = Y.barycenter()
    diff = Y.atoms - b[:, None, :]
    if f.hessian is not None:
        per_atom = 0.5 * hessian_quad(f, diff)
    elif f.gradient is not None:
        fb = f.eval(b)
        per_atom = f.eval(Y.atoms) - fb[:, None] - np.einsum("nm,nkm->nk", f.gradient(b), diff)
    else:
        return Y.cell_means(f) - f.eval(b)
    return (Y.weights * per_atom).sum(axis=1)


def jensen_defect(Y: DiscreteYoungMeasure, f: ConvexIntegrand) -> FunctionalReport:
    _check(Y, f)
    g = Y.grid
    dens = defect_density(Y, f)
    osc = math.fsum(g.cell_volume * dens)
    conc = math.fsum(Y.lambda_mass * Y.angle_means(f))
    energy = math.fsum(g.cell_volume * Y.cell_means(f)) + conc
    value = osc + conc
    if not all(map(math.isfinite, (osc, conc, energy))):
        raise MeasureError("functional is not finite")
    dens.flags.writeable = False
    return FunctionalReport(value, osc, conc, energy, dens)


def variance_functional(Y: DiscreteYoungMeasure) -> float:
    """``int Var[nu_x] dx + lambda(closure)``, i.e. ``V_f`` for ``f = |.|^2``."""
    b = Y.barycenter()
    var = (Y.weights * ((Y.atoms - b[:, None, :]) ** 2).sum(axis=-1)).sum(axis=1)
    return math.fsum(Y.grid.cell_volume * var) + Y.total_lambda


def total_energy(Y: DiscreteYoungMeasure, f: ConvexIntegrand) -> float:
    """``int <nu, f> dx + int <nu_inf, f_inf> dlambda``."""
    return jensen_defect(Y, f).total_energy


def concavity_gap(Y1: DiscreteYoungMeasure, Y2: DiscreteYoungMeasure, tau: float, f: ConvexIntegrand) -> float:
    """``V_f(tau Y1 + (1 - tau) Y2) - tau V_f(Y1) - (1 - tau) V_f(Y2)``; nonnegative by concavity."""
    r = concavity_reports(Y1, Y2, tau, f)
    return r[0].value - tau * r[1].value - (1.0 - tau) * r[2].value


def concavity_reports(Y1, Y2, tau, f):
    """Reports for the combination and both endpoints, in that order."""
    Y = convex_combine(Y1, Y2, tau)
    return jensen_defect(Y, f), jensen_defect(Y1, f), jensen_defect(Y2, f)


def concavity_scale(Y1, Y2, tau, f) -> float:
    return max(r.scale for r in concavity_reports(Y1, Y2, tau, f))
