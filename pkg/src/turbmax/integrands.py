"""Integrands paired against Young measures, with their recession functions.

An integrand bundles ``f``, its recession function ``f_inf`` on the recession
surface of a growth structure, and optionally its gradient and a constant
Hessian.  The built-in energies are

* :func:`kinetic_energy`  ``f(v) = |v|^2 / 2`` with ``f_inf = 1/2``,
* :func:`squared_norm`    ``f(v) = |v|^2`` with ``f_inf = 1``,
* :func:`isentropic_energy`  ``f(a1, a') = |a'|^2 / 2 + a1^gamma / (gamma - 1)``
  with ``f_inf(b1, b') = |b'|^2 / 2 + b1^gamma / (gamma - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath
import numpy as np

from .growth import GrowthStructure, IsentropicGrowth, PowerGrowth, quadratic


@dataclass(frozen=True)
class ConvexIntegrand:
    """A continuous integrand with controlled growth.

    ``eval``, ``recession`` and ``gradient`` act on the last axis of their
    argument.  ``hessian`` is set only for quadratic integrands, where it is the
    constant Hessian matrix; the Jensen defect and the selector's line search
    use it for exact closed forms.  ``convex`` is False for the bounded test
    integrands used to probe pairings.
    """

    name: str
    eval: Callable
    recession: Callable
    growth: GrowthStructure
    gradient: Optional[Callable] = None
    strictly_convex: bool = False
    convex: bool = True
    hessian: Optional[object] = field(default=None, compare=False)

    def __call__(self, z):
        return self.eval(z)

    def compatible_with(self, growth: GrowthStructure) -> bool:
        return self.growth == growth


def kinetic_energy(growth: Optional[GrowthStructure] = None) -> ConvexIntegrand:
    growth = growth or quadratic()
    return ConvexIntegrand(
        name="energy",
        eval=lambda z: 0.5 * (np.asarray(z) ** 2).sum(axis=-1),
        recession=lambda theta: 0.5 * np.ones(np.shape(theta)[:-1]),
        gradient=lambda z: np.asarray(z, dtype=float),
        growth=growth,
        strictly_convex=True,
        hessian=_IdentityHessian(1.0),
    )


def squared_norm(growth: Optional[GrowthStructure] = None) -> ConvexIntegrand:
    growth = growth or quadratic()
    return ConvexIntegrand(
        name="variance",
        eval=lambda z: (np.asarray(z) ** 2).sum(axis=-1),
        recession=lambda theta: np.ones(np.shape(theta)[:-1]),
        gradient=lambda z: 2.0 * np.asarray(z, dtype=float),
        growth=growth,
        strictly_convex=True,
        hessian=_IdentityHessian(2.0),
    )


def isentropic_energy(gamma: float) -> ConvexIntegrand:
    growth = IsentropicGrowth(gamma)
    g = growth.gamma
    c = 1.0 / (g - 1.0)

    def f(z):
        z = np.asarray(z)
        return 0.5 * (z[..., 1:] ** 2).sum(axis=-1) + c * z[..., 0] ** g

    def grad(z):
        z = np.asarray(z, dtype=float)
        out = z.copy()
        out[..., 0] = c * g * z[..., 0] ** (g - 1.0)
        return out

    return ConvexIntegrand(
        name="energy",
        eval=f,
        recession=f,  # same closed form on the surface
        gradient=grad,
        growth=growth,
        strictly_convex=True,
    )


def linear_integrand(coeffs, offset: float = 0.0, growth: Optional[GrowthStructure] = None) -> ConvexIntegrand:
    """Affine ``f(z) = coeffs . z + offset``; convex but not strictly, recession zero."""
    coeffs = np.asarray(coeffs, dtype=float)
    return ConvexIntegrand(
        name="linear",
        eval=lambda z: np.asarray(z) @ coeffs + offset,
        recession=lambda theta: np.zeros(np.shape(theta)[:-1]),
        gradient=lambda z: np.broadcast_to(coeffs, np.shape(z)).copy(),
        growth=growth or quadratic(),
        strictly_convex=False,
        hessian=_IdentityHessian(0.0),
    )


def bounded_integrand(fn: Callable, growth: Optional[GrowthStructure] = None, name: str = "bounded") -> ConvexIntegrand:
    """Wrap a bounded continuous function; its recession function vanishes."""
    return ConvexIntegrand(
        name=name,
        eval=fn,
        recession=lambda theta: np.zeros(np.shape(theta)[:-1]),
        growth=growth or quadratic(),
        convex=False,
    )


def builtin_energy(growth: GrowthStructure) -> ConvexIntegrand:
    """The physical energy matching ``growth``."""
    if isinstance(growth, IsentropicGrowth):
        return isentropic_energy(growth.gamma)
    if isinstance(growth, PowerGrowth) and growth.p == 2.0:
        return kinetic_energy(growth)
    raise ValueError(f"no built-in energy for growth {growth!r}")


class _IdentityHessian:
    """Hessian ``c * I`` in whatever phase dimension it is applied to."""

    def __init__(self, c: float):
        self.c = float(c)

    def quad(self, u: np.ndarray) -> np.ndarray:
        """``u^T H u`` along the last axis."""
        return self.c * (u * u).sum(axis=-1)

    def __repr__(self):
        return f"{self.c!r} * I"


def hessian_quad(f: ConvexIntegrand, u: np.ndarray) -> np.ndarray:
    """``u^T H u`` for a quadratic integrand."""
    h = f.hessian
    if h is None:
        raise ValueError(f"integrand {f.name!r} has no constant Hessian")
    if isinstance(h, _IdentityHessian):
        return h.quad(u)
    return np.einsum("...i,ij,...j->...", u, h, u)


def hessian_bilinear(f: ConvexIntegrand, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``u^T H v`` along the last axis for a quadratic integrand."""
    h = f.hessian
    if h is None:
        raise ValueError(f"integrand {f.name!r} has no constant Hessian")
    if isinstance(h, _IdentityHessian):
        return h.c * (u * v).sum(axis=-1)
    return np.einsum("...i,ij,...j->...", u, h, v)


def recession_residuals(f: ConvexIntegrand, thetas, s_values, precision: Optional[int] = None) -> np.ndarray:
    """Max over ``thetas`` of ``|f(dilation(s, theta)) / (1 + s**e) - f_inf(theta)|`` for each ``s``.

    With ``precision`` (decimal digits) the quotient is evaluated in ``mpmath``
    arithmetic, so the residual is resolved well below double rounding.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    growth = f.growth
    out = []
    if precision is None:
        f_inf = f.recession(thetas)
        for s in s_values:
            s = float(s)
            z = growth.dilation(s, thetas)
            q = f.eval(z) / growth.normalizer(s)
            out.append(float(np.max(np.abs(q - f_inf))))
        return np.array(out)

    with mpmath.workdps(precision):
        th = np.vectorize(mpmath.mpf, otypes=[object])(thetas)
        f_inf = f.recession(th)
        for s in s_values:
            s = mpmath.mpf(s)
            z = growth.dilation(s, th)
            q = f.eval(z) / growth.normalizer(s)
            diff = [abs(v) for v in np.ravel(q - f_inf)]
            out.append(float(max(diff)))
    return np.array(out)
