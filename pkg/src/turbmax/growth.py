"""Growth structures: weight function, dilation onto the recession surface, projection.

Two families are provided.  :class:`PowerGrowth` is the isotropic ``p``-growth
with weight ``1 + |z|^p``, dilation ``s * theta`` and the unit sphere as
recession surface (``p = 2`` is the usual quadratic case).  :class:`IsentropicGrowth`
is the anisotropic ``(gamma, 2)`` growth for phase points ``(a1, a')`` with
weight ``1 + (|a1|^(2 gamma) + |a'|^4)^(1/2)``, dilation ``(s^2 b1, s^gamma b')``
and recession surface ``{|b1|^(2 gamma) + |b'|^4 = 1, b1 >= 0}``.

All point-wise methods act on the last axis and broadcast over leading axes.
They only use arithmetic that also works on ``object`` arrays of ``mpmath``
numbers, which is what :func:`turbmax.integrands.recession_residuals` relies on
for its high-precision mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SURFACE_TOL = 1e-10


class GrowthStructure:
    """Common interface; see :class:`PowerGrowth` and :class:`IsentropicGrowth`."""

    kind: str

    @property
    def exponent(self) -> float:
        """Exponent ``e`` of the recession normalizer ``1 + s**e``."""
        raise NotImplementedError

    def weight(self, z):
        raise NotImplementedError

    def dilation(self, s, theta):
        raise NotImplementedError

    def surface_residual(self, theta):
        raise NotImplementedError

    def project(self, z):
        raise NotImplementedError

    def normalizer(self, s):
        return 1 + s**self.exponent

    def canonical_point(self, m: int) -> np.ndarray:
        """A fixed point on the recession surface in phase dimension ``m``."""
        theta = np.zeros(m)
        theta[0] = 1.0
        return theta

    def check_dimension(self, m: int) -> None:
        if m < 1:
            raise ValueError("phase dimension must be at least 1")

    def same_kind(self, other: "GrowthStructure") -> bool:
        return self == other

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerGrowth(GrowthStructure):
    p: float = 2.0

    def __post_init__(self):
        if not (self.p >= 1 and np.isfinite(self.p)):
            raise ValueError(f"growth exponent p must lie in [1, inf), got {self.p!r}")
        object.__setattr__(self, "p", float(self.p))

    @property
    def kind(self) -> str:
        return "quadratic" if self.p == 2.0 else "power"

    @property
    def exponent(self) -> float:
        return self.p

    def weight(self, z):
        z = np.asarray(z)
        r2 = (z * z).sum(axis=-1)
        return 1 + r2 ** (self.p / 2)

    def dilation(self, s, theta):
        theta = np.asarray(theta)
        return np.asarray(s)[..., None] * theta if np.ndim(s) else s * theta

    def surface_residual(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.abs(np.sqrt((theta * theta).sum(axis=-1)) - 1.0)

    def project(self, z):
        z = np.asarray(z, dtype=float)
        s = np.sqrt((z * z).sum(axis=-1))
        if np.any(s == 0):
            raise ValueError("cannot project the zero vector onto the recession surface")
        return s, z / s[..., None] if z.ndim > 1 else z / s

    def to_dict(self) -> dict:
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class IsentropicGrowth(GrowthStructure):
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 1 and np.isfinite(self.gamma)):
            raise ValueError(f"adiabatic exponent must exceed 1, got {self.gamma!r}")
        object.__setattr__(self, "gamma", float(self.gamma))

    kind = "isentropic"

    @property
    def exponent(self) -> float:
        return 2.0 * self.gamma

    def check_dimension(self, m: int) -> None:
        if m < 2:
            raise ValueError("isentropic phase space needs a density and at least one momentum coordinate")

    def weight(self, z):
        z = np.asarray(z)
        a1 = z[..., 0]
        ap = z[..., 1:]
        ap2 = (ap * ap).sum(axis=-1)
        return 1 + (np.abs(a1) ** (2 * self.gamma) + ap2 * ap2) ** 0.5

    def dilation(self, s, theta):
        theta = np.asarray(theta)
        s = np.asarray(s)[..., None] if np.ndim(s) else s
        return np.concatenate([s**2 * theta[..., :1], s**self.gamma * theta[..., 1:]], axis=-1)

    def surface_residual(self, theta):
        theta = np.asarray(theta, dtype=float)
        b1 = theta[..., 0]
        bp2 = (theta[..., 1:] ** 2).sum(axis=-1)
        res = np.abs(np.abs(b1) ** (2 * self.gamma) + bp2 * bp2 - 1.0)
        # negative density direction is off the half-surface
        return np.maximum(res, np.maximum(-b1, 0.0))

    def project(self, z):
        z = np.asarray(z, dtype=float)
        a1 = z[..., 0]
        if np.any(a1 < 0):
            raise ValueError("density coordinate must be nonnegative")
        ap = z[..., 1:]
        ap2 = (ap * ap).sum(axis=-1)
        s4g = a1 ** (2 * self.gamma) + ap2 * ap2
        if np.any(s4g == 0):
            raise ValueError("cannot project the zero vector onto the recession surface")
        s = s4g ** (1.0 / (4 * self.gamma))
        sx = s[..., None] if z.ndim > 1 else s
        theta = np.concatenate([z[..., :1] / sx**2, ap / sx**self.gamma], axis=-1)
        return s, theta

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma}


def quadratic() -> PowerGrowth:
    return PowerGrowth(2.0)


def growth_from_dict(block: dict) -> GrowthStructure:
    kind = block.get("kind")
    if kind == "quadratic":
        return PowerGrowth(2.0)
    if kind == "power":
        return PowerGrowth(float(block["p"]))
    if kind == "isentropic":
        return IsentropicGrowth(float(block["gamma"]))
    raise ValueError(f"unknown growth kind {kind!r}")


def project_to_surface(z, growth: GrowthStructure):
    """Split a nonzero phase point into a dilation parameter and a surface point.

    Returns ``(s, theta)`` with ``growth.dilation(s, theta) == z`` up to rounding.
    """
    return growth.project(z)
