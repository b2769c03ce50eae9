"""Maximally turbulent selection of measure-valued solutions of the Euler equations."""

from .grid import SpaceTimeGrid
from .growth import IsentropicGrowth, PowerGrowth
from .integrands import ConvexIntegrand, isentropic_energy, kinetic_energy, squared_norm
from .measure import (
    DiscreteYoungMeasure,
    MeasureError,
    constant_mixture,
    convex_combine,
    convex_combine_n,
    pairing,
    young_of_function,
)
from .functional import jensen_defect, total_energy, variance_functional
from .selector import CandidateSet, brute_force_simplex, maximize, uniqueness_diagnostic

__version__ = "0.1.0"
