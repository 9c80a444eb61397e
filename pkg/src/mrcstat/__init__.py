"""Effective-gain statistics for maximum-ratio combining over correlated Rician channels."""

from __future__ import annotations

from . import covariance, geometry, gqf, numerics, spectra
from ._backend import COMPILED
from .covariance import ChannelStatistics, assemble, correlation_coefficient
from .errors import (
    ConvergenceFailure,
    InputError,
    MrcStatError,
    NonConvergence,
    NotPositiveSemidefinite,
    NumericalError,
    OrderOverflow,
    ScenarioError,
    ZeroDenominator,
)
from .geometry import ArrayLayout, AntennaElement, Direction, ElementPattern, build_half_circle, build_ula
from .gqf import ApproxConfig, DistributionCurve, GqfDecomposition, decompose, evaluate_curve
from .spectra import DiffusePas, Scenario, TapProfile

__version__ = "0.1.0"
