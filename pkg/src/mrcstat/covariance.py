"""Mean vector and covariance matrix of the complex-normal channel vector."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import InputError, ZeroDenominator
from .geometry import AntennaElement, HORIZON, TWO_PI, phase_at
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec, integrate
from .spectra import DiffusePas, Scenario, TapProfile, validate_scenario

# correlation integrals with a larger error estimate trigger a warning
QUADRATURE_WARN_LEVEL = 1e-6


@dataclass(frozen=True)
class CorrelationResult:
    rho: complex
    error: float


@dataclass(frozen=True)
class ChannelStatistics:
    """``h ~ CN(mean, covariance)`` with index ``i = m + n * M`` (zero-based)."""

    mean: NDArray
    covariance: NDArray
    num_elements: int
    num_taps: int
    max_quadrature_error: float = 0.0
    warnings: tuple[str, ...] = ()

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]

    @property
    def index_map(self) -> list[tuple[int, int]]:
        return [(i % self.num_elements, i // self.num_elements) for i in range(self.dimension)]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.covariance)))

    @property
    def mean_power(self) -> float:
        return float(np.real(np.vdot(self.mean, self.mean)))

    @property
    def expected_gain(self) -> float:
        """Mean effective gain ``E[h^H h]``."""
        return self.trace + self.mean_power

    def tap_block(self, tap: int) -> NDArray:
        sl = slice(tap * self.num_elements, (tap + 1) * self.num_elements)
        return self.covariance[sl, sl]

    def correlation_matrix(self) -> NDArray:
        """Entrywise ``Sigma_ij / sqrt(Sigma_ii Sigma_jj)``; zero where a variance is zero."""
        d = np.sqrt(np.real(np.diag(self.covariance)))
        outer = np.outer(d, d)
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = np.where(outer > 0, self.covariance / np.where(outer > 0, outer, 1.0), 0.0)
        return rho


def mean_entry(element: AntennaElement, tap: TapProfile, wavelength: float) -> complex:
    if tap.K == 0:
        return 0j
    d = tap.deterministic
    gain = float(element.pattern.gain(d.azimuth))
    amplitude = math.sqrt(tap.S * tap.deterministic_weight * gain)
    return amplitude * cmath.exp(1j * phase_at(element.position, d, wavelength))


def _breakpoints(pas: DiffusePas, patterns) -> list[float]:
    lo, hi = pas.support()
    points = []
    for p in patterns:
        window = p.window()
        if window is None:
            continue
        for edge in window:
            # edges shifted into [lo, lo + 2*pi)
            points.append(lo + (edge - lo) % TWO_PI)
    return sorted(x for x in set(points) if lo < x < hi)


def _pattern_power(elements, pas: DiffusePas, spec: QuadratureSpec) -> NDArray:
    """Integral of ``p(theta) G_m(theta)`` for each element."""
    patterns = [e.pattern for e in elements]
    lo, hi = pas.support()

    def integrand(theta):
        dens = pas.density(theta)
        return np.stack([p.gain(theta) * dens for p in patterns])

    return np.real(integrate(integrand, lo, hi, spec, _breakpoints(pas, patterns)).value)


def variance_entry(element: AntennaElement, tap: TapProfile, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    if tap.pure_deterministic:
        return 0.0
    power = float(_pattern_power([element], tap.diffuse, spec)[0])
    return tap.S * tap.diffuse_weight * power


def _pair_integrals(elements, pairs, pas: DiffusePas, wavelength: float, spec: QuadratureSpec, scale: float):
    """Numerator integrals for index pairs ``(i, j)`` of ``elements``.

    ``scale`` bounds the magnitudes (Cauchy-Schwarz) and sets the absolute tolerance.
    """
    patterns = [e.pattern for e in elements]
    pos = np.array([e.position for e in elements])
    ii = np.array([p[0] for p in pairs], dtype=int)
    jj = np.array([p[1] for p in pairs], dtype=int)
    k = TWO_PI / wavelength
    dx = k * (pos[ii, 0] - pos[jj, 0])
    dy = k * (pos[ii, 1] - pos[jj, 1])
    lo, hi = pas.support()
    distinct = sorted(set(ii) | set(jj))

    def integrand(theta):
        dens = pas.density(theta)
        amp = np.zeros((len(elements), theta.size))
        for m in distinct:
            amp[m] = patterns[m].amplitude(theta)
        phase = np.outer(dx, np.cos(theta)) + np.outer(dy, np.sin(theta))
        return amp[ii] * amp[jj] * dens * np.exp(1j * phase)

    result = integrate(integrand, lo, hi, spec, _breakpoints(pas, [patterns[m] for m in distinct]),
                       atol=spec.rtol * scale)
    return np.atleast_1d(result.value), np.atleast_1d(result.error)


def correlation_coefficient(
    ei: AntennaElement,
    ej: AntennaElement,
    pas: DiffusePas,
    wavelength: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
) -> CorrelationResult:
    """Pattern-weighted correlation of the diffuse field at two elements."""
    if ei.local_area != ej.local_area:
        raise InputError("correlation is only defined within one local area")
    powers = _pattern_power([ei, ej], pas, spec)
    if powers[0] <= 0 or powers[1] <= 0:
        raise ZeroDenominator("an element receives no diffuse power from this PAS")
    if ei == ej:
        return CorrelationResult(1.0 + 0j, 0.0)
    denom = math.sqrt(powers[0] * powers[1])
    num, err = _pair_integrals([ei, ej], [(0, 1)], pas, wavelength, spec, denom)
    return CorrelationResult(complex(num[0]) / denom, float(err[0]) / denom)


def _area_block(elements, tap: TapProfile, wavelength: float, spec: QuadratureSpec):
    """Covariance block of one tap for the elements of one local area."""
    n = len(elements)
    powers = _pattern_power(elements, tap.diffuse, spec)
    variances = tap.S * tap.diffuse_weight * powers
    block = np.diag(variances).astype(complex)
    live = [m for m in range(n) if powers[m] > 0]
    pairs = [(a, b) for ia, a in enumerate(live) for b in live[ia + 1:]]
    max_err = 0.0
    if pairs:
        scale = min(math.sqrt(powers[a] * powers[b]) for a, b in pairs)
        num, err = _pair_integrals(elements, pairs, tap.diffuse, wavelength, spec, scale)
        for (a, b), value, e in zip(pairs, num, err):
            denom = math.sqrt(powers[a] * powers[b])
            rho = value / denom
            max_err = max(max_err, e / denom)
            block[a, b] = rho * math.sqrt(variances[a] * variances[b])
            block[b, a] = np.conj(block[a, b])
    return block, max_err


def assemble(s: Scenario, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> ChannelStatistics:
    """Build ``(mu, Sigma)``: block-diagonal over taps and over local areas."""
    validate_scenario(s)
    M, N = s.num_elements, s.num_taps
    elements = s.layout.elements
    mean = np.zeros(M * N, dtype=complex)
    cov = np.zeros((M * N, M * N), dtype=complex)
    areas: dict[int, list[int]] = {}
    for m, e in enumerate(elements):
        areas.setdefault(e.local_area, []).append(m)
    max_err = 0.0
    cache: dict[tuple, tuple[NDArray, float]] = {}
    for n, tap in enumerate(s.taps):
        offset = n * M
        for m, e in enumerate(elements):
            mean[offset + m] = mean_entry(e, tap, s.wavelength)
        if tap.pure_deterministic:
            continue
        for members in areas.values():
            group = tuple(elements[m] for m in members)
            # identical statistics up to S are shared across taps
            key = (group, tap.K, tap.diffuse)
            if key not in cache:
                unit = TapProfile(1.0, tap.K, tap.deterministic, tap.diffuse)
                cache[key] = _area_block(group, unit, s.wavelength, spec)
            block, err = cache[key]
            max_err = max(max_err, err)
            idx = np.array(members) + offset
            cov[np.ix_(idx, idx)] = tap.S * block
    notes = []
    if max_err > QUADRATURE_WARN_LEVEL:
        msg = f"correlation quadrature error estimate {max_err:.2e} exceeds {QUADRATURE_WARN_LEVEL:g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    return ChannelStatistics(mean, cov, M, N, max_err, tuple(notes))
