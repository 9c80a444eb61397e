"""Antenna elements, array builders, element patterns and plane-wave phases."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import InputError, InvalidCount, InvalidWavelength, UndefinedForIsotropic

TWO_PI = 2.0 * math.pi
HORIZON = 0.5 * math.pi
_POLAR_SLACK = 1e-9


@dataclass(frozen=True)
class Direction:
    """Incidence direction; azimuth is wrapped to [0, 2*pi)."""

    azimuth: float
    polar: float = HORIZON

    def __post_init__(self):
        if not (math.isfinite(self.azimuth) and math.isfinite(self.polar)):
            raise InputError("direction angles must be finite")
        if self.polar < -_POLAR_SLACK or self.polar > math.pi + _POLAR_SLACK:
            raise InputError(f"polar angle {self.polar} outside [0, pi]")
        object.__setattr__(self, "azimuth", self.azimuth % TWO_PI)
        object.__setattr__(self, "polar", min(max(self.polar, 0.0), math.pi))

    @classmethod
    def from_degrees(cls, azimuth_deg: float, polar_deg: float = 90.0) -> "Direction":
        return cls(math.radians(azimuth_deg), math.radians(polar_deg))


def cos_power_integral(zeta: float) -> float:
    """Integral of cos^zeta over its half-plane window [-pi/2, pi/2]."""
    return math.sqrt(math.pi) * math.exp(
        special.gammaln(0.5 * (zeta + 1.0)) - special.gammaln(0.5 * zeta + 1.0)
    )


@dataclass(frozen=True)
class ElementPattern:
    """Element power pattern ``G = efficiency * D0 * F(theta)``.

    ``kind`` is ``"isotropic"`` or ``"cos_power"``.  The cos-power shape is
    ``cos(theta - boresight)**zeta`` inside ``boresight +- pi/2`` and zero
    outside.  ``D0`` is normalized over azimuth so that a uniform PAS sees
    unit average directivity for every ``zeta``.
    """

    kind: str = "isotropic"
    zeta: float = 0.0
    boresight: float = 0.0
    efficiency: float = 1.0

    def __post_init__(self):
        if self.kind not in ("isotropic", "cos_power"):
            raise InputError(f"unknown pattern type {self.kind!r}")
        if not (self.zeta >= 0 and math.isfinite(self.zeta)):
            raise InputError("pattern exponent zeta must be finite and >= 0")
        if not (0 < self.efficiency <= 1):
            raise InputError("efficiency must lie in (0, 1]")
        object.__setattr__(self, "boresight", self.boresight % TWO_PI)

    @classmethod
    def isotropic(cls, efficiency: float = 1.0) -> "ElementPattern":
        return cls("isotropic", efficiency=efficiency)

    @classmethod
    def cos_power(cls, zeta: float, boresight: float = 0.0, efficiency: float = 1.0) -> "ElementPattern":
        return cls("cos_power", zeta, boresight, efficiency)

    @property
    def max_directivity(self) -> float:
        if self.kind == "isotropic":
            return 1.0
        return TWO_PI / cos_power_integral(self.zeta)

    @property
    def peak_gain(self) -> float:
        return self.efficiency * self.max_directivity

    def window(self) -> tuple[float, float] | None:
        """Azimuth interval of nonzero gain, or None for full coverage."""
        if self.kind == "isotropic":
            return None
        return self.boresight - HORIZON, self.boresight + HORIZON

    def gain(self, azimuth: ArrayLike) -> NDArray:
        """Linear power gain over azimuth (patterns are horizon-plane models)."""
        theta = np.asarray(azimuth, dtype=float)
        if self.kind == "isotropic":
            return np.full(theta.shape, self.efficiency)
        c = np.cos(theta - self.boresight)
        shape = np.where(c > 0, np.abs(c) ** self.zeta, 0.0)
        return self.peak_gain * shape

    def amplitude(self, azimuth: ArrayLike) -> NDArray:
        """Square root of :meth:`gain`."""
        theta = np.asarray(azimuth, dtype=float)
        if self.kind == "isotropic":
            return np.full(theta.shape, math.sqrt(self.efficiency))
        c = np.cos(theta - self.boresight)
        shape = np.where(c > 0, np.abs(c) ** (0.5 * self.zeta), 0.0)
        return math.sqrt(self.peak_gain) * shape


def element_gain(pattern: ElementPattern, direction: Direction) -> float:
    return float(pattern.gain(direction.azimuth))


def hpbw(pattern: ElementPattern | float) -> float:
    """Full half-power beamwidth of a cos-power pattern in radians."""
    zeta = pattern.zeta if isinstance(pattern, ElementPattern) else float(pattern)
    if isinstance(pattern, ElementPattern) and pattern.kind == "isotropic" or zeta == 0:
        raise UndefinedForIsotropic("half-power beamwidth needs zeta > 0")
    return 2.0 * math.acos(0.5 ** (1.0 / zeta))


@dataclass(frozen=True)
class AntennaElement:
    position: tuple[float, float, float]
    pattern: ElementPattern = field(default_factory=ElementPattern)
    local_area: int = 0

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise InputError("element position must be a finite 3-vector")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class ArrayLayout:
    """Ordered elements; the order is the antenna index of the channel vector."""

    elements: tuple[AntennaElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if len(self.elements) < 1:
            raise InvalidCount("an array needs at least one element")

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def positions(self) -> NDArray:
        return np.array([e.position for e in self.elements], dtype=float)

    @property
    def local_areas(self) -> tuple[int, ...]:
        return tuple(e.local_area for e in self.elements)


def wavevector(direction: Direction, wavelength: float) -> NDArray:
    if not wavelength > 0:
        raise InvalidWavelength(f"wavelength must be positive, got {wavelength}")
    th, ph = direction.azimuth, direction.polar
    k = TWO_PI / wavelength
    return k * np.array([math.cos(th) * math.sin(ph), math.sin(th) * math.sin(ph), math.cos(ph)])


def phase_at(position: ArrayLike, direction: Direction, wavelength: float) -> float:
    return float(np.dot(wavevector(direction, wavelength), np.asarray(position, dtype=float)))


def _area_ids(count: int, local_areas) -> list[int]:
    if local_areas == "shared":
        return [0] * count
    if local_areas == "per_element":
        return list(range(count))
    ids = [int(v) for v in local_areas]
    if len(ids) != count:
        raise InputError(f"expected {count} local-area ids, got {len(ids)}")
    return ids


def build_ula(
    count: int,
    spacing: float,
    axis: ArrayLike = (1.0, 0.0, 0.0),
    pattern: ElementPattern | None = None,
    local_areas="shared",
) -> ArrayLayout:
    """Uniform linear array centered on the origin."""
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise InvalidCount(f"ULA needs at least one element, got {count}")
    if not spacing > 0:
        raise InputError("ULA spacing must be positive")
    u = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(u)
    if u.shape != (3,) or not norm > 0:
        raise InputError("ULA axis must be a nonzero 3-vector")
    u = u / norm
    pattern = pattern or ElementPattern()
    areas = _area_ids(count, local_areas)
    elements = []
    for m in range(1, count + 1):
        offset = (m - (count + 1) / 2.0) * spacing
        elements.append(AntennaElement(tuple(offset * u), pattern, areas[m - 1]))
    return ArrayLayout(tuple(elements))


def build_half_circle(
    count: int,
    radius: float,
    zeta: float,
    efficiency: float = 1.0,
    local_areas="shared",
) -> ArrayLayout:
    """Elements on the upper half circle, each pointing radially outward.

    Element ``m`` sits at angle ``pi * (m - 1/2) / count`` so the layout is
    symmetric about the y-axis and neighbours are ``pi * radius / count``
    apart along the arc.
    """
    if not isinstance(count, (int, np.integer)) or count < 2:
        raise InvalidCount(f"half-circle array needs at least two elements, got {count}")
    if not radius > 0:
        raise InputError("half-circle radius must be positive")
    areas = _area_ids(count, local_areas)
    elements = []
    for m in range(count):
        angle = math.pi * (m + 0.5) / count
        pattern = ElementPattern.cos_power(zeta, angle, efficiency)
        pos = (radius * math.cos(angle), radius * math.sin(angle), 0.0)
        elements.append(AntennaElement(pos, pattern, areas[m]))
    return ArrayLayout(tuple(elements))
