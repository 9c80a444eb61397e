"""Power angular spectra, tap profiles and scenario definition."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InputError, ScenarioError
from .geometry import ArrayLayout, Direction, TWO_PI
from .numerics import QuadratureSpec, integrate, log_i0

PAS_KINDS = ("omni", "sector", "von_mises")


@dataclass(frozen=True)
class DiffusePas:
    """Azimuthal density of the diffuse power on the horizon plane.

    ``center`` and ``opening`` are radians; ``opening`` applies to sectors and
    ``kappa`` to von Mises spectra.
    """

    kind: str = "omni"
    center: float = 0.0
    opening: float = TWO_PI
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in PAS_KINDS:
            raise InputError(f"unknown PAS type {self.kind!r}")

    @classmethod
    def omni(cls) -> "DiffusePas":
        return cls("omni")

    @classmethod
    def sector(cls, center: float, opening: float) -> "DiffusePas":
        return cls("sector", center=center, opening=opening)

    @classmethod
    def von_mises(cls, center: float, kappa: float) -> "DiffusePas":
        return cls("von_mises", center=center, kappa=kappa)

    def density(self, azimuth: ArrayLike) -> NDArray:
        theta = np.asarray(azimuth, dtype=float)
        if self.kind == "omni":
            return np.full(theta.shape, 1.0 / TWO_PI)
        if self.kind == "sector":
            if self.opening >= TWO_PI:
                return np.full(theta.shape, 1.0 / TWO_PI)
            # signed offset from the center in [-pi, pi)
            offset = (theta - self.center + math.pi) % TWO_PI - math.pi
            inside = np.abs(offset) <= 0.5 * self.opening
            return np.where(inside, 1.0 / self.opening, 0.0)
        log_norm = math.log(TWO_PI) + log_i0(self.kappa)
        return np.exp(self.kappa * np.cos(theta - self.center) - log_norm)

    def support(self) -> tuple[float, float]:
        """An interval of length <= 2*pi that carries all of the density."""
        if self.kind == "sector" and self.opening < TWO_PI:
            return self.center - 0.5 * self.opening, self.center + 0.5 * self.opening
        # start opposite the center so a von Mises peak sits mid-interval
        start = self.center - math.pi if self.kind == "von_mises" else 0.0
        return start, start + TWO_PI

    def sample(self, rng: np.random.Generator, size: int) -> NDArray:
        """Draw azimuths distributed according to the density."""
        if self.kind == "omni" or (self.kind == "sector" and self.opening >= TWO_PI):
            return rng.random(size) * TWO_PI
        if self.kind == "sector":
            return self.center + (rng.random(size) - 0.5) * self.opening
        return rng.vonmises(self.center, self.kappa, size)

    def to_degrees_dict(self) -> dict:
        if self.kind == "omni":
            return {"type": "omni"}
        if self.kind == "sector":
            return {
                "type": "sector",
                "center_deg": math.degrees(self.center),
                "opening_deg": math.degrees(self.opening),
            }
        return {"type": "von_mises", "center_deg": math.degrees(self.center), "kappa": self.kappa}


@dataclass(frozen=True)
class TapProfile:
    """One delay tap: PDP power ``S``, Rician factor ``K`` (``math.inf`` allowed).

    ``deterministic`` is required when ``K > 0``; ``diffuse`` when ``K`` is
    finite.  Terminal power is folded into ``S``.
    """

    S: float
    K: float = 0.0
    deterministic: Direction | None = None
    diffuse: DiffusePas | None = field(default_factory=DiffusePas)

    @property
    def pure_deterministic(self) -> bool:
        return math.isinf(self.K)

    @property
    def deterministic_weight(self) -> float:
        if self.pure_deterministic:
            return 1.0
        return self.K / (self.K + 1.0)

    @property
    def diffuse_weight(self) -> float:
        if self.pure_deterministic:
            return 0.0
        return 1.0 / (self.K + 1.0)


@dataclass(frozen=True)
class MixedSpectrum:
    deterministic_weight: float
    diffuse_weight: float
    deterministic: Direction | None
    diffuse: DiffusePas | None


def pas_density(pas: DiffusePas, azimuth: ArrayLike) -> NDArray:
    return pas.density(azimuth)


def compose_pas(K: float, deterministic: Direction | None, diffuse: DiffusePas | None) -> MixedSpectrum:
    if not K >= 0:
        raise InputError("Rician factor must be >= 0")
    tap = TapProfile(1.0, K, deterministic, diffuse)
    return MixedSpectrum(tap.deterministic_weight, tap.diffuse_weight, deterministic, diffuse)


@dataclass(frozen=True)
class Scenario:
    """Wavelength, array layout and per-tap propagation.

    Every local area sees the same tap statistics; realizations in distinct
    local areas are independent.
    """

    wavelength: float
    layout: ArrayLayout
    taps: tuple[TapProfile, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(self.taps))

    @property
    def num_elements(self) -> int:
        return len(self.layout)

    @property
    def num_taps(self) -> int:
        return len(self.taps)

    @property
    def dimension(self) -> int:
        return self.num_elements * self.num_taps

    def index(self, element: int, tap: int) -> int:
        """Channel-vector index of (element, tap), both zero-based."""
        return element + tap * self.num_elements

    def canonical(self) -> dict:
        """JSON-friendly description used for digests (not the file schema)."""

        def direction(d):
            return None if d is None else [d.azimuth, d.polar]

        return {
            "wavelength": self.wavelength,
            "elements": [
                [list(e.position), e.pattern.kind, e.pattern.zeta, e.pattern.boresight,
                 e.pattern.efficiency, e.local_area]
                for e in self.layout.elements
            ],
            "taps": [
                [t.S, "inf" if math.isinf(t.K) else t.K, direction(t.deterministic),
                 None if t.diffuse is None else
                 [t.diffuse.kind, t.diffuse.center, t.diffuse.opening, t.diffuse.kappa]]
                for t in self.taps
            ],
        }

    def digest(self) -> str:
        """SHA-256 of the canonical form with floats rounded to 12 significant digits.

        The rounding makes the digest survive degree/radian round trips.
        """
        text = json.dumps(_rounded(self.canonical()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _rounded(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return repr(obj)
        # -0.0 and tiny round-off around zero collapse to 0
        value = float(f"{obj:.12g}")
        return 0.0 if abs(value) < 1e-12 else value
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    return obj


_NORMALIZATION_TOL = 1e-6
_CHECK_QUADRATURE = QuadratureSpec(rtol=1e-10)


def _pas_violations(pas: DiffusePas, path: str) -> list[tuple[str, str]]:
    out = []
    if pas.kind == "sector":
        if not (0 < pas.opening <= TWO_PI + 1e-12):
            out.append((f"{path}.opening", "sector opening must lie in (0, 2*pi]"))
            return out
    if pas.kind == "von_mises" and not (pas.kappa >= 0 and math.isfinite(pas.kappa)):
        out.append((f"{path}.kappa", "von Mises concentration must be finite and >= 0"))
        return out
    if not math.isfinite(pas.center):
        out.append((f"{path}.center", "PAS center must be finite"))
        return out
    lo, hi = pas.support()
    total = integrate(pas.density, lo, hi, _CHECK_QUADRATURE).value
    if abs(total - 1.0) > _NORMALIZATION_TOL:
        out.append((path, f"PAS integrates to {total:.9f}, not 1"))
    return out


def scenario_violations(s: Scenario) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    if not (isinstance(s.wavelength, (int, float)) and s.wavelength > 0 and math.isfinite(s.wavelength)):
        out.append(("wavelength", "wavelength must be positive and finite"))
    if len(s.layout) < 1:
        out.append(("layout", "array needs at least one element"))
    if not s.taps:
        out.append(("taps", "at least one tap is required"))
    for n, tap in enumerate(s.taps):
        path = f"taps[{n}]"
        if not (tap.S > 0 and math.isfinite(tap.S)):
            out.append((f"{path}.S", "tap power must be positive"))
        if not (tap.K >= 0):
            out.append((f"{path}.K", "Rician factor must be >= 0"))
            continue
        if tap.K > 0 and tap.deterministic is None:
            out.append((f"{path}.deterministic", "K > 0 requires a deterministic direction"))
        if not tap.pure_deterministic:
            if tap.diffuse is None:
                out.append((f"{path}.diffuse", "finite K requires a diffuse PAS"))
            else:
                out.extend(_pas_violations(tap.diffuse, f"{path}.diffuse"))
    if isinstance(s.seed, bool) or not isinstance(s.seed, (int, np.integer)) or s.seed < 0:
        out.append(("seed", "seed must be a non-negative integer"))
    return out


def validate_scenario(s: Scenario) -> Scenario:
    """Return ``s`` unchanged or raise :class:`ScenarioError` listing every violation."""
    violations = scenario_violations(s)
    if violations:
        raise ScenarioError(violations)
    return s
