"""Plane-wave Monte Carlo simulation of the channel vector.

Each diffuse tap component is a sum of ``Z`` plane waves with azimuths drawn
from the PAS and iid ``CN(0, 1)`` amplitudes, scaled by ``sqrt(S / (K + 1) / Z)``.
Every trial has its own Philox stream keyed by ``(seed, trial)``, so the
samples do not depend on blocking or thread count.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _backend
from .covariance import mean_entry
from .errors import InputError
from .geometry import TWO_PI
from .spectra import Scenario, validate_scenario

MODES = ("shared", "independent")
# upper bound on wave draws held in memory per kernel call
BLOCK_WAVES = 500_000


@dataclass(frozen=True)
class SimConfig:
    """Trials ``T``, waves per trial ``Z``, 64-bit seed and wave sharing mode.

    ``mode="shared"`` drives all elements of a local area with the same waves
    within a tap; ``"independent"`` draws fresh waves for every element.
    """

    trials: int = 100_000
    waves: int = 800
    seed: int = 0
    mode: str = "shared"
    threads: int | None = None

    def __post_init__(self):
        if int(self.trials) < 1 or int(self.waves) < 1:
            raise InputError("trials and waves must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class SampleSet:
    samples: NDArray
    seed: int
    digest: str

    def __len__(self) -> int:
        return self.samples.size

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    def fingerprint(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.samples).tobytes()).hexdigest()


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based substream for one trial."""
    return np.random.Generator(np.random.Philox(key=int(seed) | (int(trial) << 64)))


def _progression(values: NDArray) -> tuple[bool, float]:
    if values.size < 2:
        return False, 0.0
    step = values[1] - values[0]
    expected = values[0] + step * np.arange(values.size)
    scale = max(float(np.max(np.abs(values))), 1.0)
    return bool(np.all(np.abs(values - expected) <= 1e-12 * scale)), float(step)


class _WavePlan:
    """Flat tables describing which entries each wave group drives."""

    def __init__(self, s: Scenario, mode: str):
        M = s.num_elements
        k = TWO_PI / s.wavelength
        pos = s.layout.positions
        D = s.dimension
        self.dimension = D
        self.num_elements = M
        self.e_px = np.zeros(D)
        self.e_py = np.zeros(D)
        self.e_scale = np.zeros(D)
        self.e_kind = np.zeros(D, dtype=np.int32)
        self.e_amp = np.zeros(D)
        self.e_half_zeta = np.zeros(D)
        self.e_cos_bore = np.zeros(D)
        self.e_sin_bore = np.zeros(D)
        self.e_mean = np.zeros(D, dtype=complex)
        groups: list[tuple[int, list[int]]] = []
        for n, tap in enumerate(s.taps):
            for m, e in enumerate(s.layout.elements):
                i = s.index(m, n)
                self.e_px[i] = k * pos[m, 0]
                self.e_py[i] = k * pos[m, 1]
                self.e_mean[i] = mean_entry(e, tap, s.wavelength)
                p = e.pattern
                if p.kind == "cos_power":
                    self.e_kind[i] = 1
                    self.e_half_zeta[i] = 0.5 * p.zeta
                    self.e_cos_bore[i] = math.cos(p.boresight)
                    self.e_sin_bore[i] = math.sin(p.boresight)
                self.e_amp[i] = math.sqrt(p.peak_gain)
            if tap.pure_deterministic:
                continue
            if mode == "shared":
                areas: dict[int, list[int]] = {}
                for m, e in enumerate(s.layout.elements):
                    areas.setdefault(e.local_area, []).append(s.index(m, n))
                groups.extend((n, members) for members in areas.values())
            else:
                groups.extend((n, [s.index(m, n)]) for m in range(M))
        self.taps = s.taps
        self.group_tap = np.array([g[0] for g in groups], dtype=int)
        counts = [len(g[1]) for g in groups]
        self.g_count = np.array(counts, dtype=np.int_)
        self.g_start = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int_) if groups else np.zeros(0, np.int_)
        self.g_entries = np.array([i for g in groups for i in g[1]], dtype=np.int_)
        G = len(groups)
        self.g_prog = np.zeros(G, dtype=np.int32)
        self.g_uniform = np.zeros(G, dtype=np.int32)
        self.g_anchor_x = np.zeros(G)
        self.g_anchor_y = np.zeros(G)
        self.g_step_x = np.zeros(G)
        self.g_step_y = np.zeros(G)
        patterns = [e.pattern for e in s.layout.elements]
        for g, (_, members) in enumerate(groups):
            idx = np.array(members)
            self.g_anchor_x[g] = self.e_px[idx[0]]
            self.g_anchor_y[g] = self.e_py[idx[0]]
            okx, sx = _progression(self.e_px[idx])
            oky, sy = _progression(self.e_py[idx])
            if idx.size == 1 or (okx and oky):
                self.g_prog[g] = 1
                self.g_step_x[g] = sx
                self.g_step_y[g] = sy
            self.g_uniform[g] = int(len({patterns[i % M] for i in members}) == 1)
        self.need_step = bool(np.any(self.g_count[self.g_prog == 1] > 1)) if G else False
        # sin(theta) only enters through y offsets and cos**zeta patterns
        self.need_sin = bool(np.any(self.e_py != 0) or np.any(self.e_kind == 1))
        # groups sharing a PAS are sampled with one call per trial
        seen: dict = {}
        for g, n in enumerate(self.group_tap):
            seen.setdefault(s.taps[n].diffuse, []).append(g)
        self.pas_batches = [(pas, np.array(gs)) for pas, gs in seen.items()]
        self.num_groups = len(groups)

    def set_waves(self, waves: int):
        M = self.num_elements
        for n, tap in enumerate(self.taps):
            if not tap.pure_deterministic:
                self.e_scale[n * M:(n + 1) * M] = math.sqrt(0.5 * tap.S * tap.diffuse_weight / waves)

    def draw(self, rng: np.random.Generator, waves: int, theta: NDArray, amp: NDArray):
        """Fill ``theta[g, z]`` and unnormalized ``amp[g, z]`` for one trial.

        Draw order is fixed: azimuths per PAS batch, then the real and
        imaginary amplitude parts.  The ``1/sqrt(2)`` of the standard complex
        normal is folded into ``e_scale``.
        """
        for pas, gs in self.pas_batches:
            theta[gs] = pas.sample(rng, gs.size * waves).reshape(gs.size, waves)
        rng.standard_normal(out=amp.view(np.float64))

    def evaluate(self, theta: NDArray, amp: NDArray, threads: int):
        cs = np.cos(theta)
        ax = self.g_anchor_x[None, :, None]
        if self.need_sin:
            sn = np.sin(theta)
            anchor = cs * ax + sn * self.g_anchor_y[None, :, None]
        else:
            # every use of sn is multiplied by zero or skipped
            sn = cs
            anchor = cs * ax
        anc_re, anc_im = np.cos(anchor), np.sin(anchor)
        if self.need_step:
            step = cs * self.g_step_x[None, :, None]
            if self.need_sin:
                step += sn * self.g_step_y[None, :, None]
            st_re, st_im = np.cos(step), np.sin(step)
        else:
            st_re = st_im = np.zeros_like(cs)
        return _backend.kernels.plane_wave_block(
            cs, sn, anc_re, anc_im, st_re, st_im, amp,
            self.g_start, self.g_count, self.g_entries, self.g_prog, self.g_uniform,
            self.e_px, self.e_py, self.e_scale, self.e_kind, self.e_amp, self.e_half_zeta,
            self.e_cos_bore, self.e_sin_bore, self.e_mean, threads,
        )


def _plan(s: Scenario, cfg: SimConfig) -> _WavePlan:
    validate_scenario(s)
    plan = _WavePlan(s, cfg.mode)
    plan.set_waves(cfg.waves)
    return plan


def _simulate(s: Scenario, cfg: SimConfig, first: int, count: int, keep_channels: bool):
    plan = _plan(s, cfg)
    threads = cfg.threads or _backend.thread_count()
    G, Z = plan.num_groups, cfg.waves
    block = max(1, min(count, BLOCK_WAVES // (max(G, 1) * Z)))
    gains = np.empty(count)
    channels = np.empty((count, plan.dimension), dtype=complex) if keep_channels else None
    theta = np.zeros((block, G, Z))
    amp = np.zeros((block, G, Z), dtype=complex)
    for start in range(0, count, block):
        b = min(block, count - start)
        if G:
            for j in range(b):
                plan.draw(trial_rng(cfg.seed, first + start + j), Z, theta[j], amp[j])
        h, g = plan.evaluate(theta[:b], amp[:b], threads)
        gains[start:start + b] = g
        if keep_channels:
            channels[start:start + b] = h
    return gains, channels


def draw_channel(s: Scenario, cfg: SimConfig, trial: int) -> NDArray:
    """One channel realization of length ``M * N`` (same stream as :func:`run`)."""
    if trial < 0:
        raise InputError("trial index must be >= 0")
    _, h = _simulate(s, cfg, int(trial), 1, True)
    return h[0]


def simulate_channels(s: Scenario, cfg: SimConfig) -> NDArray:
    """All ``cfg.trials`` realizations as a ``(T, M * N)`` array."""
    return _simulate(s, cfg, 0, cfg.trials, True)[1]


def effective_gain(h: ArrayLike) -> float:
    h = np.asarray(h, dtype=complex)
    return float(np.sum(h.real**2 + h.imag**2))


def run(s: Scenario, cfg: SimConfig) -> SampleSet:
    """Sorted effective gains of ``cfg.trials`` independent realizations."""
    gains, _ = _simulate(s, cfg, 0, cfg.trials, False)
    return SampleSet(np.sort(gains), int(cfg.seed), s.digest())


def _sorted(samples) -> NDArray:
    if isinstance(samples, SampleSet):
        return samples.samples
    return np.sort(np.asarray(samples, dtype=float))


def ecdf(samples, x: ArrayLike):
    """Fraction of samples ``<= x`` (right-continuous)."""
    q = _sorted(samples)
    out = np.searchsorted(q, np.asarray(x, dtype=float), side="right") / q.size
    return float(out) if np.ndim(out) == 0 else out


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov statistic against a CDF callable (both step sides)."""
    q = _sorted(samples)
    try:
        F = np.asarray(cdf(q), dtype=float)
        if F.shape != q.shape:
            raise ValueError
    except (TypeError, ValueError):
        F = np.array([float(cdf(v)) for v in q])
    T = q.size
    upper = np.arange(1, T + 1) / T - F
    lower = F - np.arange(T) / T
    return float(max(upper.max(), lower.max(), 0.0))
