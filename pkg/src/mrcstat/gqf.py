"""Distribution of the effective gain ``Q = h^H A h`` of a complex normal vector.

``Q`` is rewritten as ``sum_i lam_i |x_i + mu_i|^2`` with ``x ~ CN(0, I)``.
PDF and CDF come from the confluent approximation at order ``m``: a Poisson
mixture over the Taylor coefficients ``Utilde_k`` of the MGF around
``s = (1 - m) / x``.  The raw approximation converges like ``1/m``, so the
adaptive policy doubles ``m`` and extrapolates ``log F`` and ``log(x f)`` to
``1/m -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import interpolate, optimize

from . import _backend
from .covariance import ChannelStatistics
from .errors import InputError, OrderOverflow
from .numerics import DEFAULT_EIG_FLOOR, as_hermitian, factor_psd

# raw orders below this trigger a low-order warning
LOW_ORDER = 16
CLAMP_SLACK = 1e-6
# excursions this small are rounding and clamped silently
ROUNDING_SLACK = 1e-12
# absolute change below which a tail point counts as converged
TAIL_FLOOR = 1e-15


@dataclass(frozen=True)
class GqfDecomposition:
    """Weights ``lam`` (descending, > 0) and noncentralities ``|mu_tilde|^2``."""

    weights: NDArray
    noncentralities: NDArray
    regularized: bool = False

    def __post_init__(self):
        lam = np.asarray(self.weights, dtype=float).ravel()
        nc = np.asarray(self.noncentralities, dtype=float).ravel()
        if lam.shape != nc.shape or lam.size == 0:
            raise InputError("weights and noncentralities must be equal-length and non-empty")
        if not np.all(lam > 0):
            raise InputError("all weights must be positive")
        if not np.all(nc >= 0):
            raise InputError("noncentralities must be >= 0")
        order = np.argsort(-lam, kind="stable")
        object.__setattr__(self, "weights", np.ascontiguousarray(lam[order]))
        object.__setattr__(self, "noncentralities", np.ascontiguousarray(nc[order]))

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def mean(self) -> float:
        return float(np.sum(self.weights * (1.0 + self.noncentralities)))

    @property
    def variance(self) -> float:
        return float(np.sum(self.weights**2 * (1.0 + 2.0 * self.noncentralities)))

    def log_mgf(self, s: ArrayLike) -> NDArray:
        s = np.asarray(s, dtype=float)
        ls = s[..., None] * self.weights
        terms = self.noncentralities * ls / (1.0 - ls) - np.log1p(-ls)
        return terms.sum(axis=-1)


def decompose(
    stats: ChannelStatistics | tuple[ArrayLike, ArrayLike],
    operator: ArrayLike | None = None,
    floor: float = DEFAULT_EIG_FLOOR,
) -> GqfDecomposition:
    """Eigen-decompose ``Q = v^H A v`` with ``v ~ CN(mean, cov)``.

    ``stats`` is a :class:`ChannelStatistics` or a ``(mean, covariance)``
    pair; ``operator=None`` means ``A = I``.
    """
    if isinstance(stats, ChannelStatistics):
        mean, cov = stats.mean, stats.covariance
    else:
        mean, cov = stats
    mean = np.asarray(mean, dtype=complex).ravel()
    cov = np.asarray(cov, dtype=complex)
    if cov.shape != (mean.size, mean.size):
        raise InputError("mean and covariance dimensions differ")
    degenerate = not np.any(cov)
    if degenerate:
        # purely deterministic vector: clamp against the deterministic power
        ref = max(float(np.real(np.vdot(mean, mean))) / mean.size, np.finfo(float).tiny)
        cov = np.eye(mean.size) * (floor * ref)
    factor = factor_psd(cov, floor)
    mu_t = factor.solve(mean)
    if operator is None:
        lam = factor.eigenvalues
        regularized = factor.regularized or degenerate
    else:
        a = as_hermitian(operator)
        if a.shape != cov.shape:
            raise InputError("operator dimension differs from covariance")
        inner = factor.factor.conj().T @ a @ factor.factor
        lam, w = np.linalg.eigh(0.5 * (inner + inner.conj().T))
        lam_max = float(lam.max(initial=0.0))
        if lam_max <= 0:
            raise InputError("operator annihilates the channel")
        lam = np.maximum(lam, floor * lam_max)
        mu_t = w.conj().T @ mu_t
        regularized = factor.regularized or degenerate or bool(np.any(lam <= floor * lam_max))
    nc = np.abs(mu_t) ** 2
    return GqfDecomposition(lam, nc, regularized)


def mgf(d: GqfDecomposition, s: float) -> float:
    """Moment generating function ``E[exp(s Q)]`` for ``s <= 0``."""
    if s > 0:
        raise InputError("the MGF is only evaluated for s <= 0")
    return float(np.exp(d.log_mgf(s)))


@dataclass(frozen=True)
class AuxSeries:
    """``Utilde_k = scaled[k] * exp(log_scale)`` for ``k = 0..order``."""

    order: int
    s: float
    scaled: NDArray
    vtilde: NDArray
    log_scale: float

    @property
    def values(self) -> NDArray:
        with np.errstate(over="ignore"):
            out = self.scaled * math.exp(self.log_scale) if self.log_scale < 709 else None
        if out is None or not np.all(np.isfinite(out)):
            raise OrderOverflow("Utilde values exceed the double range", self._max_finite())
        return out

    def log_values(self) -> NDArray:
        with np.errstate(divide="ignore"):
            return np.log(self.scaled) + self.log_scale

    def _max_finite(self) -> int:
        logs = self.log_values()
        ok = np.nonzero(logs < 709.0)[0]
        return int(ok[-1]) if ok.size else 0


def aux_recursion(d: GqfDecomposition, s: float, m: int) -> AuxSeries:
    """Reformulated recursion ``Utilde_k = (1/k) sum_j Vtilde_{k-j} Utilde_j``."""
    if m < 1:
        raise InputError("order must be >= 1")
    if not s < 0:
        raise InputError("the recursion is evaluated at s < 0")
    u, vt, log_scale, bad = _backend.kernels.aux_series(d.weights, d.noncentralities, float(s), int(m))
    if bad:
        raise OrderOverflow(f"recursion left the double range at order {bad}", bad - 1)
    return AuxSeries(int(m), float(s), np.asarray(u), np.asarray(vt), float(log_scale))


@dataclass(frozen=True)
class OriginalSeries:
    U: NDArray
    V: NDArray
    max_valid_order: int


def original_recursion(d: GqfDecomposition, s: float, m: int, strict: bool = True) -> OriginalSeries:
    """Recursion with factorials kept inside ``U`` and ``V`` (plain doubles).

    ``U_k = sum_j C(k-1, j) V_{k-1-j} U_j`` and
    ``V_t = t! sum_i lam^(t+1) ((t+1) nc - lam s + 1) / (1 - lam s)^(t+2)``.
    Stops at the first non-finite value; with ``strict`` an
    :class:`OrderOverflow` carrying the ceiling is raised if ``m`` is not
    reached.
    """
    lam, nc = d.weights, d.noncentralities
    denom = 1.0 - lam * s
    U = np.zeros(m + 1)
    V = np.zeros(m)
    U[0] = 1.0
    ceiling = m
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, m + 1):
            t = k - 1
            try:
                fact = float(math.factorial(t))
            except OverflowError:
                ceiling = k - 1
                break
            V[t] = fact * np.sum(lam ** (t + 1) * ((t + 1) * nc - lam * s + 1.0) / denom ** (t + 2))
            terms = [math.comb(k - 1, j) * V[k - 1 - j] * U[j] for j in range(k)]
            try:
                total = math.fsum(terms)
            except OverflowError:
                total = math.inf
            if not (math.isfinite(V[t]) and math.isfinite(total)):
                ceiling = k - 1
                break
            U[k] = total
    if ceiling < m and strict:
        raise OrderOverflow(f"original recursion overflows after order {ceiling}", ceiling,
                            OriginalSeries(U[: ceiling + 1], V[:ceiling], ceiling))
    return OriginalSeries(U[: ceiling + 1], V[:ceiling], ceiling)


def original_cdf_pdf(d: GqfDecomposition, x: float, m: int) -> tuple[float, float]:
    """CDF and PDF at order ``m`` from the unscaled recursion (overflow-prone)."""
    s = (1.0 - m) / x
    series = original_recursion(d, s, m)
    mg = mgf(d, s)
    k = np.arange(m)
    coeff = np.array([(m - 1) ** int(j) / (x ** int(j) * math.factorial(int(j))) for j in k])
    cdf = mg * float(np.sum(coeff * series.U[:m]))
    pdf = mg * (m - 1) ** m / (x ** (m + 1) * math.factorial(m - 1)) * series.U[m]
    return cdf, pdf


@dataclass(frozen=True)
class ApproxConfig:
    """Order policy.

    ``order`` fixes ``m``; ``None`` selects the adaptive policy: start at
    ``start``, double up to ``cap``, stop once successive estimates change by
    less than ``tolerance`` in the CDF (absolute, tightened proportionally
    for CDF values below 1e-3).  ``extrapolate`` enables the ``1/m`` extrapolation over the
    last ``depth + 1`` orders.
    """

    order: int | None = None
    tolerance: float = 1e-6
    cap: int = 4096
    start: int = 16
    extrapolate: bool = True
    depth: int = 4

    def __post_init__(self):
        if self.order is not None and self.order < 2:
            raise InputError("approximation order must be >= 2")
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if self.start < 2 or self.cap < self.start:
            raise InputError("need 2 <= start <= cap")
        if self.depth < 1:
            raise InputError("extrapolation depth must be >= 1")

    @classmethod
    def fixed(cls, m: int) -> "ApproxConfig":
        return cls(order=m)

    @property
    def adaptive(self) -> bool:
        return self.order is None


@dataclass(frozen=True)
class DistributionCurve:
    """Curve on a gain grid with per-point order and diagnostics.

    ``error_estimate`` is the last change of the CDF estimate between
    successive orders (adaptive policy only).
    """

    x: NDArray
    pdf: NDArray
    cdf: NDArray
    local_diversity: NDArray
    order: NDArray
    diagnostics: tuple[tuple[str, ...], ...]
    converged: bool = True
    extrapolated: bool = False
    error_estimate: NDArray | None = None

    def __len__(self) -> int:
        return self.x.size

    def cdf_function(self):
        """Monotone interpolant of the CDF in ``log x``.

        Below the grid the CDF is continued as ``F0 * (x / x0) ** D0`` and
        above it is taken as 1.
        """
        logx = np.log(self.x)
        if self.x.size == 1:
            interp = None
        else:
            interp = interpolate.PchipInterpolator(logx, self.cdf, extrapolate=False)
        x0, f0, d0 = self.x[0], self.cdf[0], self.local_diversity[0]

        def F(value):
            v = np.asarray(value, dtype=float)
            out = np.ones(v.shape)
            with np.errstate(divide="ignore"):
                lv = np.log(v)
            below = v < x0
            out[below] = f0 * (v[below] / x0) ** d0 if np.isfinite(d0) else 0.0
            inside = ~below & (v <= self.x[-1])
            if interp is not None:
                out[inside] = interp(lv[inside])
            else:
                out[inside] = f0
            out = np.clip(out, 0.0, 1.0)
            return float(out) if out.ndim == 0 else out

        return F

    @property
    def warnings(self) -> list[str]:
        seen = []
        for notes in self.diagnostics:
            for n in notes:
                if n not in seen:
                    seen.append(n)
        return seen


def _order_logs(d: GqfDecomposition, x: NDArray, m: int):
    """``log F``, ``log(x f)`` at order ``m`` and a per-point failure mask."""
    s = (1.0 - m) / x
    log_scale, head, last, bad = _backend.kernels.aux_tail_batch(
        d.weights, d.noncentralities, s, int(m), _backend.thread_count()
    )
    log_m = d.log_mgf(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_f = log_m + log_scale + np.log(head)
        log_xf = math.log(m) + log_m + log_scale + np.log(last)
    failed = (np.asarray(bad) != 0) | ~np.isfinite(log_f) | ~np.isfinite(log_xf)
    return log_f, log_xf, failed


def _neville(h: Sequence[float], values: Sequence[NDArray]) -> NDArray:
    """Polynomial extrapolation of ``values(h)`` to ``h = 0``."""
    p = [np.asarray(v, dtype=float).copy() for v in values]
    n = len(h)
    for level in range(1, n):
        for i in range(n - level):
            p[i] = (h[i + level] * p[i] - h[i] * p[i + 1]) / (h[i + level] - h[i])
    return p[0]


def _threshold(log_value: NDArray, tol: float) -> NDArray:
    value = np.exp(log_value)
    return np.maximum(tol * np.minimum(1.0, 1e3 * value), TAIL_FLOOR)


def _as_decomposition(source) -> GqfDecomposition:
    if isinstance(source, GqfDecomposition):
        return source
    return decompose(source)


def evaluate_curve(
    source: GqfDecomposition | ChannelStatistics,
    grid: ArrayLike,
    cfg: ApproxConfig = ApproxConfig(),
) -> DistributionCurve:
    """PDF, CDF and local diversity on a strictly increasing positive grid."""
    d = _as_decomposition(source)
    x = np.atleast_1d(np.asarray(grid, dtype=float))
    if x.size == 0 or not np.all(x > 0) or not np.all(np.diff(x) > 0):
        raise InputError("grid must be non-empty, positive and strictly increasing")
    notes: list[list[str]] = [[] for _ in range(x.size)]
    order_used = np.zeros(x.size, dtype=int)
    converged = True
    extrapolated = False

    if not cfg.adaptive:
        m = cfg.order
        log_f, log_xf, failed = _order_logs(d, x, m)
        order_used[:] = m
        if m < LOW_ORDER:
            for n in notes:
                n.append(f"low approximation order m={m}")
        for p in np.nonzero(failed)[0]:
            notes[p].append(f"order overflow at m={m}")
    else:
        history: list[tuple[int, NDArray, NDArray]] = []
        frozen = np.zeros(x.size, dtype=bool)
        best_f = np.full(x.size, -np.inf)
        best_xf = np.full(x.size, -np.inf)
        prev_f = None
        change = np.full(x.size, np.nan)
        m = cfg.start
        while True:
            lf, lxf, failed = _order_logs(d, x, m)
            newly = failed & ~frozen
            for p in np.nonzero(newly)[0]:
                notes[p].append(f"order overflow at m={m}; kept m={order_used[p]}")
            frozen |= failed
            lf = np.where(frozen, np.nan, lf)
            lxf = np.where(frozen, np.nan, lxf)
            history.append((m, lf, lxf))
            if cfg.extrapolate and len(history) >= 2:
                tail = history[-(cfg.depth + 1):]
                h = [1.0 / mm for mm, _, _ in tail]
                est_f = _neville(h, [v for _, v, _ in tail])
                est_xf = _neville(h, [v for _, _, v in tail])
                extrapolated = True
            else:
                est_f, est_xf = lf, lxf
            live = ~frozen
            best_f = np.where(live, est_f, best_f)
            best_xf = np.where(live, est_xf, best_xf)
            order_used[live] = m
            done = False
            if prev_f is not None:
                df = np.abs(np.exp(est_f) - np.exp(prev_f))
                change = np.where(live, df, change)
                ok = df <= _threshold(est_f, cfg.tolerance)
                done = bool(np.all(ok | frozen))
            if done or not live.any():
                break
            if 2 * m > cfg.cap:
                converged = False
                for p in np.nonzero(live)[0]:
                    notes[p].append(f"not converged at order cap {m}")
                break
            prev_f = est_f
            m *= 2
        log_f, log_xf = best_f, best_xf
        if frozen.all() and not np.isfinite(log_f).any():
            raise OrderOverflow("recursion failed at every grid point", 0)

    cdf = np.exp(log_f)
    xf = np.exp(log_xf)
    for p in range(x.size):
        if cdf[p] > 1.0:
            if cdf[p] <= 1.0 + ROUNDING_SLACK:
                pass
            elif cdf[p] <= 1.0 + CLAMP_SLACK:
                notes[p].append("cdf clamped to 1")
            else:
                notes[p].append(f"approximation failure: cdf={cdf[p]:.9g}")
            cdf[p] = 1.0
    # running maximum: never moves a point further from a nondecreasing truth
    repaired = np.fmax.accumulate(cdf)
    drop = repaired - cdf
    limit = cfg.tolerance if cfg.adaptive else ROUNDING_SLACK
    for p in np.nonzero(drop > limit)[0]:
        notes[p].append(f"monotonicity repaired (drop {drop[p]:.2e})")
    changed = drop > 0
    with np.errstate(divide="ignore"):
        log_f = np.where(changed, np.log(repaired), log_f)
    cdf = repaired
    with np.errstate(divide="ignore", invalid="ignore"):
        ld = np.where(cdf > 0, xf / cdf, np.exp(log_xf - log_f))
    pdf = xf / x
    return DistributionCurve(
        x, pdf, cdf, ld, order_used, tuple(tuple(n) for n in notes), converged, extrapolated,
        None if not cfg.adaptive else change,
    )


def cdf(d: GqfDecomposition, x: float, cfg: ApproxConfig = ApproxConfig()) -> float:
    return float(evaluate_curve(d, [x], cfg).cdf[0])


def pdf(d: GqfDecomposition, x: float, cfg: ApproxConfig = ApproxConfig()) -> float:
    return float(evaluate_curve(d, [x], cfg).pdf[0])


def local_diversity(d: GqfDecomposition, x: float, cfg: ApproxConfig = ApproxConfig()) -> float:
    """``x f(x) / F(x)``, the log-log slope of the CDF."""
    return float(evaluate_curve(d, [x], cfg).local_diversity[0])


def quantile(d: GqfDecomposition, probability: float, cfg: ApproxConfig = ApproxConfig(),
             rtol: float = 1e-10) -> float:
    """Gain at which the approximate CDF equals ``probability``."""
    if not 0 < probability < 1:
        raise InputError("probability must lie in (0, 1)")
    target = math.log(probability)

    def g(log_x):
        return math.log(max(cdf(d, math.exp(log_x), cfg), 1e-300)) - target

    center = math.log(d.mean)
    lo, hi = center - 1.0, center + 1.0
    while g(lo) > 0:
        lo -= 2.0
    while g(hi) < 0:
        hi += 1.0
    return math.exp(optimize.brentq(g, lo, hi, xtol=1e-14, rtol=rtol))


def auto_grid(d: GqfDecomposition, points: int = 200) -> NDArray:
    """Log-spaced grid from deep in the lower tail to well past the mean."""
    mu, sd = d.mean, math.sqrt(d.variance)
    lo = max(mu - 10.0 * sd, 1e-3 * mu)
    hi = mu + 12.0 * sd
    return np.geomspace(lo, hi, points)
