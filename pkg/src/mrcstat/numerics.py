"""Numerical kernels: circle quadrature, Hermitian factorizations, J0, log sums."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import ConvergenceFailure, InputError, NonConvergence, NotPositiveSemidefinite

TWO_PI = 2.0 * math.pi

# eigenvalue clamp, relative to the largest eigenvalue
DEFAULT_EIG_FLOOR = 1e-12
# eigenvalues below -PSD_SLACK * largest are treated as a genuine defect
PSD_SLACK = 1e-8


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls :func:`integrate`.

    ``method`` is ``"adaptive"`` (panel bisection until the local error
    estimate meets ``rtol``) or ``"fixed"`` (``fixed_panels`` Gauss-Legendre
    panels, no refinement).  The tolerance is relative to the integral of the
    integrand's magnitude, so integrals that cancel to ~0 still terminate.
    """

    method: str = "adaptive"
    rtol: float = 1e-9
    max_levels: int = 20
    nodes: int = 16
    fixed_panels: int = 64

    def __post_init__(self):
        if self.method not in ("adaptive", "fixed"):
            raise InputError(f"unknown quadrature method {self.method!r}")
        if not self.rtol > 0:
            raise InputError("quadrature tolerance must be positive")
        if self.max_levels < 1:
            raise InputError("max subdivisions must be at least 1")
        if self.nodes < 2 or self.fixed_panels < 1:
            raise InputError("quadrature needs >= 2 nodes and >= 1 panel")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class QuadResult:
    value: complex | NDArray
    error: float | NDArray


@lru_cache(maxsize=8)
def _gauss_legendre(n: int) -> tuple[NDArray, NDArray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_rule(f, lo: NDArray, hi: NDArray, n: int):
    """Evaluate a whole-panel and a split-panel GL rule on every panel at once.

    Returns (coarse, fine, fine_abs), each with shape ``batch + (P,)``.
    """
    x, w = _gauss_legendre(n)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    quarter = 0.5 * half
    # [whole | left half | right half] nodes for each panel
    centers = np.stack([mid, lo + quarter, mid + quarter], axis=1)  # (P, 3)
    scales = np.stack([half, quarter, quarter], axis=1)
    theta = centers[:, :, None] + scales[:, :, None] * x[None, None, :]
    values = np.asarray(f(theta.reshape(-1)))
    values = values.reshape(values.shape[:-1] + theta.shape)
    weighted = values * (scales[:, :, None] * w[None, None, :])
    sums = weighted.sum(axis=-1)  # batch + (P, 3)
    coarse = sums[..., 0]
    fine = sums[..., 1] + sums[..., 2]
    fine_abs = np.abs(weighted[..., 1:, :]).sum(axis=(-1, -2))
    return coarse, fine, fine_abs


def integrate(
    f: Callable[[NDArray], ArrayLike],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
    atol: float = 0.0,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` by Gauss-Legendre panels.

    ``f`` takes a 1-D array of abscissae and returns values of shape
    ``batch + (len(theta),)``; every batch entry is integrated over the same
    panels, and a panel is refined until all entries meet the tolerance.
    Discontinuities should be listed in ``breakpoints``.  ``atol`` is an
    absolute error allowance for integrals that vanish up to rounding.
    """
    if not b > a:
        raise InputError("integration interval must have b > a")
    edges = np.unique(np.concatenate([[a, b], [p for p in breakpoints if a < p < b]]))
    # panels no wider than pi/4 to start: integrands here oscillate on that scale
    lo_list, hi_list = [], []
    for left, right in zip(edges[:-1], edges[1:]):
        if spec.method == "fixed":
            count = max(1, int(round(spec.fixed_panels * (right - left) / (b - a))))
        else:
            count = max(1, int(math.ceil((right - left) / (math.pi / 4))))
        cuts = np.linspace(left, right, count + 1)
        lo_list.append(cuts[:-1])
        hi_list.append(cuts[1:])
    lo = np.concatenate(lo_list)
    hi = np.concatenate(hi_list)
    length = b - a

    total = None
    total_err = None
    accepted_abs = None
    level = 0
    while True:
        coarse, fine, fine_abs = _panel_rule(f, lo, hi, spec.nodes)
        err = np.abs(fine - coarse)
        if total is None:
            batch = fine.shape[:-1]
            total = np.zeros(batch, dtype=fine.dtype)
            total_err = np.zeros(batch)
            accepted_abs = np.zeros(batch)
        scale = accepted_abs + fine_abs.sum(axis=-1)  # L1 norm estimate
        width = (hi - lo) / length
        allowed = (spec.rtol * scale[..., None] + atol) * width + 1e-300
        ok = np.all(err <= allowed, axis=tuple(range(err.ndim - 1)))
        if spec.method == "fixed":
            ok[:] = True
        elif not ok.all():
            # endpoint singularities such as cos**zeta with zeta < 1 never meet
            # the width-proportional test, so also stop on the global budget
            if np.all(total_err + err.sum(axis=-1) <= spec.rtol * scale + atol):
                ok[:] = True
        total = total + fine[..., ok].sum(axis=-1)
        total_err = total_err + err[..., ok].sum(axis=-1)
        accepted_abs = accepted_abs + fine_abs[..., ok].sum(axis=-1)
        if ok.all():
            break
        level += 1
        if level > spec.max_levels:
            rest_err = err[..., ~ok].sum(axis=-1)
            raise NonConvergence(
                f"adaptive quadrature exceeded {spec.max_levels} refinement levels",
                estimate=total + fine[..., ~ok].sum(axis=-1),
                error=total_err + rest_err,
            )
        lo_bad, hi_bad = lo[~ok], hi[~ok]
        mid = 0.5 * (lo_bad + hi_bad)
        lo = np.concatenate([lo_bad, mid])
        hi = np.concatenate([mid, hi_bad])
    if total.ndim == 0:
        return QuadResult(total[()], float(total_err))
    return QuadResult(total, total_err)


def integrate_circle(
    f: Callable[[NDArray], ArrayLike],
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
) -> complex:
    """Return the integral of ``f`` over azimuth ``[0, 2*pi)``."""
    bps = [p % TWO_PI for p in breakpoints]
    return integrate(f, 0.0, TWO_PI, spec, bps).value


def bessel_j0(x: ArrayLike):
    """Zero-order Bessel function of the first kind (Cephes via scipy)."""
    return special.j0(x)


def as_hermitian(matrix: ArrayLike, rtol: float = 1e-10) -> NDArray:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"expected a square matrix, got shape {m.shape}")
    scale = max(float(np.max(np.abs(m))) if m.size else 0.0, 1e-300)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > rtol * scale:
        raise InputError("matrix is not Hermitian")
    return 0.5 * (m + m.conj().T)


def _eigh(m: NDArray):
    try:
        return np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def hermitian_eigenvalues(matrix: ArrayLike) -> NDArray:
    """Real eigenvalues of a Hermitian matrix, in descending order."""
    m = as_hermitian(matrix)
    try:
        values = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return values[::-1].copy()


@dataclass(frozen=True)
class PsdFactor:
    """``M ~= L L^H`` with ``L = V diag(sqrt(w))`` from a clamped eigendecomposition."""

    factor: NDArray
    eigenvalues: NDArray  # clamped, descending
    eigenvectors: NDArray
    regularized: bool
    raw_min_eigenvalue: float

    def solve(self, vector: ArrayLike) -> NDArray:
        """Apply ``L^-1`` to ``vector``."""
        v = np.asarray(vector)
        return (self.eigenvectors.conj().T @ v) / np.sqrt(self.eigenvalues)


def factor_psd(matrix: ArrayLike, floor: float = DEFAULT_EIG_FLOOR) -> PsdFactor:
    """Factor a Hermitian PSD matrix, clamping tiny eigenvalues.

    Eigenvalues below ``floor`` times the largest one are raised to that level
    and the result is flagged as regularized.  A zero matrix is clamped
    against an absolute scale of one.
    """
    m = as_hermitian(matrix)
    values, vectors = _eigh(m)
    values = values[::-1]
    vectors = vectors[:, ::-1]
    largest = float(values[0]) if values.size else 0.0
    smallest = float(values[-1]) if values.size else 0.0
    reference = largest if largest > 0 else 1.0
    if smallest < -PSD_SLACK * reference:
        raise NotPositiveSemidefinite(
            f"smallest eigenvalue {smallest:.3e} is significantly negative", smallest
        )
    level = floor * reference
    regularized = bool(smallest < level)
    clamped = np.maximum(values, level)
    factor = vectors * np.sqrt(clamped)[None, :]
    return PsdFactor(factor, clamped, vectors, regularized, smallest)


def log_domain_sum(terms: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Signed sum of ``sign * exp(logmag)`` terms, returned as ``(sign, logmag)``.

    Exact cancellation gives ``(1.0, -inf)``.
    """
    terms = [(float(s), float(l)) for s, l in terms if s != 0 and l != -math.inf]
    if not terms:
        return 1.0, -math.inf
    peak = max(l for _, l in terms)
    total = math.fsum(math.copysign(1.0, s) * math.exp(l - peak) for s, l in terms)
    if total == 0.0:
        return 1.0, -math.inf
    return math.copysign(1.0, total), peak + math.log(abs(total))


def log_i0(kappa: float) -> float:
    """``log I0(kappa)`` without overflow for large concentrations."""
    return math.log(special.i0e(kappa)) + abs(kappa)
