from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from mrcstat import covariance, geometry, gqf, scenario_io
from mrcstat.errors import InputError, OrderOverflow
from mrcstat.gqf import ApproxConfig, GqfDecomposition
from mrcstat.spectra import Scenario, TapProfile

from oracles import gamma_cdf, gamma_pdf, gil_pelaez_cdf, rician_cdf

EXP = GqfDecomposition([1.0], [0.0])
ERLANG2 = GqfDecomposition([1.0, 1.0], [0.0, 0.0])


def _iid(n):
    return GqfDecomposition(np.ones(n), np.zeros(n))


def decompositions(min_size=1, max_size=64):
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(0.01, 10), min_size=n, max_size=n),
            st.lists(st.one_of(st.just(0.0), st.floats(0, 6)), min_size=n, max_size=n),
        )
    ).map(lambda t: GqfDecomposition(t[0], t[1]))


def test_decompose_examples():
    d = gqf.decompose(([1, 0], np.eye(2)))
    np.testing.assert_allclose(d.weights, [1, 1])
    assert np.sum(d.weights * d.noncentralities) == pytest.approx(1)
    d = gqf.decompose(([0, 0], np.diag([2.0, 3.0])))
    np.testing.assert_allclose(d.weights, [3, 2])
    np.testing.assert_allclose(d.noncentralities, 0)
    d = gqf.decompose(([0, 0], [[1, 0.5], [0.5, 1]]))
    np.testing.assert_allclose(d.weights, [1.5, 0.5])


@given(st.integers(0, 2**32 - 1), st.integers(1, 24), st.booleans())
def test_decompose_mean_invariant(seed, n, with_operator):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    cov = a @ a.conj().T / n + 0.05 * np.eye(n)
    mu = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    op = None
    expected = np.trace(cov).real + np.vdot(mu, mu).real
    if with_operator:
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        op = b @ b.conj().T + 0.1 * np.eye(n)
        expected = np.trace(cov @ op).real + np.vdot(mu, op @ mu).real
    d = gqf.decompose((mu, cov), op)
    assert np.all(d.weights > 0)
    assert np.all(np.diff(d.weights) <= 0)
    assert d.mean == pytest.approx(expected, rel=1e-8)


def test_decompose_deterministic_channel_is_regularized():
    d = gqf.decompose(([1.0, 1j], np.zeros((2, 2))))
    assert d.regularized
    assert d.mean == pytest.approx(2, rel=1e-9)


def test_decompose_from_statistics():
    s = Scenario(1.0, geometry.build_ula(4, 0.5), [TapProfile(1.0)])
    stats = covariance.assemble(s)
    d = gqf.decompose(stats)
    assert d.mean == pytest.approx(stats.expected_gain, rel=1e-10)


def test_mgf_examples():
    assert gqf.mgf(ERLANG2, 0.0) == 1.0
    assert gqf.mgf(EXP, -1.0) == pytest.approx(0.5)
    assert gqf.mgf(GqfDecomposition([1.0], [2.0]), -1.0) == pytest.approx(0.5 * math.exp(-1), rel=1e-14)
    with pytest.raises(InputError):
        gqf.mgf(EXP, 0.1)


def test_mgf_log_domain_for_large_dimension():
    d = _iid(2048)
    assert gqf.mgf(d, -1.0) == 0.0
    assert d.log_mgf(-1.0) == pytest.approx(-2048 * math.log(2))


def test_aux_recursion_base_and_exponential():
    series = gqf.aux_recursion(EXP, -3.0, 10)
    assert series.values[0] == 1.0
    # single exponential branch: Utilde_k = r**k with r = -s / (1 - s)
    np.testing.assert_allclose(series.values, (3.0 / 4.0) ** np.arange(11), rtol=1e-13)


@settings(max_examples=30)
@given(decompositions(1, 6), st.floats(-5, -0.05))
def test_recursion_equivalence(d, s):
    k = np.arange(21)
    aux = gqf.aux_recursion(d, s, 20).values
    orig = gqf.original_recursion(d, s, 20).U
    expected = np.array([(-s) ** int(j) * orig[j] / math.factorial(int(j)) for j in k])
    np.testing.assert_allclose(aux, expected, rtol=1e-9)


def test_original_recursion_overflow_ceiling():
    with pytest.raises(OrderOverflow) as info:
        gqf.original_recursion(_iid(32), -200.0, 400)
    ceiling = info.value.max_valid_order
    assert 1 <= ceiling < 400
    partial = gqf.original_recursion(_iid(32), -200.0, 400, strict=False)
    assert partial.max_valid_order == ceiling
    series = gqf.aux_recursion(_iid(32), -200.0, 400)
    assert np.all(np.isfinite(series.log_values()))


def test_original_agrees_with_aux_at_low_order():
    d = GqfDecomposition([2.0, 1.0, 0.5], [0.3, 0.0, 1.2])
    f_orig, p_orig = gqf.original_cdf_pdf(d, 4.0, 30)
    curve = gqf.evaluate_curve(d, [4.0], ApproxConfig.fixed(30))
    assert curve.cdf[0] == pytest.approx(f_orig, rel=1e-10)
    assert curve.pdf[0] == pytest.approx(p_orig, rel=1e-10)


def test_exponential_examples():
    assert gqf.cdf(EXP, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-4)
    assert gqf.pdf(EXP, 1.0) == pytest.approx(math.exp(-1), abs=1e-4)
    ld = math.exp(-1) / (1 - math.exp(-1))
    assert gqf.local_diversity(EXP, 1.0) == pytest.approx(ld, abs=1e-4)


def test_erlang_examples():
    assert gqf.cdf(ERLANG2, 2.0) == pytest.approx(1 - 3 * math.exp(-2), abs=1e-4)
    assert gqf.pdf(ERLANG2, 2.0) == pytest.approx(2 * math.exp(-2), abs=1e-4)


@pytest.mark.parametrize("x", [1.0, 5.0, 10.0])
def test_rician_examples(x):
    d = GqfDecomposition([1.0], [4.0])
    assert gqf.cdf(d, x) == pytest.approx(rician_cdf(4.0, x), abs=1e-3)


def test_gamma32_curve():
    d = _iid(32)
    grid = np.geomspace(5, 80, 60)
    curve = gqf.evaluate_curve(d, grid)
    ref = np.array([gamma_cdf(32, v) for v in grid])
    assert np.max(np.abs(curve.cdf - ref)) < 1e-4


def test_fixed_order_is_beta_prime_mixture():
    # order m with one exponential branch: Q * (m-1) / Gamma(m) scaled, i.e. F = betaprime(1, m).cdf(x/(m-1))
    m = 40
    grid = np.geomspace(0.01, 20, 30)
    curve = gqf.evaluate_curve(_iid(3), grid, ApproxConfig.fixed(m))
    np.testing.assert_allclose(curve.cdf, sps.betaprime(3, m).cdf(grid / (m - 1)), rtol=1e-11, atol=1e-13)


def test_local_diversity_identity_and_low_tail():
    d = _iid(8)
    x = gqf.quantile(d, 1e-3, ApproxConfig(tolerance=1e-8))
    curve = gqf.evaluate_curve(d, np.geomspace(0.5 * x, 20, 50))
    np.testing.assert_allclose(curve.local_diversity * curve.cdf, curve.x * curve.pdf, rtol=1e-9)
    exact = x * gamma_pdf(8, x) / gamma_cdf(8, x)
    assert gqf.local_diversity(d, x) == pytest.approx(exact, rel=0.02)


@settings(max_examples=20)
@given(decompositions(2, 64))
def test_cdf_monotone_and_bounded(d):
    grid = gqf.auto_grid(d, 40)
    for cfg in (ApproxConfig.fixed(64), ApproxConfig(cap=256)):
        curve = gqf.evaluate_curve(d, grid, cfg)
        assert np.all(np.diff(curve.cdf) >= -1e-12)
        assert np.all((curve.cdf >= 0) & (curve.cdf <= 1 + 1e-9))
        assert np.all(curve.pdf >= -1e-12)


@settings(max_examples=20)
@given(decompositions(1, 16), st.floats(0.01, 100))
def test_scale_covariance(d, c):
    grid = gqf.auto_grid(d, 12)
    scaled = GqfDecomposition(c * d.weights, d.noncentralities)
    cfg = ApproxConfig.fixed(100)
    a = gqf.evaluate_curve(d, grid, cfg).cdf
    b = gqf.evaluate_curve(scaled, c * grid, cfg).cdf
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_pdf_normalization_and_mean():
    d = GqfDecomposition([3.0, 1.0, 0.5, 0.2], [1.0, 0.0, 2.0, 0.5])
    grid = np.geomspace(1e-4, d.mean + 40 * math.sqrt(d.variance), 4000)
    curve = gqf.evaluate_curve(d, grid, ApproxConfig(tolerance=1e-8))
    assert np.trapezoid(curve.pdf, grid) == pytest.approx(1, abs=1e-3)
    assert np.trapezoid(grid * curve.pdf, grid) == pytest.approx(d.mean, rel=1e-4)


def test_order_convergence_decreases():
    d = GqfDecomposition([2.0, 1.0, 1.0, 0.3], [0.5, 0.0, 1.0, 0.0])
    grid = gqf.auto_grid(d, 30)
    curves = [gqf.evaluate_curve(d, grid, ApproxConfig.fixed(m)).cdf for m in (16, 32, 64, 128, 256)]
    deltas = [np.max(np.abs(a - b)) for a, b in zip(curves, curves[1:])]
    assert all(later < earlier for earlier, later in zip(deltas, deltas[1:]))


def test_fixed_order_diagnostics():
    d = GqfDecomposition(np.linspace(1, 2, 16), np.full(16, 0.5))
    grid = gqf.auto_grid(d, 50)
    for m in (16, 64, 150):
        assert gqf.evaluate_curve(d, grid, ApproxConfig.fixed(m)).warnings == []
    low = gqf.evaluate_curve(d, grid, ApproxConfig.fixed(4))
    assert low.warnings == ["low approximation order m=4"]


def test_single_point_grid_and_validation():
    curve = gqf.evaluate_curve(EXP, [0.5])
    assert len(curve) == 1 and curve.cdf.shape == (1,)
    with pytest.raises(InputError):
        gqf.evaluate_curve(EXP, [1.0, 0.5])
    with pytest.raises(InputError):
        ApproxConfig(order=1)
    with pytest.raises(InputError):
        ApproxConfig(tolerance=0)


def test_adaptive_reports_orders_and_error_estimate():
    curve = gqf.evaluate_curve(_iid(4), np.geomspace(0.1, 20, 20))
    assert curve.converged and curve.extrapolated
    assert np.all(curve.order >= 16)
    assert np.all(curve.error_estimate <= 1e-6)


def test_cdf_function_interpolates():
    d = _iid(4)
    curve = gqf.evaluate_curve(d, np.geomspace(0.05, 30, 200))
    F = curve.cdf_function()
    pts = np.array([0.01, 0.3, 2.7, 11.0, 100.0])
    ref = np.array([gamma_cdf(4, v) for v in pts])
    np.testing.assert_allclose(F(pts), ref, atol=1e-5)


def test_quantile_inverts_cdf():
    x = gqf.quantile(ERLANG2, 0.25)
    assert 1 - math.exp(-x) * (1 + x) == pytest.approx(0.25, abs=1e-6)


@pytest.mark.parametrize("name", ["verify_ula32_omni", "verify_ula32_vm_squint"])
def test_correlated_rician_against_fourier_inversion(name):
    s = scenario_io.load_bundled(name).scenario
    d = gqf.decompose(covariance.assemble(s))
    grid = gqf.auto_grid(d, 25)
    curve = gqf.evaluate_curve(d, grid)
    ref = np.array([gil_pelaez_cdf(d.weights, d.noncentralities, v) for v in grid])
    assert np.max(np.abs(curve.cdf - ref)) < 1e-4
