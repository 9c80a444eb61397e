from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrcstat import covariance, geometry
from mrcstat.errors import InputError, ZeroDenominator
from mrcstat.geometry import AntennaElement, Direction, ElementPattern
from mrcstat.spectra import DiffusePas, Scenario, TapProfile

from oracles import j0_series

ISO = ElementPattern.isotropic()


def _el(x, y=0.0, pattern=ISO, area=0):
    return AntennaElement((x, y, 0.0), pattern, area)


def test_mean_entry_examples():
    omni = DiffusePas.omni()
    assert covariance.mean_entry(_el(0), TapProfile(1.0, 0.0), 1.0) == 0
    d = Direction(0.0)
    h = covariance.mean_entry(_el(0.3), TapProfile(1.0, math.inf, d, None), 1.0)
    assert abs(h) == pytest.approx(1)
    assert cmath.phase(h) == pytest.approx(2 * math.pi * 0.3)
    assert covariance.mean_entry(_el(0), TapProfile(1.0, 4.0, d, omni), 1.0) == pytest.approx(math.sqrt(0.8))


def test_variance_entry_examples():
    vm = DiffusePas.von_mises(0.3, 7.0)
    assert covariance.variance_entry(_el(0), TapProfile(1.0, 0.0, None, vm)) == pytest.approx(1, abs=1e-10)
    assert covariance.variance_entry(_el(0), TapProfile(1.0, 4.0, Direction(0), vm)) == pytest.approx(0.2)
    el = _el(0, pattern=ElementPattern.cos_power(2.0))
    assert covariance.variance_entry(el, TapProfile(1.0)) == pytest.approx(1, abs=1e-10)
    assert covariance.variance_entry(el, TapProfile(1.0, math.inf, Direction(0), None)) == 0


def test_correlation_examples():
    omni = DiffusePas.omni()
    assert covariance.correlation_coefficient(_el(1), _el(1), omni, 1.0).rho == 1
    r = covariance.correlation_coefficient(_el(0), _el(0.5), omni, 1.0)
    assert r.rho.real == pytest.approx(j0_series(math.pi), abs=1e-10)
    assert r.rho.real == pytest.approx(-0.3042, abs=1e-4)
    assert abs(r.rho.imag) < 1e-12
    vm0 = covariance.correlation_coefficient(_el(0), _el(0.5), DiffusePas.von_mises(1.0, 0.0), 1.0)
    assert vm0.rho == pytest.approx(r.rho, abs=1e-8)


def test_narrow_sector_limit():
    center = 0.4
    r = covariance.correlation_coefficient(_el(0), _el(0.7, 0.2), DiffusePas.sector(center, 1e-4), 1.0)
    expected = 2 * math.pi * (-0.7 * math.cos(center) - 0.2 * math.sin(center))
    assert abs(r.rho) == pytest.approx(1, abs=1e-8)
    assert abs(r.rho - cmath.exp(1j * expected)) < 1e-6


@pytest.mark.parametrize("d", [0.1, 0.37, 1.3, 3.0])
def test_omni_isotropic_is_bessel(d):
    r = covariance.correlation_coefficient(_el(0), _el(0, d), DiffusePas.omni(), 1.0).rho
    assert r.real == pytest.approx(j0_series(2 * math.pi * d), abs=1e-10)


def test_correlation_errors():
    omni = DiffusePas.omni()
    with pytest.raises(InputError):
        covariance.correlation_coefficient(_el(0), _el(1, area=1), omni, 1.0)
    back = _el(0, pattern=ElementPattern.cos_power(2.0, boresight=math.pi))
    with pytest.raises(ZeroDenominator):
        covariance.correlation_coefficient(_el(0.5), back, DiffusePas.sector(0.0, 0.5), 1.0)


def test_directivity_ordering():
    # zero squint: both the pattern and the separation lie along the x axis
    omni = DiffusePas.omni()
    mags = []
    for zeta in (0.0, 5.0, 20.0):
        p = ElementPattern.cos_power(zeta, 0.0)
        mags.append(abs(covariance.correlation_coefficient(_el(0, pattern=p), _el(0.5, pattern=p), omni, 1.0).rho))
    assert mags[2] > mags[1] > mags[0]


pas_strategy = st.one_of(
    st.just(DiffusePas.omni()),
    st.builds(DiffusePas.sector, st.floats(0, 2 * math.pi), st.floats(0.05, 2 * math.pi)),
    st.builds(DiffusePas.von_mises, st.floats(0, 2 * math.pi), st.floats(0, 50)),
)


@settings(max_examples=25)
@given(pas_strategy, st.floats(0, 20), st.floats(0, 2 * math.pi), st.floats(-2, 2), st.floats(-2, 2))
def test_correlation_hermitian_and_bounded(pas, zeta, bore, dx, dy):
    p = ElementPattern.cos_power(zeta, bore)
    a, b = _el(0, pattern=p), _el(dx, dy, pattern=p)
    try:
        ab = covariance.correlation_coefficient(a, b, pas, 1.0).rho
    except ZeroDenominator:
        return
    ba = covariance.correlation_coefficient(b, a, pas, 1.0).rho
    assert ab == pytest.approx(np.conj(ba), abs=1e-9)
    assert abs(ab) <= 1 + 1e-9


def _ula_scenario(M, taps, **kw):
    return Scenario(1.0, geometry.build_ula(M, 0.5, **kw), taps)


def test_assemble_examples():
    st1 = covariance.assemble(_ula_scenario(1, [TapProfile(1.0)]))
    assert st1.mean.tolist() == [0]
    np.testing.assert_allclose(st1.covariance, [[1]])
    st2 = covariance.assemble(_ula_scenario(2, [TapProfile(1.0)]))
    j = j0_series(math.pi)
    np.testing.assert_allclose(st2.covariance, [[1, j], [j, 1]], atol=1e-10)


def test_assemble_two_taps_block_diagonal():
    vm = DiffusePas.von_mises(1.0, 3.0)
    s = _ula_scenario(4, [TapProfile(1.0, 2.0, Direction(0.5), vm), TapProfile(0.5, 0.0, None, DiffusePas.omni())])
    stats = covariance.assemble(s)
    assert stats.dimension == 8
    assert np.all(stats.covariance[:4, 4:] == 0)
    assert np.all(stats.covariance[4:, :4] == 0)
    assert stats.index_map[5] == (1, 1)
    np.testing.assert_allclose(np.diag(stats.tap_block(1)).real, 0.5, rtol=1e-10)


def test_assemble_local_areas_independent():
    stats = covariance.assemble(_ula_scenario(3, [TapProfile(1.0)], local_areas="per_element"))
    np.testing.assert_allclose(stats.covariance, np.eye(3), atol=1e-14)


@settings(max_examples=15)
@given(st.integers(1, 6), st.floats(0, 10), pas_strategy, st.floats(0, 2 * math.pi), st.floats(0.1, 3))
def test_assemble_invariants_and_power_bookkeeping(M, K, pas, det_az, S):
    pattern = ElementPattern.cos_power(2.0, 0.3)
    s = Scenario(1.0, geometry.build_ula(M, 0.5, pattern=pattern),
                 [TapProfile(S, K, Direction(det_az), pas), TapProfile(1.0)])
    stats = covariance.assemble(s)
    C = stats.covariance
    np.testing.assert_allclose(C, C.conj().T, atol=1e-14)
    d = np.real(np.diag(C))
    assert np.all(np.abs(C) <= np.sqrt(np.outer(d, d)) * (1 + 1e-9) + 1e-15)
    w = np.linalg.eigvalsh(C)
    assert w.min() >= -1e-8 * max(w.max(), 1e-300)
    expected = 0.0
    for n, tap in enumerate(s.taps):
        for e in s.layout.elements:
            g_det = float(e.pattern.gain(det_az)) if tap.K > 0 else 0.0
            t = np.linspace(0, 2 * math.pi, 40001)[:-1]
            mean_diffuse = float(np.mean(e.pattern.gain(t) * tap.diffuse.density(t))) * 2 * math.pi
            expected += tap.S * (tap.deterministic_weight * g_det + tap.diffuse_weight * mean_diffuse)
    assert stats.expected_gain == pytest.approx(expected, rel=2e-3)


def test_correlation_matrix_unit_diagonal():
    stats = covariance.assemble(_ula_scenario(4, [TapProfile(2.0)]))
    np.testing.assert_allclose(np.diag(stats.correlation_matrix()), 1)
