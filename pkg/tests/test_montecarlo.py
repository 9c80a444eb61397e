from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrcstat import covariance, geometry, gqf, montecarlo
from mrcstat.errors import InputError
from mrcstat.geometry import Direction, ElementPattern
from mrcstat.montecarlo import SimConfig
from mrcstat.spectra import DiffusePas, Scenario, TapProfile

from oracles import gamma_cdf, j0_series, kolmogorov_critical


def _ula(M, taps, spacing=0.5, **kw):
    return Scenario(1.0, geometry.build_ula(M, spacing, **kw), taps)


def test_config_validation():
    with pytest.raises(InputError):
        SimConfig(trials=0)
    with pytest.raises(InputError):
        SimConfig(waves=0)
    with pytest.raises(InputError):
        SimConfig(seed=-1)
    with pytest.raises(InputError):
        SimConfig(mode="bogus")


def test_pure_deterministic_channel():
    s = _ula(4, [TapProfile(1.0, math.inf, Direction.from_degrees(40), None)])
    h = montecarlo.draw_channel(s, SimConfig(trials=1), 0)
    np.testing.assert_allclose(np.abs(h), 1, rtol=1e-14)
    expected = [2 * math.pi * x * math.cos(math.radians(40)) for x in s.layout.positions[:, 0]]
    np.testing.assert_allclose(h, np.exp(1j * np.array(expected)), atol=1e-13)


def test_rayleigh_variance():
    s = _ula(1, [TapProfile(1.0)])
    h = montecarlo.simulate_channels(s, SimConfig(trials=100_000, waves=800, seed=3))[:, 0]
    sigma = covariance.assemble(s).covariance[0, 0].real
    assert np.mean(np.abs(h) ** 2) == pytest.approx(sigma, rel=0.02)


def _sample_corr(h):
    h = h - h.mean(axis=0)
    c = h.conj().T @ h / h.shape[0]
    d = np.sqrt(np.real(np.diag(c)))
    return c / np.outer(d, d)


def test_shared_waves_pair_correlation():
    s = _ula(2, [TapProfile(1.0)])
    h = montecarlo.simulate_channels(s, SimConfig(trials=100_000, waves=800, seed=11))
    rho = _sample_corr(h)[0, 1]
    assert rho.real == pytest.approx(j0_series(math.pi), abs=0.02)
    assert abs(rho.imag) < 0.02


def test_independent_mode_uncorrelated():
    s = _ula(3, [TapProfile(1.0)], spacing=0.1)
    h = montecarlo.simulate_channels(s, SimConfig(trials=100_000, waves=50, seed=2, mode="independent"))
    rho = _sample_corr(h)
    off = np.abs(rho[np.triu_indices(3, 1)])
    assert np.all(off < 0.02)


def test_effective_gain_examples():
    assert montecarlo.effective_gain(np.zeros(3)) == 0
    assert montecarlo.effective_gain(np.ones(5)) == 5
    assert montecarlo.effective_gain([3, 4j]) == 25


def test_run_examples_and_determinism():
    s = _ula(4, [TapProfile(1.0, 2.0, Direction(0.3), DiffusePas.von_mises(1.0, 4.0))])
    one = montecarlo.run(s, SimConfig(trials=1, waves=20))
    assert len(one) == 1
    a = montecarlo.run(s, SimConfig(trials=300, waves=20, seed=9))
    b = montecarlo.run(s, SimConfig(trials=300, waves=20, seed=9))
    assert a.fingerprint() == b.fingerprint()
    assert np.all(np.diff(a.samples) >= 0)
    assert a.digest == s.digest()
    c = montecarlo.run(s, SimConfig(trials=300, waves=20, seed=10))
    assert a.fingerprint() != c.fingerprint()


def test_bitwise_independent_of_threads_and_blocking(monkeypatch):
    s = _ula(8, [TapProfile(1.0, 1.0, Direction(0.2), DiffusePas.sector(0.5, 1.0)), TapProfile(0.5)])
    cfg = SimConfig(trials=200, waves=30, seed=5)
    ref = montecarlo.simulate_channels(s, cfg)
    for threads in (1, 2, 3):
        out = montecarlo.simulate_channels(s, SimConfig(200, 30, 5, threads=threads))
        assert out.tobytes() == ref.tobytes()
    monkeypatch.setattr(montecarlo, "BLOCK_WAVES", 700)
    assert montecarlo.simulate_channels(s, cfg).tobytes() == ref.tobytes()
    monkeypatch.setenv("GQF_THREADS", "2")
    assert montecarlo.simulate_channels(s, cfg).tobytes() == ref.tobytes()
    single = montecarlo.draw_channel(s, cfg, 17)
    assert single.tobytes() == ref[17].tobytes()


def test_uncorrelated_rician_mean():
    s = _ula(32, [TapProfile(1.0, 4.0, Direction.from_degrees(70), DiffusePas.omni())], local_areas="per_element")
    expected = covariance.assemble(s).expected_gain
    samples = montecarlo.run(s, SimConfig(trials=20_000, waves=200, seed=1))
    assert samples.mean == pytest.approx(expected, rel=0.01)


def test_moments_match_quadratic_form():
    pattern = ElementPattern.cos_power(2.0, 0.5)
    s = _ula(6, [TapProfile(1.0, 1.5, Direction(0.4), DiffusePas.von_mises(0.8, 3.0))], pattern=pattern)
    d = gqf.decompose(covariance.assemble(s))
    q = montecarlo.run(s, SimConfig(trials=40_000, waves=400, seed=4)).samples
    assert np.mean(q) == pytest.approx(d.mean, rel=0.01)
    assert np.var(q) == pytest.approx(d.variance, rel=0.05)


def test_ecdf_examples():
    q = [3.0, 1.0, 2.0]
    assert montecarlo.ecdf(q, 0.5) == 0
    assert montecarlo.ecdf(q, 4.0) == 1
    assert montecarlo.ecdf(q, 2.0) == pytest.approx(2 / 3)
    np.testing.assert_allclose(montecarlo.ecdf(q, [1.0, 2.5]), [1 / 3, 2 / 3])


def test_ks_examples():
    q = np.array([1.0, 2.0, 3.0, 4.0])
    own = lambda x: montecarlo.ecdf(q, x)
    # the ECDF itself differs from its own step only by the step side
    assert montecarlo.ks_distance(q, own) == pytest.approx(0.25)
    assert montecarlo.ks_distance([1.0], lambda x: np.full_like(x, 0.5)) == pytest.approx(0.5)


@given(st.lists(st.floats(0.01, 100), min_size=1, max_size=50))
def test_ks_bounds(values):
    ks = montecarlo.ks_distance(values, lambda x: 1 - np.exp(-np.asarray(x)))
    assert 0 <= ks <= 1


def test_exponential_ks():
    s = _ula(1, [TapProfile(1.0)])
    samples = montecarlo.run(s, SimConfig(trials=100_000, waves=1, seed=21))
    ks = montecarlo.ks_distance(samples, lambda x: 1 - np.exp(-x))
    assert ks < 0.0061
    assert kolmogorov_critical(100_000, 0.99) == pytest.approx(0.00515, abs=5e-5)


def test_uncorrelated_matches_gamma():
    s = _ula(32, [TapProfile(1.0)], local_areas="per_element")
    samples = montecarlo.run(s, SimConfig(trials=20_000, waves=1, seed=8))
    ks = montecarlo.ks_distance(samples, lambda x: np.array([gamma_cdf(32, v) for v in np.atleast_1d(x)]))
    assert ks < 2 * kolmogorov_critical(20_000, 0.99)
