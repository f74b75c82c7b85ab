import numpy as np
import pytest
from hypothesis import given, strategies as st

from adrm.channel import (
    ChannelRealization, align_phases, bessel_i0, bessel_i1, derive_groups, draw_channel,
    gen_rician_vector, h_statistics, mean_channel, path_loss, rician_abs_mean, rician_phase_coherence,
)
from adrm.config import ConfigError, SystemConfig


def _series(nu, x, terms=60):
    # ascending power series of I_nu(x)
    from math import factorial
    return sum((x / 2) ** (2 * k + nu) / (factorial(k) * factorial(k + nu)) for k in range(terms))


@pytest.mark.parametrize("d,v,expected", [(1, 2, 1e-3), (5, 2, 4e-5), (50, 2, 4e-7)])
def test_path_loss_values(d, v, expected):
    assert path_loss(d, v, 1e-3) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_loss_rejects_nonpositive_distance(d):
    with pytest.raises(ValueError):
        path_loss(d, 2, 1e-3)


def test_rician_pure_los_limit(rng):
    x = gen_rician_vector(1e12, 0.3, 7.3, 0.1, 1000, rng)
    target = np.sqrt(0.3) * np.exp(-2j * np.pi * 7.3 / 0.1)
    assert np.max(np.abs(x - target) / np.abs(target)) < 1e-5


def test_rayleigh_mean_magnitude(rng):
    x = gen_rician_vector(0.0, 1.0, 5.0, 0.1, 1_000_000, rng)
    assert np.mean(np.abs(x)) == pytest.approx(np.sqrt(np.pi) / 2, rel=5e-3)


@pytest.mark.parametrize("K", [0.0, 3.0, 10.0])
def test_unit_second_moment(rng, K):
    x = gen_rician_vector(K, 1.0, 5.0, 0.1, 1_000_000, rng)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=1e-2)


def test_rician_rejects_bad_parameters(rng):
    with pytest.raises(ValueError):
        gen_rician_vector(-1, 1.0, 5.0, 0.1, 4, rng)
    with pytest.raises(ValueError):
        gen_rician_vector(1, 0.0, 5.0, 0.1, 4, rng)


def test_align_phases_examples():
    assert np.all(align_phases(np.array([1.0, 2.0]), np.array([0.5, 3.0])) == 0)
    th = align_phases(np.array([np.exp(1j * np.pi / 4)]), np.array([np.exp(1j * np.pi / 4)]))
    assert th[0] == pytest.approx(-np.pi / 2)


def test_align_phases_zero_entry_gets_zero_phase():
    th = align_phases(np.array([0.0, 1j]), np.array([1j, 1j]))
    assert th[0] == 0.0


@given(st.integers(0, 2**32 - 1))
def test_aligned_products_are_real_nonnegative(seed):
    r = np.random.default_rng(seed)
    f = r.standard_normal(64) + 1j * r.standard_normal(64)
    g = r.standard_normal(64) + 1j * r.standard_normal(64)
    prod = f * g * np.exp(1j * align_phases(f, g))
    assert np.max(np.abs(prod.imag)) < 1e-10
    assert np.all(prod.real >= 0)


def test_derive_groups_all_ones():
    h, p = derive_groups(np.ones(8), np.ones(8), np.zeros(8), 2)
    assert np.allclose(h, [4, 4]) and np.allclose(p, [4, 4])


def test_derive_groups_zeroed_group(rng):
    f = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    g = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    f[4:] = 0
    h, p = derive_groups(f, g, align_phases(f, g), 2)
    assert h[1] == 0 and p[1] == 0


def test_derive_groups_matches_direct_sum(rng):
    cfg = SystemConfig()
    ch = draw_channel(cfg, rng)
    direct = np.abs(ch.f * ch.g).reshape(cfg.n_groups, -1).sum(axis=1)
    assert np.allclose(ch.h, direct, rtol=0, atol=1e-12 * direct.max())
    cascade = (ch.f * ch.g * np.exp(1j * ch.theta)).reshape(cfg.n_groups, -1).sum(axis=1)
    assert np.allclose(cascade.real, ch.h, rtol=1e-12) and np.all(ch.h > 0)


def test_derive_groups_rejects_indivisible():
    with pytest.raises(ConfigError):
        derive_groups(np.ones(6), np.ones(6), np.zeros(6), 4)


def test_bessel_matches_series():
    x = np.linspace(0, 25, 101)
    s0 = np.array([_series(0, v) for v in x])
    s1 = np.array([_series(1, v) for v in x])
    assert np.max(np.abs(bessel_i0(x) - s0) / s0) < 1e-10
    nz = x > 0
    assert np.max(np.abs(bessel_i1(x[nz]) - s1[nz]) / s1[nz]) < 1e-10


def test_rician_abs_mean_matches_sampling(rng):
    x = gen_rician_vector(3.0, 2.0, 5.0, 0.1, 1_000_000, rng)
    assert rician_abs_mean(3.0, 2.0) == pytest.approx(np.mean(np.abs(x)), rel=3e-3)


def test_phase_coherence_matches_sampling(rng):
    x = gen_rician_vector(3.0, 1.0, 0.0 + 5.0, 0.1, 1_000_000, rng)
    los = np.exp(-2j * np.pi * 5.0 / 0.1)
    assert rician_phase_coherence(3.0) == pytest.approx(np.mean(np.cos(np.angle(x / los))), abs=3e-3)
    assert rician_phase_coherence(0.0) == 0.0


def test_h_statistics_rayleigh_closed_form():
    cfg = SystemConfig(n_elements=1, n_groups=1, k1=0, k2=0, rho_r=1.0, d1=1.0, d2=1.0)
    mu, s2 = h_statistics(cfg)
    assert mu == pytest.approx(np.pi / 4, rel=1e-12)
    assert s2 == pytest.approx(1 - np.pi**2 / 16, rel=1e-12)


def test_h_statistics_monte_carlo(rng):
    cfg = SystemConfig(n_elements=64, n_groups=1, rho_r=1.0, d1=1.0, d2=1.0)
    f = gen_rician_vector(3, 1.0, 1.0, 0.1, None, rng, size=(100_000, 64))
    g = gen_rician_vector(3, 1.0, 1.0, 0.1, None, rng, size=(100_000, 64))
    h = np.abs(f * g).sum(axis=1)
    mu, s2 = h_statistics(cfg)
    assert h.mean() == pytest.approx(mu, rel=1e-2)
    assert h.var() == pytest.approx(s2, rel=1e-2)


def test_h_statistics_scaling():
    base = SystemConfig()
    mu0, _ = h_statistics(base)
    mu1, _ = h_statistics(base.replace(d1=base.d1 / 2))
    assert mu1 == pytest.approx(2 * mu0, rel=1e-12)


def test_mean_channel_shapes():
    cfg = SystemConfig()
    ch = mean_channel(cfg)
    assert isinstance(ch, ChannelRealization)
    assert ch.h.shape == (4,) and np.allclose(ch.h, h_statistics(cfg)[0])
