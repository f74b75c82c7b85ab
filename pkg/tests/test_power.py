import numpy as np
import pytest
from hypothesis import given, strategies as st

from adrm.channel import draw_channel
from adrm.codebook import design_codebook_sca
from adrm.config import SystemConfig
from adrm.modem import qam
from adrm.power import power_matrix, ris_output_power, total_power, uniform_alpha


def test_worked_example():
    cfg = SystemConfig(p_ap=1.0, sigma_r_sq=0.01)
    assert ris_output_power([0.8, 0.6], [4, 4], cfg) == pytest.approx(31.37, rel=1e-12)


def test_trivial_cases():
    cfg = SystemConfig(p_ap=0.0, sigma_r_sq=0.5)
    assert ris_output_power([1.0, 2.0], [3, 4j], cfg) == pytest.approx(2.5)
    assert ris_output_power(np.zeros(3), [1, 2, 3], SystemConfig()) == 0.0


@given(st.lists(st.floats(0, 10), min_size=1, max_size=6), st.integers(0, 2**31))
def test_power_matrix_quadratic_form(a, seed):
    rng = np.random.default_rng(seed)
    a = np.asarray(a)
    p = rng.standard_normal(a.size) + 1j * rng.standard_normal(a.size)
    cfg = SystemConfig(p_ap=0.3, sigma_r_sq=0.2)
    F = power_matrix(p, cfg)
    assert np.allclose(F, F.T)
    assert a @ F @ a == pytest.approx(ris_output_power(a, p, cfg), rel=1e-10, abs=1e-12)


def test_total_power_components():
    cfg = SystemConfig(p_ap=0.0, sigma_r_sq=0.0)
    br = total_power(cfg, np.ones(4), np.ones(4), p_c=0.01)
    assert br.total == pytest.approx(cfg.n_elements * 0.01)
    cfg = SystemConfig(p_ap=0.1)
    a, p = np.array([2.0, 3.0]), np.array([1 + 1j, 0.5])
    active = total_power(cfg, a, p, 0.01)
    passive = total_power(cfg, a, p, 0.01, passive=True)
    assert passive.total == pytest.approx(active.total - active.p_a_out)
    assert active.total == pytest.approx(active.p_ap + active.p_a_out + active.p_circuit)
    assert min(active.p_ap, active.p_a_out, active.p_circuit) >= 0


def test_uniform_alpha_cases():
    assert uniform_alpha(np.ones(4), SystemConfig(p_a=1e9)) == 10.0
    cfg = SystemConfig(sigma_r_sq=0.0, p_ap=2.0, p_a=2.0)
    assert uniform_alpha(np.array([0.6, 0.8j * 0 + 0.4]), cfg) == pytest.approx(1.0)


@given(st.integers(0, 2**31), st.floats(-40, 10))
def test_uniform_alpha_feasible(seed, p_dbm):
    rng = np.random.default_rng(seed)
    cfg = SystemConfig(p_ap=10 ** (p_dbm / 10) / 1000)
    p = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) * 1e2
    alpha = uniform_alpha(p, cfg)
    assert ris_output_power(np.full(4, alpha), p, cfg) <= cfg.p_a * (1 + 1e-9)


def test_designed_columns_within_budget(rng):
    cfg = SystemConfig(p_ap=10 ** (5 / 10) / 1000)
    ch = draw_channel(cfg, rng)
    cb, _ = design_codebook_sca(ch, qam(4), cfg)
    for k in range(cb.order):
        assert ris_output_power(cb.column(k), ch.p, cfg) <= cfg.p_a * (1 + 1e-9)
