"""Rician AP->RIS->user links, phase alignment and group-level quantities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import i0e, i1e

from .config import ConfigError, SystemConfig


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the cascaded SISO channel.

    ``h[l] = sum_i |f_li||g_li|`` is the real group gain after phase alignment and
    ``p[l] = sum_i f_li exp(j theta_li)`` enters the RIS output power.
    """

    f: np.ndarray
    g: np.ndarray
    theta: np.ndarray
    h: np.ndarray
    p: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.h.shape[0]

    @classmethod
    def from_links(cls, f, g, n_groups, theta=None) -> "ChannelRealization":
        f = np.asarray(f, dtype=complex)
        g = np.asarray(g, dtype=complex)
        if theta is None:
            theta = align_phases(f, g)
        h, p = derive_groups(f, g, theta, n_groups)
        return cls(f=f, g=g, theta=np.asarray(theta, dtype=float), h=h, p=p)


def path_loss(d, v, rho_r):
    """Large-scale gain ``rho_r * d**(-v)`` relative to a 1 m reference."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return rho_r * d ** (-np.asarray(v, dtype=float))


def los_phase(d, wavelength):
    return np.exp(-2j * np.pi * d / wavelength)


def gen_rician_vector(K, rho, d, wavelength, n, rng, size=None):
    """Draw Rician coefficients with deterministic LOS phase ``exp(-j 2 pi d / lambda)``.

    Every entry shares the same LOS term; ``E|x|^2 = rho``. ``size`` overrides the
    output shape (defaults to ``(n,)``).
    """
    if K < 0 or rho <= 0:
        raise ValueError("need K >= 0 and rho > 0")
    shape = (n,) if size is None else size
    los = np.sqrt(K / (1.0 + K)) if np.isfinite(K) else 1.0
    nlos = np.sqrt(1.0 / (1.0 + K)) if np.isfinite(K) else 0.0
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return np.sqrt(rho) * (los * los_phase(d, wavelength) + nlos * z)


def align_phases(f, g):
    """Element phases that make every cascaded term ``f g e^{j theta}`` real nonnegative.

    Entries where either link is exactly zero get theta = 0.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape:
        raise ValueError("f and g must have equal shapes")
    theta = -(np.angle(f) + np.angle(g))
    theta[(f == 0) | (g == 0)] = 0.0
    return theta


def derive_groups(f, g, theta, n_groups):
    """Group gains ``h`` (real) and sums ``p`` over contiguous element blocks."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    n = f.shape[-1]
    if n % n_groups:
        raise ConfigError(f"N={n} is not divisible by L={n_groups}")
    blocks = f.shape[:-1] + (n_groups, n // n_groups)
    h = (np.abs(f) * np.abs(g)).reshape(blocks).sum(axis=-1)
    p = (f * np.exp(1j * np.asarray(theta))).reshape(blocks).sum(axis=-1)
    return h, p


def draw_channel(cfg: SystemConfig, rng) -> ChannelRealization:
    f = gen_rician_vector(cfg.k1, cfg.rho1, cfg.d1, cfg.wavelength, cfg.n_elements, rng)
    g = gen_rician_vector(cfg.k2, cfg.rho2, cfg.d2, cfg.wavelength, cfg.n_elements, rng)
    return ChannelRealization.from_links(f, g, cfg.n_groups)


def bessel_i0(x):
    return i0e(x) * np.exp(np.abs(x))


def bessel_i1(x):
    return i1e(x) * np.exp(np.abs(x))


def rician_abs_mean(K, rho):
    """Closed-form ``E|x|`` of a Rician coefficient with factor K and power rho."""
    x = K / 2.0
    # exp(-K/2) I_n(K/2) == i_ne(K/2), which stays finite for large K
    bracket = (1.0 + K) * i0e(x) + K * i1e(x)
    return 0.5 * np.sqrt(rho * np.pi / (1.0 + K)) * bracket


def rician_phase_coherence(K):
    """``E[cos(phase - LOS phase)]`` of a Rician coefficient (0 for Rayleigh, ->1 as K grows)."""
    x = K / 2.0
    return 0.5 * np.sqrt(np.pi * K) * (i0e(x) + i1e(x))


def h_statistics(cfg: SystemConfig):
    """Mean and variance of one group gain ``h_l`` (sum of N/L magnitude products)."""
    mu_f = rician_abs_mean(cfg.k1, cfg.rho1)
    mu_g = rician_abs_mean(cfg.k2, cfg.rho2)
    mu = cfg.n_bar * mu_f * mu_g
    sigma_sq = cfg.n_bar * (cfg.rho1 * cfg.rho2 - mu_f**2 * mu_g**2)
    return float(mu), float(sigma_sq)


def mean_channel(cfg: SystemConfig) -> ChannelRealization:
    """Deterministic stand-in channel with every quantity at its expectation.

    ``h = mu * 1`` and ``p_l = N_bar E|f| E[e^{-j phase(g)}]``; used to design the
    fixed codebook that theory curves are evaluated on.
    """
    mu, _ = h_statistics(cfg)
    coh = rician_phase_coherence(cfg.k2) * np.conj(los_phase(cfg.d2, cfg.wavelength))
    p_l = cfg.n_bar * rician_abs_mean(cfg.k1, cfg.rho1) * coh
    L = cfg.n_groups
    nan = np.full(cfg.n_elements, np.nan + 0j)
    return ChannelRealization(
        f=nan, g=nan, theta=np.zeros(cfg.n_elements), h=np.full(L, mu), p=np.full(L, p_l, dtype=complex)
    )
