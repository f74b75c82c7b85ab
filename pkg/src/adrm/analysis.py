"""Union-bound ABEP and Monte-Carlo mutual information."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, logsumexp

from .config import SystemConfig
from .modem import AapCodebook, Constellation, int_to_bits, noise_variance


@dataclass
class TheoryCurve:
    p_ap_grid: np.ndarray
    abep_bound: np.ndarray
    mi_estimate: np.ndarray | None = None


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def cpep_exact(delta_sq, p_ap, sigma_w_sq):
    return q_function(np.sqrt(p_ap * np.asarray(delta_sq) / (2.0 * sigma_w_sq)))


def cpep_approx(delta_sq, p_ap, sigma_w_sq):
    """Two-exponential approximation of :func:`cpep_exact`."""
    x = p_ap * np.asarray(delta_sq, dtype=float) / sigma_w_sq
    return np.exp(-x / 4.0) / 12.0 + np.exp(-x / 3.0) / 4.0


def mgf_delta(t, beta, mu, sigma_sq):
    """MGF of ``|Delta|^2`` in the one-dimensional form with ``beta = ||c||^2``."""
    t = np.asarray(t, dtype=float)
    beta = np.asarray(beta, dtype=float)
    den = 1.0 - 2.0 * beta * sigma_sq * t
    return np.exp(mu**2 * beta * t / den) / np.sqrt(den)


def mgf_delta_gaussian(t, c, mu, sigma_sq):
    """Exact MGF of ``|sum_l h_l c_l|^2`` for i.i.d. ``h_l ~ N(mu, sigma_sq)``.

    ``c`` holds complex difference vectors along its last axis. The real pair
    (Re, Im) of ``Delta`` is Gaussian with mean ``mu * sum(c)`` and covariance
    ``sigma_sq * sum_l v_l v_l^T``; the MGF is the product over the two
    eigen-directions of the noncentral chi-square terms.
    """
    c = np.asarray(c, dtype=complex)
    t = np.asarray(t, dtype=float)[..., None]
    v = np.stack([c.real, c.imag], axis=-1)            # (..., L, 2)
    cov = sigma_sq * np.einsum("...li,...lj->...ij", v, v)
    mean = mu * v.sum(axis=-2)                         # (..., 2)
    lam, vec = np.linalg.eigh(cov)
    proj = np.einsum("...ij,...i->...j", vec, mean)
    den = 1.0 - 2.0 * lam * t
    return np.prod(np.exp(t * proj**2 / den) / np.sqrt(den), axis=-1)


def _pair_arrays(codebook: AapCodebook, constellation: Constellation):
    """Ordered pairs of codewords (including identical pairs) in ``k * M + m`` order."""
    A, M = codebook.order, constellation.order
    x = (codebook.a[:, :, None] * constellation.points[None, None, :]).reshape(codebook.n_groups, A * M).T
    q, qh = np.meshgrid(np.arange(A * M), np.arange(A * M), indexing="ij")
    return x, q.ravel(), qh.ravel()


def hamming(q, qh, M, A):
    """Bit distance between codeword indices ``q = k * M + m`` and ``qh``."""
    q = np.asarray(q, dtype=np.int64)
    qh = np.asarray(qh, dtype=np.int64)
    diff = ((q % M) ^ (qh % M)) * A + ((q // M) ^ (qh // M))
    n_bits = int(np.log2(M)) + int(np.log2(A))
    return int_to_bits(diff, n_bits).sum(axis=-1).astype(np.int64)


def upep(pair, codebook: AapCodebook, constellation: Constellation, cfg: SystemConfig, h_stats,
         mgf="gaussian"):
    """Unconditional PEP of ``(m, k) -> (m_hat, k_hat)`` averaged over the group gains.

    ``pair = ((m, k), (m_hat, k_hat))``; noise power uses the transmitted column.
    ``mgf="gaussian"`` averages with the exact two-dimensional Gaussian MGF,
    ``mgf="scalar"`` with the one-dimensional ``beta = ||c||^2`` form, which is
    exact only for L = 1 and otherwise looser.
    """
    (m, k), (mh, kh) = pair
    c = codebook.column(k) * constellation.points[m] - codebook.column(kh) * constellation.points[mh]
    var = float(noise_variance(codebook.column(k), cfg))
    return float(_upep_from_diffs(c[None, :], np.array([var]), cfg.p_ap, h_stats, mgf)[0])


def _upep_from_diffs(c, var, p_ap, h_stats, mgf):
    mu, sigma_sq = h_stats
    t1 = -p_ap / (4.0 * var)
    t2 = -p_ap / (3.0 * var)
    if mgf == "scalar":
        beta = np.sum(np.abs(c) ** 2, axis=-1)
        f = lambda t: mgf_delta(t, beta, mu, sigma_sq)
    elif mgf == "gaussian":
        f = lambda t: mgf_delta_gaussian(t, c, mu, sigma_sq)
    else:
        raise ValueError(f"unknown mgf form {mgf!r}")
    return f(t1) / 12.0 + f(t2) / 4.0


def abep_bound(codebook: AapCodebook, constellation: Constellation, cfg: SystemConfig, h_stats,
               mgf="gaussian", clip=True):
    """Hamming-weighted union bound over all ordered codeword pairs, divided by ``R 2^R``."""
    A, M = codebook.order, constellation.order
    R = int(np.log2(A)) + int(np.log2(M))
    x, q, qh = _pair_arrays(codebook, constellation)
    keep = q != qh
    q, qh = q[keep], qh[keep]
    weights = hamming(q, qh, M, A)
    var = noise_variance(codebook.a, cfg)[q // M]
    pep = _upep_from_diffs(x[q] - x[qh], var, cfg.p_ap, h_stats, mgf)
    value = float(np.sum(weights * pep) / (R * 2**R))
    return min(value, 1.0) if clip else value


def standard_noise(n_codewords, n_samples, rng):
    """Standard complex normal draws, one row per transmitted codeword."""
    shape = (n_codewords, n_samples)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _mi_terms(h, codebook, constellation, cfg, noise):
    """Per-noise-sample ``log2 sum_xh exp(-d)`` averaged over transmitted codewords."""
    A, M = codebook.order, constellation.order
    x = np.sqrt(cfg.p_ap) * np.outer(codebook.gains(h), constellation.points).ravel()
    var = noise_variance(codebook.a, cfg)[np.arange(A * M) // M]
    w = noise * np.sqrt(var)[:, None]                       # (Q, n)
    diff = x[:, None] - x[None, :]                          # (Q, Qh)
    d = (np.abs(diff[:, :, None] + w[:, None, :]) ** 2 - np.abs(w[:, None, :]) ** 2) / var[:, None, None]
    return (logsumexp(-d, axis=1) / np.log(2.0)).mean(axis=0)


def mi_estimate(h, codebook: AapCodebook, constellation: Constellation, cfg: SystemConfig,
                n_noise_samples=10_000, rng=None, noise=None):
    """Monte-Carlo mutual information in bits per channel use for a fixed channel.

    ``noise`` may supply :func:`standard_noise` draws so that a sweep over
    ``P_AP`` reuses the same samples.
    """
    R = int(np.log2(codebook.order)) + constellation.bits_per_symbol
    if noise is None:
        if rng is None:
            raise ValueError("need rng or noise samples")
        noise = standard_noise(codebook.order * constellation.order, n_noise_samples, rng)
    return float(R - _mi_terms(h, codebook, constellation, cfg, noise).mean())


def mi_standard_error(h, codebook, constellation, cfg, noise):
    terms = _mi_terms(h, codebook, constellation, cfg, noise)
    return float(terms.std(ddof=1) / np.sqrt(terms.size))


def relative_snr_p_ap(rel_snr, h, codebook: AapCodebook, constellation: Constellation,
                      cfg: SystemConfig) -> float:
    """``P_AP`` giving mean received SNR ``rel_snr`` (linear) over all codewords.

    The SNR of codeword (m, k) is ``P |h^T a_k s_m|^2 / sigma_w^2(a_k)``; the
    noise power does not depend on ``P`` so the average is linear in it.
    """
    gains = np.abs(codebook.gains(h)) ** 2
    var = noise_variance(codebook.a, cfg)
    unit = np.mean(gains / var) * np.mean(np.abs(constellation.points) ** 2)
    return float(rel_snr / unit)


def theory_curve(cfg: SystemConfig, constellation: Constellation, grid, design, mgf="gaussian",
                 mi_samples=None, rng=None) -> TheoryCurve:
    """ABEP bound (and optionally MI on the mean channel) at every grid power.

    ``design(cfg_i)`` returns the codebook to evaluate at ``cfg_i``. MI shares one
    set of standard-normal noise draws across the grid.
    """
    from .channel import h_statistics, mean_channel

    stats = h_statistics(cfg)
    bounds, mis = [], []
    noise = None
    for p in grid:
        cfg_i = cfg.replace(p_ap=float(p))
        cb = design(cfg_i)
        bounds.append(abep_bound(cb, constellation, cfg_i, stats, mgf=mgf))
        if mi_samples:
            q = cb.order * constellation.order
            if noise is None:
                noise = standard_noise(q, mi_samples, rng)
            mis.append(mi_estimate(mean_channel(cfg_i).h, cb, constellation, cfg_i, noise=noise))
    return TheoryCurve(np.asarray(grid, dtype=float), np.asarray(bounds),
                       np.asarray(mis) if mi_samples else None)
