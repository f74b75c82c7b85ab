"""Bit mapping, signal synthesis, equivalent noise and joint ML detection.

Indices are zero-based throughout: symbol ``m`` in ``0..M-1`` and AAP column
``k`` in ``0..A-1``. The first ``log2 M`` bits of a word select the symbol and
the remaining ``log2 A`` bits the column, both read big-endian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .config import ConfigError, SystemConfig, is_power_of_two


def rate(M: int, A: int, nt: int = 1) -> int:
    if not (is_power_of_two(M) and is_power_of_two(A)):
        raise ConfigError("M and A must be powers of two")
    return nt * int(np.log2(M)) + int(np.log2(A))


def _inverse_gray(u):
    u = np.asarray(u, dtype=np.int64).copy()
    shift = u >> 1
    while np.any(shift):
        u ^= shift
        shift >>= 1
    return u


def int_to_bits(values, n_bits: int) -> np.ndarray:
    """Big-endian bit expansion; output shape ``values.shape + (n_bits,)``."""
    values = np.asarray(values, dtype=np.int64)
    if n_bits == 0:
        return np.zeros(values.shape + (0,), dtype=np.uint8)
    shifts = np.arange(n_bits - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    n_bits = bits.shape[-1]
    if n_bits == 0:
        return np.zeros(bits.shape[:-1], dtype=np.int64)
    weights = 1 << np.arange(n_bits - 1, -1, -1)
    return bits @ weights


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power QAM points; ``points[m]`` carries the bit label ``bits(m)``."""

    points: np.ndarray

    @property
    def order(self) -> int:
        return self.points.shape[0]

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def bit_labels(self) -> np.ndarray:
        return int_to_bits(np.arange(self.order), self.bits_per_symbol)

    @property
    def rotational_symmetry(self) -> int:
        """Largest n in {4, 2, 1} such that rotating by 2 pi / n maps the set onto itself."""
        for n in (4, 2):
            rotated = self.points * np.exp(2j * np.pi / n)
            d = np.abs(rotated[:, None] - self.points[None, :]).min(axis=1)
            if np.all(d < 1e-9):
                return n
        return 1


def qam(M: int) -> Constellation:
    """Gray-labelled square (or rectangular, for odd ``log2 M``) QAM.

    ``M = 2`` gives BPSK on the real axis and ``M = 1`` the single point 1.
    """
    if not is_power_of_two(M):
        raise ConfigError(f"M={M} is not a power of two")
    if M == 1:
        return Constellation(np.ones(1, dtype=complex))
    k = int(np.log2(M))
    k_i, k_q = (k + 1) // 2, k // 2
    labels = np.arange(M)
    u_i = labels >> k_q
    u_q = labels & ((1 << k_q) - 1)
    lev_i = 2 * _inverse_gray(u_i) - ((1 << k_i) - 1)
    lev_q = 2 * _inverse_gray(u_q) - ((1 << k_q) - 1)
    pts = lev_i + 1j * lev_q
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return Constellation(pts.astype(complex))


@dataclass(frozen=True)
class AapCodebook:
    """L x A matrix of per-group amplification gains; column k is one pattern."""

    a: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        object.__setattr__(self, "a", a)

    @property
    def n_groups(self) -> int:
        return self.a.shape[0]

    @property
    def order(self) -> int:
        return self.a.shape[1]

    def column(self, k: int) -> np.ndarray:
        return self.a[:, k]

    def gains(self, h) -> np.ndarray:
        """Effective scalar gain ``h^T a_k`` of every column."""
        return np.asarray(h) @ self.a

    def to_text(self) -> str:
        lines = [f"{self.n_groups} {self.order}"]
        lines += [" ".join(f"{v:.17g}" for v in row) for row in self.a]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "AapCodebook":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip() and not ln.startswith("#")]
        L, A = (int(v) for v in rows[0])
        a = np.array([[float(v) for v in r] for r in rows[1:]])
        if a.shape != (L, A):
            raise ValueError(f"codebook header says {L}x{A} but body is {a.shape}")
        return cls(a)


@dataclass(frozen=True)
class TxFrame:
    sym_index: int
    aap_index: int
    bits: np.ndarray


def split_bits(bits, M: int, A: int):
    """Vectorized word -> (m, k); ``bits`` has shape ``(..., log2 M + log2 A)``."""
    bits = np.asarray(bits)
    b1 = int(np.log2(M))
    if bits.shape[-1] != b1 + int(np.log2(A)):
        raise ValueError(f"expected words of {rate(M, A)} bits, got {bits.shape[-1]}")
    return bits_to_int(bits[..., :b1]), bits_to_int(bits[..., b1:])


def join_bits(m, k, M: int, A: int) -> np.ndarray:
    return np.concatenate(
        [int_to_bits(m, int(np.log2(M))), int_to_bits(k, int(np.log2(A)))], axis=-1
    )


def map_bits(bits, constellation: Constellation, codebook: AapCodebook) -> TxFrame:
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    m, k = split_bits(bits, constellation.order, codebook.order)
    return TxFrame(int(m), int(k), bits)


def noise_variance(a, cfg: SystemConfig):
    """Equivalent noise power ``N rho2 sigma_r^2 sum_l a_l^2 / L + sigma_0^2``.

    ``a`` may be one column (L,) or a whole codebook matrix (L, A).
    """
    a = np.asarray(a, dtype=float)
    return cfg.n_elements * cfg.rho2 * cfg.sigma_r_sq * np.sum(a**2, axis=0) / cfg.n_groups + cfg.sigma_0_sq


def _complex_normal(rng, shape, var):
    return np.sqrt(np.asarray(var) / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def physical_noise(a, cfg: SystemConfig, rng, size: int, g=None, g_block: int = 64,
                   elementwise: bool = False, chunk: int = 8192):
    """RIS-forwarded noise ``sum_{l,i} a_l |g_li| e^{-j phase(g_li)} n_r,li`` plus user noise.

    ``g=None`` draws a fresh element-wise RIS->user channel for every block of
    ``g_block`` samples, so the sample variance targets the channel-averaged
    value. Given ``g`` the forwarded term is a sum of independent circular
    Gaussians, which is drawn exactly as ``CN(0, sigma_r^2 sum a_i^2 |g_i|^2)``;
    ``elementwise=True`` instead draws every ``n_r,li`` and sums explicitly.
    """
    from .channel import gen_rician_vector

    a = np.asarray(a, dtype=float)
    amp = np.repeat(a, cfg.n_bar)
    out = np.empty(size, dtype=complex)
    block = 1 if elementwise else g_block
    for start in range(0, size, chunk):
        n = min(chunk, size - start)
        if g is None:
            n_g = -(-n // block)
            gg = gen_rician_vector(cfg.k2, cfg.rho2, cfg.d2, cfg.wavelength, None, rng, size=(n_g, cfg.n_elements))
        else:
            gg = np.asarray(g)[None, :]
        if elementwise:
            gg = np.broadcast_to(gg, (n, cfg.n_elements))
            coef = amp * np.abs(gg) * np.exp(-1j * np.angle(gg))
            n_r = _complex_normal(rng, (n, cfg.n_elements), cfg.sigma_r_sq)
            fwd = np.sum(coef * n_r, axis=1)
        else:
            var_g = cfg.sigma_r_sq * np.sum((amp * np.abs(gg)) ** 2, axis=1)
            var_g = np.repeat(var_g, block)[:n] if g is None else np.full(n, var_g[0])
            fwd = _complex_normal(rng, n, var_g)
        out[start:start + n] = fwd + _complex_normal(rng, n, cfg.sigma_0_sq)
    return out


def draw_noise(a, cfg: SystemConfig, rng, size=None, mode: str = "clt", g=None):
    """Sample the equivalent noise ``w`` for AAP column ``a``; returns ``(w, sigma_w^2)``."""
    var = float(noise_variance(a, cfg))
    n = 1 if size is None else size
    if mode == "clt":
        w = _complex_normal(rng, n, var)
    elif mode == "physical":
        w = physical_noise(a, cfg, rng, n, g=g)
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    return (w[0] if size is None else w), var


def codewords(gains, constellation: Constellation, p_ap: float) -> np.ndarray:
    """All noiseless received points, ordered k-major: index ``k * M + m``."""
    return np.sqrt(p_ap) * np.outer(np.asarray(gains), constellation.points).ravel()


def transmit(m, k, channel: ChannelRealization, codebook: AapCodebook, constellation: Constellation,
             cfg: SystemConfig, rng, noise_mode: str = "clt"):
    """Vectorized group-level synthesis ``y = sqrt(P) h^T a_k s_m + w``."""
    m = np.asarray(m)
    k = np.asarray(k)
    gains = codebook.gains(channel.h)
    y = np.sqrt(cfg.p_ap) * gains[k] * constellation.points[m]
    var = noise_variance(codebook.a, cfg)[k]
    if noise_mode == "clt":
        return y + _complex_normal(rng, y.shape, var)
    if noise_mode == "physical":
        w = np.empty(y.shape, dtype=complex)
        for kk in np.unique(k):
            sel = k == kk
            w[sel] = physical_noise(codebook.column(kk), cfg, rng, int(sel.sum()), g=channel.g)
        return y + w
    raise ValueError(f"unknown noise mode {noise_mode!r}")


def tx_rx(frame: TxFrame, channel, codebook, constellation, cfg, rng, noise_mode="clt"):
    y = transmit(np.array([frame.sym_index]), np.array([frame.aap_index]), channel, codebook,
                 constellation, cfg, rng, noise_mode)
    return complex(y[0])


def synthesize_elementwise(m, k, channel: ChannelRealization, codebook: AapCodebook,
                           constellation: Constellation, cfg: SystemConfig) -> complex:
    """Noiseless received signal summed element by element with explicit phases."""
    amp = np.repeat(codebook.column(k), cfg.n_bar)
    cascade = np.sum(amp * channel.f * channel.g * np.exp(1j * channel.theta))
    return np.sqrt(cfg.p_ap) * cascade * constellation.points[m]


def ml_detect(y, gains, constellation: Constellation, p_ap: float):
    """Joint ML detection over all ``A * M`` hypotheses.

    ``gains`` are the detector's view of ``h^T a_k`` (possibly from an imperfect
    channel estimate). Ties resolve to the smallest k, then the smallest m.
    Returns integer arrays ``(m_hat, k_hat)``.
    """
    y = np.atleast_1d(np.asarray(y))
    cands = codewords(gains, constellation, p_ap)
    idx = np.empty(y.shape[0], dtype=np.int64)
    step = max(1, 2**22 // cands.size)
    for s in range(0, y.shape[0], step):
        blk = y[s:s + step, None] - cands[None, :]
        idx[s:s + step] = np.argmin(blk.real**2 + blk.imag**2, axis=1)
    M = constellation.order
    return idx % M, idx // M
