"""Benchmark reflection-modulation schemes with uniform amplification.

Every scheme, ADRM included, is described to the simulator as a
:class:`PatternSet`: per-group amplitudes and unit-modulus offsets for each of
its ``A`` index patterns. The effective scalar gain of pattern k on group sums
``h`` is ``sum_l h_l amp[l, k] offset[l, k]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from math import comb

import numpy as np

from .channel import ChannelRealization
from .config import ConfigError, SystemConfig
from .modem import AapCodebook, Constellation, rate

SCHEMES = ("pdrm", "im", "srpm")


@dataclass(frozen=True)
class PatternSet:
    amp: np.ndarray
    offset: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.amp.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return self.amp * self.offset

    def gains(self, h) -> np.ndarray:
        return np.asarray(h) @ self.weights

    @classmethod
    def from_codebook(cls, codebook: AapCodebook, **info) -> "PatternSet":
        return cls(codebook.a.copy(), np.ones(codebook.a.shape, dtype=complex), dict(info))


def pdrm_patterns(n_groups: int, order: int) -> np.ndarray:
    """First ``order`` sign patterns of {0, pi}^L in lexicographic order, as unit factors (L x A)."""
    if order > 2**n_groups:
        raise ConfigError(f"PDRM with L={n_groups} supports at most {2**n_groups} patterns")
    pats = np.array(list(product((0, 1), repeat=n_groups))[:order]).T
    return np.where(pats == 1, -1.0, 1.0).astype(complex)


def im_patterns(n_groups: int, n_active: int) -> np.ndarray:
    """ON/OFF masks (L x A) for the first ``2^floor(log2 C(L, L_a))`` combinations."""
    if not 1 <= n_active <= n_groups:
        raise ConfigError(f"need 1 <= L_a <= L, got L_a={n_active}, L={n_groups}")
    count = 2 ** int(np.floor(np.log2(comb(n_groups, n_active))))
    masks = np.zeros((n_groups, count))
    for k, on in enumerate(list(combinations(range(n_groups), n_active))[:count]):
        masks[list(on), k] = 1.0
    return masks


def srpm_offsets(order: int, symmetry: int = 1) -> np.ndarray:
    """Common phase rotations ``2 pi k / (order * symmetry)``.

    With ``symmetry`` equal to the constellation's rotational symmetry the rotated
    copies never coincide.
    """
    return np.exp(2j * np.pi * np.arange(order) / (order * symmetry))


def pattern_alpha(p, masks, offsets, cfg: SystemConfig) -> float:
    """Largest common gain keeping every pattern within the output budget."""
    p = np.asarray(p, dtype=complex)
    coherent = np.abs(np.conj(p) @ (masks * offsets)) ** 2
    denom = cfg.p_ap * coherent + cfg.sigma_r_sq * np.sum(masks**2, axis=0)
    alpha = np.sqrt(cfg.p_a / np.where(denom > 0, denom, np.inf))
    return float(min(cfg.alpha_max, alpha.min()))


@dataclass(frozen=True)
class BaselineScheme:
    """``kind`` in {"pdrm", "im", "srpm"}; ``order`` is the index-pattern count."""

    kind: str
    n_groups: int
    mod_order: int
    order: int
    n_active: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ConfigError(f"unknown baseline {self.kind!r}; choose from {SCHEMES}")
        if self.kind == "im":
            if self.n_active is None:
                raise ConfigError("IM needs n_active")
            im_patterns(self.n_groups, self.n_active)
        elif self.kind == "pdrm":
            pdrm_patterns(self.n_groups, self.order)

    @classmethod
    def matching(cls, kind: str, cfg: SystemConfig, n_active=None) -> "BaselineScheme":
        """Scheme with the same index-bit count as an ADRM codebook of order A."""
        if kind == "im":
            if n_active is None:
                n_active = cfg.n_groups // 2
            count = 2 ** int(np.floor(np.log2(comb(cfg.n_groups, n_active))))
            return cls(kind, cfg.n_groups, cfg.mod_order, count, n_active)
        return cls(kind, cfg.n_groups, cfg.mod_order, cfg.codebook_order)

    @property
    def rate(self) -> int:
        return rate(self.mod_order, self.order)

    @property
    def name(self) -> str:
        return {"pdrm": "ARIS-PDRM", "im": "ARIS-IM", "srpm": "ARIS-SRPM"}[self.kind]

    def describe(self) -> dict:
        d = {"scheme": self.kind, "L": self.n_groups, "M": self.mod_order, "A": self.order}
        if self.kind == "im":
            d["L_a"] = self.n_active
        return d

    def patterns(self, channel: ChannelRealization, cfg: SystemConfig, constellation: Constellation) -> PatternSet:
        L = self.n_groups
        if self.kind == "pdrm":
            masks = np.ones((L, self.order))
            offsets = pdrm_patterns(L, self.order)
        elif self.kind == "im":
            masks = im_patterns(L, self.n_active)
            offsets = np.ones((L, self.order), dtype=complex)
        else:
            masks = np.ones((L, self.order))
            offsets = np.tile(srpm_offsets(self.order, constellation.rotational_symmetry), (L, 1))
        alpha = pattern_alpha(channel.p, masks, offsets, cfg)
        return PatternSet(alpha * masks, offsets, {"alpha": alpha})


def pdrm_codeword(k: int, channel: ChannelRealization, cfg: SystemConfig, order: int | None = None) -> complex:
    """Effective gain of PDRM pattern ``k`` (zero-based)."""
    order = cfg.codebook_order if order is None else order
    scheme = BaselineScheme("pdrm", cfg.n_groups, cfg.mod_order, order)
    ps = scheme.patterns(channel, cfg, Constellation(np.ones(1, dtype=complex)))
    return complex(ps.gains(channel.h)[k])


def im_codeword(k: int, channel: ChannelRealization, cfg: SystemConfig, n_active: int) -> complex:
    scheme = BaselineScheme.matching("im", cfg, n_active)
    ps = scheme.patterns(channel, cfg, Constellation(np.ones(1, dtype=complex)))
    return complex(ps.gains(channel.h)[k])


def srpm_codeword(k: int, channel: ChannelRealization, cfg: SystemConfig, constellation: Constellation,
                  order: int | None = None) -> complex:
    order = cfg.codebook_order if order is None else order
    scheme = BaselineScheme("srpm", cfg.n_groups, cfg.mod_order, order)
    ps = scheme.patterns(channel, cfg, constellation)
    return complex(ps.gains(channel.h)[k])


def baseline_ber(scheme: BaselineScheme, cfg: SystemConfig, sweep, workers: int = 1):
    """BER curve of a benchmark scheme; refuses when its rate differs from ``cfg.rate``."""
    if scheme.rate != cfg.rate:
        raise ConfigError(
            f"{scheme.name} carries {scheme.rate} bpcu but the ADRM configuration carries {cfg.rate}; "
            "adjust n_active or codebook_order for a fair comparison"
        )
    from .engine import run_ber_sweep

    return run_ber_sweep(cfg, sweep, scheme, workers=workers)
