"""Active-RIS power accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


@dataclass(frozen=True)
class PowerBreakdown:
    p_ap: float
    p_a_out: float
    p_circuit: float

    @property
    def total(self) -> float:
        return self.p_ap + self.p_a_out + self.p_circuit


def ris_output_power(a, p, cfg: SystemConfig) -> float:
    """``P_AP |p^H a|^2 + sigma_r^2 ||a||^2`` for one column; complex ``a`` carries phase offsets."""
    a = np.asarray(a)
    return float(cfg.p_ap * np.abs(np.vdot(p, a)) ** 2 + cfg.sigma_r_sq * np.vdot(a, a).real)


def power_matrix(p, cfg: SystemConfig) -> np.ndarray:
    """Real symmetric F with ``a^T F a == ris_output_power(a)`` for every real a."""
    p = np.asarray(p, dtype=complex)
    return cfg.p_ap * np.real(np.outer(p, np.conj(p))) + cfg.sigma_r_sq * np.eye(p.shape[0])


def total_power(cfg: SystemConfig, a, p, p_c: float, passive: bool = False) -> PowerBreakdown:
    """Consumed power with unit amplifier efficiency and DC bias neglected.

    ``passive=True`` gives the passive-RIS counterpart, which has no output term.
    """
    out = 0.0 if passive else ris_output_power(a, p, cfg)
    return PowerBreakdown(p_ap=cfg.p_ap, p_a_out=out, p_circuit=cfg.n_elements * p_c)


def uniform_alpha(p, cfg: SystemConfig) -> float:
    """Largest common gain alpha <= alpha_max whose output power stays within P_a.

    Uses ``||alpha 1_L||^2 = L alpha^2`` for the noise term.
    """
    p = np.asarray(p, dtype=complex)
    denom = cfg.p_ap * np.abs(np.sum(p)) ** 2 + p.shape[0] * cfg.sigma_r_sq
    if denom <= 0:
        return float(cfg.alpha_max)
    return float(min(cfg.alpha_max, np.sqrt(cfg.p_a / denom)))
