"""Scenario parameters and unit conversions."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration is inconsistent or out of range."""


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of one scenario, in linear SI units.

    Defaults:
    sigma^2 = -80 dBm at RIS and user, K0=0, K1=K2=3, d0=55 m, d1=5 m,
    d2=50 m, lambda=0.1 m, v0=3.5, v1=v2=2, rho_r=-30 dB, P_a=30 dBm,
    alpha_max=10, with N=128, L=4, A=4 and 4-QAM (4 bpcu).
    """

    n_elements: int = 128
    n_groups: int = 4
    codebook_order: int = 4
    mod_order: int = 4
    p_ap: float = 1e-3
    p_a: float = 1.0
    alpha_max: float = 10.0
    sigma_r_sq: float = 1e-11
    sigma_0_sq: float = 1e-11
    d0: float = 55.0
    d1: float = 5.0
    d2: float = 50.0
    k0: float = 0.0
    k1: float = 3.0
    k2: float = 3.0
    v0: float = 3.5
    v1: float = 2.0
    v2: float = 2.0
    rho_r: float = 1e-3
    wavelength: float = 0.1
    nt: int = 1
    nr: int = 1

    def __post_init__(self):
        if self.n_elements < 1 or self.n_groups < 1:
            raise ConfigError("n_elements and n_groups must be positive")
        if self.n_elements % self.n_groups:
            raise ConfigError(
                f"n_elements={self.n_elements} is not divisible by n_groups={self.n_groups}"
            )
        if not is_power_of_two(self.codebook_order):
            raise ConfigError(f"codebook_order={self.codebook_order} is not a power of two")
        if not is_power_of_two(self.mod_order):
            raise ConfigError(f"mod_order={self.mod_order} is not a power of two")
        for name in ("p_a", "d0", "d1", "d2", "v0", "v1", "v2", "rho_r", "wavelength"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.p_ap < 0:
            raise ConfigError("p_ap must be >= 0")
        if self.sigma_r_sq < 0 or self.sigma_0_sq < 0:
            raise ConfigError("noise powers must be >= 0")
        if not self.alpha_max > 1:
            raise ConfigError(f"alpha_max must exceed 1, got {self.alpha_max}")
        for name in ("k0", "k1", "k2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"Rician factor {name} must be >= 0")
        if self.nt < 1 or self.nr < 1:
            raise ConfigError("antenna counts must be >= 1")

    @property
    def n_bar(self) -> int:
        return self.n_elements // self.n_groups

    @property
    def rho0(self) -> float:
        return self.rho_r * self.d0 ** (-self.v0)

    @property
    def rho1(self) -> float:
        return self.rho_r * self.d1 ** (-self.v1)

    @property
    def rho2(self) -> float:
        return self.rho_r * self.d2 ** (-self.v2)

    @property
    def rate(self) -> int:
        return self.nt * int(np.log2(self.mod_order)) + int(np.log2(self.codebook_order))

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
