"""INI run configuration with unit suffixes.

Example::

    [system]
    n_elements = 128
    p_a = 30 dBm
    sigma_r_sq = -80 dBm
    rho_r = -30 dB

    [sweep]
    p_ap = -20 dBm, -15 dBm, -10 dBm    ; or: p_ap_dbm = -20:-10:5
    bits_per_point = 1e5
    channels_per_point = 100

    [scheme]
    name = adrm

Quantities accept ``dBm`` (converted to watts), ``dB`` (converted to a linear
ratio) or a bare number in linear units. Conversion happens once, here.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .baselines import SCHEMES, BaselineScheme
from .config import ConfigError, SystemConfig, db_to_linear, dbm_to_watt
from .engine import AdrmScheme, MimoAdrmScheme, SweepSpec
from .mimo import MAX_HYPOTHESES

SCHEME_NAMES = ("adrm",) + SCHEMES + ("adrm-mimo",)
_INT_FIELDS = {f.name for f in dataclasses.fields(SystemConfig) if f.type in ("int", int)}


def parse_quantity(text: str) -> float:
    s = text.strip()
    low = s.lower()
    try:
        if low.endswith("dbm"):
            return float(dbm_to_watt(float(s[:-3])))
        if low.endswith("db"):
            return float(db_to_linear(float(s[:-2])))
        if low in ("inf", "infinity"):
            return float("inf")
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse quantity {text!r}") from None


def parse_int(text: str, name: str) -> int:
    v = parse_quantity(text)
    if not float(v).is_integer():
        raise ConfigError(f"{name} must be an integer, got {text!r}")
    return int(v)


def parse_grid(text: str, dbm: bool) -> tuple:
    """Comma list, or ``start:stop:step`` (inclusive), of powers."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("range step must be positive")
        vals = np.arange(start, stop + step / 2, step)
        return tuple(float(dbm_to_watt(v)) if dbm else float(v) for v in vals)
    vals = [v for v in text.replace(";", ",").split(",") if v.strip()]
    if dbm:
        return tuple(float(dbm_to_watt(float(v))) for v in vals)
    return tuple(parse_quantity(v) for v in vals)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    sweep: SweepSpec | None = None
    scheme: str = "adrm"
    n_active: int | None = None
    power_form: str = "coherent"
    init: str = "spread"
    mbcd_iterations: int = 10
    forward_ris_noise: bool = True
    corr: float | None = None
    mgf: str = "gaussian"
    mi_samples: int = 10_000
    seed: int = 0

    def build_scheme(self, name: str | None = None):
        name = self.scheme if name is None else name
        if name == "adrm":
            return AdrmScheme(self.power_form, self.init)
        if name == "adrm-mimo":
            return MimoAdrmScheme(self.mbcd_iterations, self.forward_ris_noise, self.corr)
        if name in SCHEMES:
            return BaselineScheme.matching(name, self.system, self.n_active)
        raise ConfigError(f"unknown scheme {name!r}; choose from {', '.join(SCHEME_NAMES)}")

    def with_seed(self, seed: int) -> "RunConfig":
        sweep = None if self.sweep is None else dataclasses.replace(self.sweep, master_seed=seed)
        return dataclasses.replace(self, sweep=sweep, seed=seed)


def load_run_config(text: str) -> RunConfig:
    """Parse and validate a configuration; raises :class:`ConfigError` on any problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    known = {"system", "sweep", "scheme", "theory"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    sys_kwargs = {}
    if cp.has_section("system"):
        names = {f.name for f in dataclasses.fields(SystemConfig)}
        for key, val in cp.items("system"):
            if key == "p_ap_dbm":
                sys_kwargs["p_ap"] = float(dbm_to_watt(float(val)))
                continue
            if key not in names:
                raise ConfigError(f"unknown system key {key!r}")
            sys_kwargs[key] = parse_int(val, key) if key in _INT_FIELDS else parse_quantity(val)
    system = SystemConfig(**sys_kwargs)

    run = RunConfig(system=system)
    seed = 0
    if cp.has_section("scheme"):
        for key, val in cp.items("scheme"):
            if key == "name":
                run.scheme = val.strip().lower()
            elif key == "n_active":
                run.n_active = parse_int(val, key)
            elif key in ("power_form", "init"):
                setattr(run, key, val.strip())
            elif key == "mbcd_iterations":
                run.mbcd_iterations = parse_int(val, key)
            elif key == "forward_ris_noise":
                run.forward_ris_noise = _bool(val)
            elif key == "corr":
                run.corr = None if not val.strip() else parse_quantity(val)
            else:
                raise ConfigError(f"unknown scheme key {key!r}")
    if run.scheme not in SCHEME_NAMES:
        raise ConfigError(f"unknown scheme {run.scheme!r}; choose from {', '.join(SCHEME_NAMES)}")
    if run.n_active is not None and not 1 <= run.n_active <= system.n_groups:
        raise ConfigError(f"n_active={run.n_active} must lie in 1..L={system.n_groups}")
    if run.power_form not in ("coherent", "diagonal"):
        raise ConfigError(f"power_form must be 'coherent' or 'diagonal', got {run.power_form!r}")
    if run.corr is not None and not 0 <= run.corr < 1:
        raise ConfigError("corr must lie in [0, 1)")

    if cp.has_section("theory"):
        for key, val in cp.items("theory"):
            if key == "mgf":
                run.mgf = val.strip()
            elif key == "mi_samples":
                run.mi_samples = parse_int(val, key)
            else:
                raise ConfigError(f"unknown theory key {key!r}")
    if run.mgf not in ("gaussian", "scalar"):
        raise ConfigError(f"mgf must be 'gaussian' or 'scalar', got {run.mgf!r}")

    if cp.has_section("sweep"):
        kw = {}
        for key, val in cp.items("sweep"):
            if key == "p_ap_dbm":
                kw["p_ap_grid"] = parse_grid(val, dbm=True)
            elif key == "p_ap":
                kw["p_ap_grid"] = parse_grid(val, dbm=False)
            elif key in ("bits_per_point", "channels_per_point"):
                kw[key] = parse_int(val, key)
            elif key in ("seed", "master_seed"):
                seed = parse_int(val, key)
            elif key == "csi_delta":
                kw[key] = parse_quantity(val)
            elif key in ("noise_mode", "codebook_policy"):
                kw[key] = val.strip()
            else:
                raise ConfigError(f"unknown sweep key {key!r}")
        if "p_ap_grid" not in kw:
            raise ConfigError("[sweep] needs p_ap or p_ap_dbm")
        run.sweep = SweepSpec(master_seed=seed, **kw)
    run.seed = seed
    if run.scheme == "adrm-mimo":
        hyp = system.mod_order**system.nt * system.codebook_order
        if hyp > MAX_HYPOTHESES:
            raise ConfigError(f"{hyp} ML hypotheses exceed the budget of {MAX_HYPOTHESES}")
    if run.scheme in SCHEMES:
        scheme = run.build_scheme()
        if scheme.rate != system.rate:
            raise ConfigError(
                f"{scheme.name} carries {scheme.rate} bpcu but the configuration carries {system.rate}"
            )
    return run
