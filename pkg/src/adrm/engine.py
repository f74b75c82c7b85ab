"""Deterministic Monte-Carlo BER harness.

Work is split by channel index. One work unit draws its channel once (common
across the whole power grid), designs or loads the index patterns, and runs
the trials for every grid point. Random streams are Philox generators keyed by
``(master_seed, role, point, channel)`` so results never depend on how units
are distributed over workers; the reduction is an integer sum.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .baselines import BaselineScheme, PatternSet
from .channel import ChannelRealization, draw_channel, derive_groups, gen_rician_vector, align_phases, mean_channel
from .codebook import DesignError, design_codebook_sca, problem_for_channel
from .config import ConfigError, SystemConfig, watt_to_dbm
from .mimo import (
    design_mimo_codebook, effective_channels, gen_mimo_channels, mbcd_phases, mimo_ml_detect,
    mimo_power_matrix, mimo_transceive,
)
from .modem import Constellation, noise_variance, qam

ROLE_CHANNEL = 0
ROLE_TRIAL = 1
INACTIVE_MARGIN = 1e-3
MIN_ERRORS = 100
MIN_BITS = 10_000


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one (role, point, channel) key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


@dataclass(frozen=True)
class SweepSpec:
    """Monte-Carlo axes. ``p_ap_grid`` is in watts.

    ``codebook_policy="per_channel"`` designs for each drawn channel and runs
    block-fading trials on it; ``"mean"`` designs once per point on the mean
    channel and draws a fresh channel for every trial, which is the setting the
    union bound describes.
    """

    p_ap_grid: tuple
    bits_per_point: int = 100_000
    channels_per_point: int = 100
    master_seed: int = 0
    csi_delta: float = 0.0
    noise_mode: str = "clt"
    codebook_policy: str = "per_channel"
    chunk: int = 16_384

    def __post_init__(self):
        grid = np.asarray(self.p_ap_grid, dtype=float)
        object.__setattr__(self, "p_ap_grid", tuple(float(v) for v in grid))
        if grid.ndim != 1 or grid.size == 0:
            raise ConfigError("p_ap_grid must be a non-empty 1-D list")
        if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ConfigError("p_ap_grid must be positive and strictly increasing")
        if self.bits_per_point < 1 or self.channels_per_point < 1 or self.chunk < 1:
            raise ConfigError("bits_per_point, channels_per_point and chunk must be >= 1")
        if not self.csi_delta >= 0:
            raise ConfigError("csi_delta must be >= 0")
        if self.noise_mode not in ("clt", "physical"):
            raise ConfigError(f"unknown noise_mode {self.noise_mode!r}")
        if self.codebook_policy not in ("per_channel", "mean"):
            raise ConfigError(f"unknown codebook_policy {self.codebook_policy!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class AdrmScheme:
    power_form: str = "coherent"
    init: str = "spread"
    kind: str = "adrm"

    name = "ARIS-ADRM"

    def rate_for(self, cfg: SystemConfig) -> int:
        return cfg.rate

    def describe(self) -> dict:
        return {"scheme": self.kind, "power_form": self.power_form, "init": self.init}

    def design(self, channel: ChannelRealization, cfg: SystemConfig, constellation: Constellation):
        """Returns ``(PatternSet, constraint_inactive)``."""
        codebook, trace = design_codebook_sca(channel, constellation, cfg, self.power_form, self.init)
        problem = problem_for_channel(channel, constellation, cfg, self.power_form)
        a = codebook.a.T.ravel()
        inactive = bool(problem.column_power(a).max() < 1.0 - INACTIVE_MARGIN)
        return PatternSet.from_codebook(codebook, iterations=trace.iterations), inactive


@dataclass(frozen=True)
class MimoAdrmScheme:
    mbcd_iterations: int = 10
    forward_ris_noise: bool = True
    corr: float | None = None
    kind: str = "adrm-mimo"

    name = "ARIS-ADRM-MIMO"

    def rate_for(self, cfg: SystemConfig) -> int:
        return cfg.rate

    def describe(self) -> dict:
        return {"scheme": self.kind, "mbcd_iterations": self.mbcd_iterations,
                "forward_ris_noise": self.forward_ris_noise, "corr": self.corr}


@dataclass
class BerCurve:
    p_ap: np.ndarray
    error_counts: np.ndarray
    trial_counts: np.ndarray
    rate: int
    design_failures: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.p_ap = np.asarray(self.p_ap, dtype=float)
        self.error_counts = np.asarray(self.error_counts, dtype=np.int64)
        self.trial_counts = np.asarray(self.trial_counts, dtype=np.int64)
        if self.design_failures is None:
            self.design_failures = np.zeros_like(self.error_counts)

    @property
    def bits(self) -> np.ndarray:
        return self.trial_counts * self.rate

    @property
    def ber(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.bits > 0, self.error_counts / np.maximum(self.bits, 1), np.nan)

    @property
    def stderr(self) -> np.ndarray:
        b = self.ber
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.sqrt(b * (1.0 - b) / self.bits)

    @property
    def low_confidence(self) -> np.ndarray:
        return (self.error_counts < MIN_ERRORS) | (self.bits < MIN_BITS) | (self.design_failures > 0)

    def csv_body(self) -> str:
        out = io.StringIO()
        out.write("p_ap_dBm,ber,errors,trials,stderr\n")
        for p, b, e, t, s in zip(self.p_ap, self.ber, self.error_counts, self.trial_counts, self.stderr):
            out.write(f"{watt_to_dbm(p):.6f},{b:.9e},{e},{t},{s:.9e}\n")
        return out.getvalue()

    def to_csv(self) -> str:
        meta = dict(self.metadata)
        meta["rate"] = self.rate
        meta["low_confidence_dBm"] = [round(float(watt_to_dbm(p)), 6) for p in self.p_ap[self.low_confidence]]
        meta["design_failures"] = self.design_failures.tolist()
        head = "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in meta.items())
        return head + self.csv_body()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "BerCurve":
        meta, rows = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = json.loads(val)
            elif line and not line.startswith("p_ap_dBm"):
                rows.append(line.split(","))
        arr = np.array(rows, dtype=float).reshape(-1, 5)
        p = 10 ** ((arr[:, 0] - 30.0) / 10.0)
        rate = int(meta.pop("rate"))
        fails = np.asarray(meta.pop("design_failures", np.zeros(len(p))), dtype=np.int64)
        meta.pop("low_confidence_dBm", None)
        return cls(p, arr[:, 2].astype(np.int64), arr[:, 3].astype(np.int64), rate, fails, meta)


def apply_csi_error(channel: ChannelRealization, delta: float, rng, scale_f: float = 1.0,
                    scale_g: float = 1.0) -> ChannelRealization:
    """Detector-side estimate ``f + scale_f CN(0, delta^2)``, likewise for ``g``.

    The element phases stay those of the true channel (they were configured with
    it), so the returned ``h`` is the complex cascade sum the detector believes in.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        return channel
    shape = channel.f.shape
    e_f = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (delta * scale_f / np.sqrt(2))
    e_g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (delta * scale_g / np.sqrt(2))
    f_e, g_e = channel.f + e_f, channel.g + e_g
    L = channel.h.shape[-1]
    h = cascade_groups(f_e, g_e, channel.theta, L)
    _, p = derive_groups(f_e, g_e, channel.theta, L)
    return ChannelRealization(f=f_e, g=g_e, theta=channel.theta, h=h, p=p)


def cascade_groups(f, g, theta, n_groups):
    """Complex group sums ``sum_i f_i g_i e^{j theta_i}`` (equal to ``h`` for aligned phases)."""
    prod = np.asarray(f) * np.asarray(g) * np.exp(1j * np.asarray(theta))
    return prod.reshape(prod.shape[:-1] + (n_groups, -1)).sum(axis=-1)


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _count_bit_errors(m, mh, k, kh) -> int:
    return int(np.bitwise_count(m ^ mh).sum() + np.bitwise_count(k ^ kh).sum())


def _simulate(ps: PatternSet, tx_h, rx_h, cfg: SystemConfig, const: Constellation, n_words: int,
              rng, noise_mode: str, g=None, chunk: int = 16_384) -> int:
    """Bit errors over ``n_words`` transmissions.

    ``tx_h``/``rx_h`` are (L,) for block fading or (n_words, L) for per-trial channels;
    ``g`` follows the same convention and is only used by the physical noise mode.
    """
    A, M = ps.order, const.order
    W = ps.weights
    var = noise_variance(ps.amp, cfg)
    per_trial = np.ndim(tx_h) == 2
    if not per_trial:
        cands_fixed = np.sqrt(cfg.p_ap) * np.outer(np.asarray(rx_h) @ W, const.points).ravel()
        gains_fixed = np.asarray(tx_h) @ W
    errors = 0
    for s in range(0, n_words, chunk):
        n = min(chunk, n_words - s)
        m = rng.integers(0, M, n)
        k = rng.integers(0, A, n)
        if per_trial:
            gains = tx_h[s:s + n] @ W
            sig = gains[np.arange(n), k]
        else:
            sig = gains_fixed[k]
        y = np.sqrt(cfg.p_ap) * sig * const.points[m]
        if noise_mode == "clt":
            y = y + np.sqrt(var[k]) * _complex_normal(rng, n)
        else:
            # forwarded noise given g is CN(0, sigma_r^2 sum_l a_l^2 sum_{i in l} |g_i|^2)
            gg = g[s:s + n] if per_trial else g[None, :]
            g_pow = (np.abs(gg) ** 2).reshape(gg.shape[0], ps.amp.shape[0], -1).sum(axis=-1)
            v = cfg.sigma_r_sq * (g_pow @ ps.amp**2) + cfg.sigma_0_sq
            v = v[np.arange(n), k] if per_trial else v[0, k]
            y = y + np.sqrt(v) * _complex_normal(rng, n)
        if per_trial:
            cands = np.sqrt(cfg.p_ap) * ((rx_h[s:s + n] @ W)[:, :, None] * const.points[None, None, :]).reshape(n, -1)
            d = y[:, None] - cands
        else:
            d = y[:, None] - cands_fixed[None, :]
        idx = np.argmin(d.real**2 + d.imag**2, axis=1)
        errors += _count_bit_errors(m, idx % M, k, idx // M)
    return errors


def _words_for(spec: SweepSpec, rate: int, c: int) -> int:
    total = -(-spec.bits_per_point // rate)
    base, rem = divmod(total, spec.channels_per_point)
    return base + (1 if c < rem else 0)


def _siso_unit(args):
    cfg, spec, scheme, c, mean_patterns = args
    const = qam(cfg.mod_order)
    P = len(spec.p_ap_grid)
    rate = scheme.rate_for(cfg) if isinstance(scheme, AdrmScheme) else scheme.rate
    n_words = _words_for(spec, rate, c)
    errors = np.zeros(P, dtype=np.int64)
    fails = np.zeros(P, dtype=np.int64)
    sent = np.zeros(P, dtype=np.int64)
    if n_words == 0:
        return errors, sent, fails
    if spec.codebook_policy == "mean":
        for i, p_ap in enumerate(spec.p_ap_grid):
            if mean_patterns[i] is None:
                fails[i] = 1
                continue
            cfg_i = cfg.replace(p_ap=p_ap)
            rng_c = stream(spec.master_seed, ROLE_CHANNEL, c)
            f = gen_rician_vector(cfg.k1, cfg.rho1, cfg.d1, cfg.wavelength, None, rng_c, size=(n_words, cfg.n_elements))
            g = gen_rician_vector(cfg.k2, cfg.rho2, cfg.d2, cfg.wavelength, None, rng_c, size=(n_words, cfg.n_elements))
            theta = align_phases(f, g)
            h, _ = derive_groups(f, g, theta, cfg.n_groups)
            rx_h = h
            if spec.csi_delta > 0:
                est = apply_csi_error(ChannelRealization(f, g, theta, h, h), spec.csi_delta, rng_c,
                                      np.sqrt(cfg.rho1), np.sqrt(cfg.rho2))
                rx_h = est.h
            errors[i] = _simulate(mean_patterns[i], h, rx_h, cfg_i, const, n_words,
                                  stream(spec.master_seed, ROLE_TRIAL, i, c), spec.noise_mode, g=g,
                                  chunk=spec.chunk)
            sent[i] = n_words
        return errors, sent, fails

    rng_c = stream(spec.master_seed, ROLE_CHANNEL, c)
    channel = draw_channel(cfg, rng_c)
    est = apply_csi_error(channel, spec.csi_delta, rng_c, np.sqrt(cfg.rho1), np.sqrt(cfg.rho2))
    reuse = None
    for i in reversed(range(P)):
        cfg_i = cfg.replace(p_ap=spec.p_ap_grid[i])
        if isinstance(scheme, AdrmScheme):
            if reuse is not None:
                ps = reuse
            else:
                try:
                    ps, inactive = scheme.design(channel, cfg_i, const)
                except DesignError:
                    fails[i] = 1
                    continue
                if inactive:
                    reuse = ps
        else:
            ps = scheme.patterns(channel, cfg_i, const)
        errors[i] = _simulate(ps, channel.h, est.h, cfg_i, const, n_words,
                              stream(spec.master_seed, ROLE_TRIAL, i, c), spec.noise_mode, g=channel.g,
                              chunk=spec.chunk)
        sent[i] = n_words
    return errors, sent, fails


def mimo_power_inactive(channels, phases, codebook, cfg) -> bool:
    F = mimo_power_matrix(channels, phases, cfg) / cfg.p_a
    return bool(np.einsum("lk,lm,mk->k", codebook.a, F, codebook.a).max() < 1.0 - INACTIVE_MARGIN)


def _mimo_unit(args):
    cfg, spec, scheme, c, _ = args
    const = qam(cfg.mod_order)
    P = len(spec.p_ap_grid)
    n_words = _words_for(spec, cfg.rate, c)
    errors = np.zeros(P, dtype=np.int64)
    fails = np.zeros(P, dtype=np.int64)
    sent = np.zeros(P, dtype=np.int64)
    if n_words == 0:
        return errors, sent, fails
    rng_c = stream(spec.master_seed, ROLE_CHANNEL, c)
    channels = gen_mimo_channels(cfg, rng_c, scheme.corr)
    phases = mbcd_phases(channels.H, channels.F, channels.G, scheme.mbcd_iterations)
    M, nt = const.order, cfg.nt
    reuse = None
    for i in reversed(range(P)):
        cfg_i = cfg.replace(p_ap=spec.p_ap_grid[i])
        if reuse is not None:
            codebook = reuse
        else:
            try:
                codebook, _ = design_mimo_codebook(channels, phases, const, cfg_i)
            except DesignError:
                fails[i] = 1
                continue
            if mimo_power_inactive(channels, phases, codebook, cfg_i):
                reuse = codebook
        eff = effective_channels(channels, phases, codebook)
        rng = stream(spec.master_seed, ROLE_TRIAL, i, c)
        for s in range(0, n_words, spec.chunk):
            n = min(spec.chunk, n_words - s)
            s_idx = rng.integers(0, M, (n, nt))
            k = rng.integers(0, codebook.order, n)
            y = mimo_transceive(s_idx, k, channels, phases, codebook, const, cfg_i, rng,
                                scheme.forward_ris_noise, eff=eff)
            s_hat, k_hat = mimo_ml_detect(y, channels, phases, codebook, const, cfg_i, eff=eff)
            errors[i] += _count_bit_errors(s_idx, s_hat, k, k_hat)
        sent[i] = n_words
    return errors, sent, fails


def _mean_channel_patterns(cfg, spec, scheme, const):
    out = []
    for p_ap in spec.p_ap_grid:
        cfg_i = cfg.replace(p_ap=p_ap)
        ch = mean_channel(cfg_i)
        try:
            if isinstance(scheme, AdrmScheme):
                out.append(scheme.design(ch, cfg_i, const)[0])
            else:
                out.append(scheme.patterns(ch, cfg_i, const))
        except DesignError:
            out.append(None)
    return out


def _metadata(cfg, spec, scheme) -> dict:
    return {
        "tool": f"adrm {__version__}",
        "scheme": scheme.describe(),
        "config": cfg.to_dict(),
        "sweep": {k: v for k, v in asdict(spec).items() if k != "chunk"},
    }


def run_ber_sweep(cfg: SystemConfig, sweep: SweepSpec, scheme=None, workers: int = 1) -> BerCurve:
    """Monte-Carlo BER over ``sweep.p_ap_grid``; identical output for any ``workers``."""
    scheme = AdrmScheme() if scheme is None else scheme
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    mimo = isinstance(scheme, MimoAdrmScheme)
    if mimo:
        if sweep.csi_delta > 0 or sweep.codebook_policy != "per_channel":
            raise ConfigError("the MIMO sweep supports perfect CSI and per-channel designs only")
        rate = cfg.rate
        unit = _mimo_unit
    else:
        if cfg.nt != 1 or cfg.nr != 1:
            raise ConfigError("SISO schemes need nt = nr = 1")
        rate = cfg.rate if isinstance(scheme, AdrmScheme) else scheme.rate
        unit = _siso_unit
    const = qam(cfg.mod_order)
    mean_patterns = None
    if sweep.codebook_policy == "mean" and not mimo:
        mean_patterns = _mean_channel_patterns(cfg, sweep, scheme, const)
    tasks = [(cfg, sweep, scheme, c, mean_patterns) for c in range(sweep.channels_per_point)]
    P = len(sweep.p_ap_grid)
    errors = np.zeros(P, dtype=np.int64)
    words = np.zeros(P, dtype=np.int64)
    fails = np.zeros(P, dtype=np.int64)
    if workers == 1:
        results = map(unit, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(unit, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
    try:
        for e, w, f in results:
            errors += e
            words += w
            fails += f
    finally:
        if workers > 1:
            pool.shutdown()
    return BerCurve(np.array(sweep.p_ap_grid), errors, words, rate, fails, _metadata(cfg, sweep, scheme))
