"""Multi-antenna extension: Rician MIMO links, MBCD phase design, V-BLAST and joint ML."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import los_phase
from .codebook import build_distance_problem, run_sca, to_codebook
from .config import ConfigError, SystemConfig
from .modem import AapCodebook, Constellation

MAX_HYPOTHESES = 4096


@dataclass(frozen=True)
class MimoChannels:
    """``H`` is Nr x Nt (direct), ``F`` is N x Nt (AP->RIS), ``G`` is Nr x N (RIS->user)."""

    H: np.ndarray
    F: np.ndarray
    G: np.ndarray
    corr: float | None = None


@dataclass(frozen=True)
class PhaseSolution:
    phi0: np.ndarray
    iterations: int


def exp_correlation(n: int, r: float) -> np.ndarray:
    if not 0.0 <= r < 1.0:
        raise ConfigError(f"correlation coefficient must lie in [0, 1), got {r}")
    idx = np.arange(n)
    return r ** np.abs(idx[:, None] - idx[None, :])


def sym_sqrt(R) -> np.ndarray:
    """Symmetric square root via eigendecomposition; rejects non-PD input."""
    w, V = np.linalg.eigh(R)
    if np.any(w <= 0):
        raise ConfigError("correlation matrix is not positive definite")
    return (V * np.sqrt(w)) @ V.conj().T


def _rician_matrix(K, rho, d, wavelength, shape, rng, left=None, right=None):
    los = np.sqrt(K / (1.0 + K)) if np.isfinite(K) else 1.0
    nlos = np.sqrt(1.0 / (1.0 + K)) if np.isfinite(K) else 0.0
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    if left is not None:
        z = left @ z @ right
    return np.sqrt(rho) * (los * los_phase(d, wavelength) + nlos * z)


def gen_mimo_channels(cfg: SystemConfig, rng, corr: float | None = None) -> MimoChannels:
    """Draw H, F and G. ``corr`` applies exponential Kronecker correlation to the NLOS parts."""
    nt, nr, n = cfg.nt, cfg.nr, cfg.n_elements
    use = corr is not None and corr > 0
    if corr is not None:
        exp_correlation(1, corr)
    s_tx = sym_sqrt(exp_correlation(nt, corr)) if use else None
    s_rx = sym_sqrt(exp_correlation(nr, corr)) if use else None
    s_ris = sym_sqrt(exp_correlation(n, corr)) if use else None
    H = _rician_matrix(cfg.k0, cfg.rho0, cfg.d0, cfg.wavelength, (nr, nt), rng, s_rx, s_tx)
    F = _rician_matrix(cfg.k1, cfg.rho1, cfg.d1, cfg.wavelength, (n, nt), rng, s_ris, s_tx)
    G = _rician_matrix(cfg.k2, cfg.rho2, cfg.d2, cfg.wavelength, (nr, n), rng, s_rx, s_ris)
    return MimoChannels(H=H, F=F, G=G, corr=corr)


def build_mc(H, F, G) -> np.ndarray:
    """Gram matrix ``M_c`` with ``||H + G diag(phi) F||_F^2 = psi^H M_c psi``, ``psi = [conj(phi); 1]``."""
    H = np.atleast_2d(H)
    F = np.atleast_2d(F)
    G = np.atleast_2d(G)
    nr = G.shape[0]
    blocks = [np.hstack([F.conj().T * np.conj(G[r])[None, :], H[r].conj()[:, None]]) for r in range(nr)]
    B = np.vstack(blocks)
    return B.conj().T @ B


def mbcd_phases(H, F, G, n_iter: int) -> PhaseSolution:
    """Entry-normalized power iteration on ``M_c`` from the all-ones start.

    A zero entry of ``M_c psi`` keeps that entry's previous phase.
    """
    if n_iter < 0:
        raise ValueError("n_iter must be >= 0")
    Mc = build_mc(H, F, G)
    psi = np.ones(Mc.shape[0], dtype=complex)
    for _ in range(n_iter):
        nxt = Mc @ psi
        mag = np.abs(nxt)
        psi = np.where(mag > 0, nxt / np.where(mag > 0, mag, 1.0), psi)
    psi = psi / psi[-1]
    phi0 = np.conj(psi[:-1])
    return PhaseSolution(phi0=phi0 / np.abs(phi0), iterations=n_iter)


def mbcd_objective(H, F, G, phi) -> float:
    return float(np.linalg.norm(H + (G * phi[None, :]) @ F) ** 2)


def element_amplitudes(codebook: AapCodebook, k: int, n_elements: int) -> np.ndarray:
    return np.repeat(codebook.column(k), n_elements // codebook.n_groups)


def effective_channels(channels: MimoChannels, phases: PhaseSolution, codebook: AapCodebook) -> np.ndarray:
    """``H + G Phi_k F`` for every column k; shape (A, Nr, Nt)."""
    n = channels.F.shape[0]
    out = []
    for k in range(codebook.order):
        phi = element_amplitudes(codebook, k, n) * phases.phi0
        out.append(channels.H + (channels.G * phi[None, :]) @ channels.F)
    return np.array(out)


def symbol_vectors(constellation: Constellation, nt: int) -> np.ndarray:
    """All ``M^Nt`` transmit vectors; antenna 0 is the most significant digit. Shape (M^Nt, Nt)."""
    M = constellation.order
    idx = np.arange(M**nt)
    digits = (idx[:, None] // M ** np.arange(nt - 1, -1, -1)[None, :]) % M
    return constellation.points[digits]


def mimo_transceive(s_idx, k, channels: MimoChannels, phases: PhaseSolution, codebook: AapCodebook,
                    constellation: Constellation, cfg: SystemConfig, rng, forward_ris_noise=True,
                    eff=None):
    """Received vectors for symbol-index rows ``s_idx`` (n, Nt) and columns ``k`` (n,)."""
    s_idx = np.atleast_2d(np.asarray(s_idx))
    k = np.atleast_1d(np.asarray(k))
    if eff is None:
        eff = effective_channels(channels, phases, codebook)
    s = constellation.points[s_idx]
    y = np.sqrt(cfg.p_ap / cfg.nt) * np.einsum("nrt,nt->nr", eff[k], s)
    n, nr = y.shape
    y = y + np.sqrt(cfg.sigma_0_sq / 2) * (rng.standard_normal((n, nr)) + 1j * rng.standard_normal((n, nr)))
    if forward_ris_noise and cfg.sigma_r_sq > 0:
        N = channels.F.shape[0]
        amp = np.repeat(codebook.a, N // codebook.n_groups, axis=0)[:, k].T * phases.phi0[None, :]
        nr_noise = np.sqrt(cfg.sigma_r_sq / 2) * (rng.standard_normal((n, N)) + 1j * rng.standard_normal((n, N)))
        y = y + (amp * nr_noise) @ channels.G.T
    return y


def hypothesis_count(constellation: Constellation, nt: int, order: int) -> int:
    return constellation.order**nt * order


def mimo_ml_detect(y, channels: MimoChannels, phases: PhaseSolution, codebook: AapCodebook,
                   constellation: Constellation, cfg: SystemConfig, eff=None):
    """Exhaustive joint ML over ``(s, k)``; returns ``(s_idx_hat (n, Nt), k_hat (n,))``.

    Hypotheses are ordered k-major then by symbol-vector index; ties go to the lowest.
    """
    nt = cfg.nt
    n_hyp = hypothesis_count(constellation, nt, codebook.order)
    if n_hyp > MAX_HYPOTHESES:
        raise ConfigError(f"{n_hyp} ML hypotheses exceed the budget of {MAX_HYPOTHESES}")
    if eff is None:
        eff = effective_channels(channels, phases, codebook)
    S = symbol_vectors(constellation, nt)                        # (Ms, Nt)
    cands = np.sqrt(cfg.p_ap / nt) * np.einsum("krt,st->ksr", eff, S).reshape(-1, eff.shape[1])
    y = np.atleast_2d(y)
    idx = np.empty(y.shape[0], dtype=np.int64)
    step = max(1, 2**21 // (cands.size))
    for s in range(0, y.shape[0], step):
        diff = y[s:s + step, None, :] - cands[None, :, :]
        idx[s:s + step] = np.argmin(np.sum(diff.real**2 + diff.imag**2, axis=-1), axis=1)
    ms = S.shape[0]
    M = constellation.order
    sym = idx % ms
    digits = (sym[:, None] // M ** np.arange(nt - 1, -1, -1)[None, :]) % M
    return digits, idx // ms


def equivalent_group_gains(channels: MimoChannels, phases: PhaseSolution, n_groups: int) -> np.ndarray:
    """``h_l = ||G_l diag(phi_l) F_l||_F / sqrt(Nt Nr)`` over contiguous element groups."""
    G, F = channels.G, channels.F
    nr, n = G.shape
    nt = F.shape[1]
    nb = n // n_groups
    h = np.empty(n_groups)
    for l in range(n_groups):
        sl = slice(l * nb, (l + 1) * nb)
        h[l] = np.linalg.norm((G[:, sl] * phases.phi0[sl][None, :]) @ F[sl]) / np.sqrt(nt * nr)
    return h


def mimo_power_matrix(channels: MimoChannels, phases: PhaseSolution, cfg: SystemConfig) -> np.ndarray:
    """Quadratic form for ``(P/Nt) ||sum_l a_l p_l||^2 + sigma_r^2 ||a||^2`` with ``p_l = sum phi_i F_i``."""
    n = channels.F.shape[0]
    nb = n // cfg.n_groups
    rows = (phases.phi0[:, None] * channels.F).reshape(cfg.n_groups, nb, -1).sum(axis=1)
    return cfg.p_ap / cfg.nt * np.real(rows @ rows.conj().T) + cfg.sigma_r_sq * np.eye(cfg.n_groups)


def design_mimo_codebook(channels: MimoChannels, phases: PhaseSolution, constellation: Constellation,
                         cfg: SystemConfig, init="spread"):
    """SISO distance design on the equivalent group gains; returns ``(AapCodebook, ScaTrace)``."""
    h = equivalent_group_gains(channels, phases, cfg.n_groups)
    problem = build_distance_problem(h, constellation, cfg, F=mimo_power_matrix(channels, phases, cfg))
    a, trace = run_sca(problem, init=init)
    return to_codebook(a, problem), trace
