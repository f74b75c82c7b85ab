"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) before
asserting. Tolerances, sample counts and time limits are the contractual ones.
"""

import time

import numpy as np
import pytest

from adrm.analysis import abep_bound, mi_estimate, relative_snr_p_ap, standard_noise
from adrm.baselines import BaselineScheme
from adrm.channel import derive_groups, align_phases, draw_channel, gen_rician_vector, h_statistics, mean_channel
from adrm.codebook import build_distance_problem, design_codebook_sca, problem_for_channel, random_feasible, run_sca
from adrm.config import SystemConfig, dbm_to_watt, watt_to_dbm
from adrm.engine import AdrmScheme, MimoAdrmScheme, SweepSpec, run_ber_sweep
from adrm.mimo import (
    design_mimo_codebook, effective_channels, gen_mimo_channels, mbcd_objective, mbcd_phases, mimo_ml_detect,
    mimo_transceive,
)
from adrm.modem import codewords, int_to_bits, join_bits, ml_detect, noise_variance, physical_noise, qam, split_bits

pytestmark = pytest.mark.acceptance


def dbm_grid(*values):
    return tuple(float(dbm_to_watt(v)) for v in values)


# shared runs, reused by the determinism check
_RUNS = {}


def _run(key, cfg, sweep, scheme=None, workers=1):
    if (key, workers) not in _RUNS:
        _RUNS[(key, workers)] = run_ber_sweep(cfg, sweep, scheme, workers=workers)
    return _RUNS[(key, workers)]


def test_criterion_01_noise_fidelity(verdict):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    # unit-loss RIS->user hop so the forwarded RIS noise dominates the receiver noise
    for L in (2, 4):
        cfg = SystemConfig(n_elements=128, n_groups=L, rho_r=1.0, d2=1.0)
        for _ in range(3):
            a = rng.uniform(1.0, cfg.alpha_max, L)
            w = physical_noise(a, cfg, rng, 1_000_000)
            worst = max(worst, abs(np.var(w) / noise_variance(a, cfg) - 1))
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 0.02 and elapsed < 10, f"max rel. variance error {worst:.4f} (<=0.02), {elapsed:.1f} s (<10)")


def test_criterion_02_moment_fidelity(verdict):
    cfg = SystemConfig(k1=3.0, k2=3.0)           # N/L = 32
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    f = gen_rician_vector(cfg.k1, cfg.rho1, cfg.d1, cfg.wavelength, None, rng, size=(100_000, cfg.n_elements))
    g = gen_rician_vector(cfg.k2, cfg.rho2, cfg.d2, cfg.wavelength, None, rng, size=(100_000, cfg.n_elements))
    h, _ = derive_groups(f, g, align_phases(f, g), cfg.n_groups)
    mu, s2 = h_statistics(cfg)
    e_mu = abs(h.mean() / mu - 1)
    e_s2 = abs(h.var() / s2 - 1)
    elapsed = time.perf_counter() - t0
    verdict(2, e_mu <= 0.01 and e_s2 <= 0.01 and elapsed < 10,
            f"mean err {e_mu:.4f}, variance err {e_s2:.4f} (<=0.01), {elapsed:.1f} s (<10)")


def test_criterion_03_theory_vs_simulation(verdict):
    cfg = SystemConfig(n_elements=64, n_groups=2, codebook_order=2)
    const = qam(4)
    grid = dbm_grid(*np.arange(-24, -9, 2))
    t0 = time.perf_counter()
    curve = run_ber_sweep(cfg, SweepSpec(grid, bits_per_point=1_000_000, channels_per_point=100, master_seed=3,
                                         codebook_policy="mean"))
    stats = h_statistics(cfg)
    bounds = []
    for p in grid:
        c = cfg.replace(p_ap=p)
        bounds.append(abep_bound(design_codebook_sca(mean_channel(c), const, c)[0], const, c, stats))
    elapsed = time.perf_counter() - t0
    bounds = np.array(bounds)
    sim = curve.ber
    checked = sim >= 1e-4
    dominated = bool(np.all(bounds[checked] >= sim[checked]))
    ratio = bounds[-1] / sim[-1] if sim[-1] > 0 else np.inf
    ok = dominated and checked[-1] and ratio <= 10 and len(grid) <= 8 and elapsed < 300
    verdict(3, ok, f"bound>=sim on {checked.sum()}/{len(grid)} checked points: {dominated}; "
                   f"top-point ratio {ratio:.2f} (<=10); {elapsed:.0f} s (<300)")


def test_criterion_04_mi_limits(verdict):
    cfg = SystemConfig()
    const = qam(4)
    t0 = time.perf_counter()
    ch = mean_channel(cfg)
    cb, _ = design_codebook_sca(ch, const, cfg)
    noise = standard_noise(16, 10_000, np.random.default_rng(104))
    lo = mi_estimate(ch.h, cb, const, cfg.replace(p_ap=relative_snr_p_ap(1e-3, ch.h, cb, const, cfg)), noise=noise)
    hi = mi_estimate(ch.h, cb, const, cfg.replace(p_ap=relative_snr_p_ap(1e4, ch.h, cb, const, cfg)), noise=noise)
    elapsed = time.perf_counter() - t0
    R = cfg.rate
    verdict(4, lo < 0.05 * R and hi > 0.99 * R and elapsed < 60,
            f"MI(-30 dB) {lo:.4f} (<{0.05 * R}), MI(+40 dB) {hi:.4f} (>{0.99 * R}), {elapsed:.1f} s")


def test_criterion_05_sca_behavior(verdict):
    cfg = SystemConfig()
    const = qam(4)
    t0 = time.perf_counter()
    monotone = converged = wins = 0
    for seed in range(50):
        rng = np.random.default_rng(5000 + seed)
        prob = problem_for_channel(draw_channel(cfg, rng), const, cfg)
        a, trace = run_sca(prob)
        tau = trace.tau_per_iter
        monotone += bool(np.all(np.diff(tau) >= -1e-8 * np.maximum(1.0, np.abs(tau[:-1]))))
        converged += trace.converged and trace.iterations <= 100
        best_random = max(prob.min_distance(x) for x in random_feasible(prob, rng, 100))
        wins += prob.min_distance(a) > best_random
    elapsed = time.perf_counter() - t0
    ok = monotone == 50 and converged >= 48 and wins >= 0.95 * 50 and elapsed < 300
    verdict(5, ok, f"monotone {monotone}/50, converged {converged}/50 (>=48), beats random {wins}/50 (>=48), "
                   f"{elapsed:.0f} s")


def test_criterion_06_scheme_ordering(verdict):
    cfg = SystemConfig()
    grid = dbm_grid(-12, -10, -8)
    sweep = SweepSpec(grid, bits_per_point=400_000, channels_per_point=100, master_seed=6)
    t0 = time.perf_counter()
    curves = {"adrm": _run("c6-adrm", cfg, sweep, AdrmScheme())}
    for kind in ("im", "pdrm", "srpm"):
        curves[kind] = _run(f"c6-{kind}", cfg, sweep, BaselineScheme.matching(kind, cfg))
    elapsed = time.perf_counter() - t0
    adrm = curves["adrm"].ber
    i = int(np.argmin(np.abs(np.log10(np.maximum(adrm, 1e-12)) - np.log10(1e-3))))
    b = {k: c.ber[i] for k, c in curves.items()}
    ok = b["adrm"] < b["im"] < b["pdrm"] and elapsed < 900
    detail = ", ".join(f"{k} {v:.3e}" for k, v in b.items())
    verdict(6, ok, f"at {watt_to_dbm(grid[i]):.0f} dBm: {detail}; need adrm < im < pdrm; {elapsed:.0f} s")


def test_criterion_07_csi_sensitivity(verdict):
    cfg = SystemConfig()
    t0 = time.perf_counter()
    bers = []
    for delta in (0.0, 0.03, 0.07):
        sweep = SweepSpec(dbm_grid(-10), bits_per_point=400_000, channels_per_point=100, master_seed=7,
                          csi_delta=delta)
        bers.append(_run(f"c7-{delta}", cfg, sweep).ber[0])
    elapsed = time.perf_counter() - t0
    ok = bers[0] < bers[1] < bers[2] and elapsed < 600
    verdict(7, ok, "BER at delta 0/0.03/0.07: " + ", ".join(f"{b:.4e}" for b in bers) + f"; {elapsed:.0f} s")


def _c8_config(nr):
    return SystemConfig(n_elements=64, n_groups=4, codebook_order=2, mod_order=4, nt=2, nr=nr)


C8_SWEEP = SweepSpec(dbm_grid(-5, 0, 5, 10), bits_per_point=100_000, channels_per_point=50, master_seed=8)


def test_criterion_08_mimo_diversity(verdict):
    t0 = time.perf_counter()
    two = _run("c8-2", _c8_config(2), C8_SWEEP, MimoAdrmScheme())
    four = _run("c8-4", _c8_config(4), C8_SWEEP, MimoAdrmScheme())
    elapsed = time.perf_counter() - t0
    common = (two.error_counts >= 100) & (four.error_counts >= 100)
    ok = two.rate == 5 and common.any() and bool(np.all(four.ber[common] < two.ber[common])) and elapsed < 900
    pairs = ", ".join(f"{watt_to_dbm(p):.0f} dBm {a:.2e}/{b:.2e}" for p, a, b, c in
                      zip(C8_SWEEP.p_ap_grid, two.ber, four.ber, common) if c)
    verdict(8, ok, f"Nr=2/Nr=4 on {common.sum()} common points: {pairs}; {elapsed:.0f} s")


def test_criterion_09_mbcd_quality(verdict):
    cfg = SystemConfig(n_elements=32, nt=2, nr=2)
    t0 = time.perf_counter()
    wins = 0
    for seed in range(100):
        rng = np.random.default_rng(9000 + seed)
        ch = gen_mimo_channels(cfg, rng)
        phi = mbcd_phases(ch.H, ch.F, ch.G, 10).phi0
        rand = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.n_elements))
        wins += mbcd_objective(ch.H, ch.F, ch.G, phi) > mbcd_objective(ch.H, ch.F, ch.G, rand)
    elapsed = time.perf_counter() - t0
    verdict(9, wins >= 95 and elapsed < 60, f"MBCD beats random in {wins}/100 (>=95), {elapsed:.1f} s")


def _siso_brute(y, gains, points, p_ap):
    out = np.empty((len(y), 2), dtype=np.int64)
    for n, v in enumerate(y):
        best = (np.inf, 0, 0)
        for k, gk in enumerate(gains):
            for m, s in enumerate(points):
                d = abs(v - np.sqrt(p_ap) * gk * s) ** 2
                if d < best[0]:
                    best = (d, m, k)
        out[n] = best[1:]
    return out


def _mimo_brute(y, eff, points, p_ap, nt):
    out = np.empty((len(y), 3), dtype=np.int64)
    for n, v in enumerate(y):
        best = (np.inf, 0, 0, 0)
        for k in range(eff.shape[0]):
            for s0 in range(len(points)):
                for s1 in range(len(points)):
                    s = np.array([points[s0], points[s1]])
                    d = np.sum(np.abs(v - np.sqrt(p_ap / nt) * eff[k] @ s) ** 2)
                    if d < best[0]:
                        best = (d, s0, s1, k)
        out[n] = best[1:]
    return out


def test_criterion_10_oracle_equivalences(verdict):
    rng = np.random.default_rng(110)
    t0 = time.perf_counter()
    const = qam(4)
    # quadratic-form identity
    worst, identity_ok = 0.0, True
    for _ in range(1000):
        L = int(rng.integers(1, 5))
        h = rng.uniform(0.1, 3.0, L)
        prob = build_distance_problem(h, const, SystemConfig(), order=4, normalize=False)
        a = rng.uniform(1, 10, 4 * L)
        q = int(rng.integers(prob.pairs.shape[0]))
        (k, m), (kh, mh) = divmod(int(prob.pairs[q, 0]), 4), divmod(int(prob.pairs[q, 1]), 4)
        cols = a.reshape(4, L)
        direct = abs(h @ (cols[k] * const.points[m] - cols[kh] * const.points[mh])) ** 2
        R = prob.R_matrices()[q]
        quad = prob.pair_distances(a)[q]          # a^T R a through the rank-one factor of R
        worst = max(worst, abs(quad - direct) / direct)
        dense = np.real(a @ R @ a)                # dense product: exact up to cancellation rounding
        scale = np.abs(a) @ np.abs(R) @ np.abs(a)
        identity_ok &= np.allclose(R, R.conj().T, rtol=0, atol=1e-15 * scale)
        identity_ok &= abs(dense - direct) <= 1e-12 * scale
    identity_ok &= worst <= 1e-10
    # SISO detector
    cfg = SystemConfig(p_ap=1e-5)
    ch = draw_channel(cfg, rng)
    cb, _ = design_codebook_sca(ch, const, cfg)
    gains = cb.gains(ch.h)
    q = rng.integers(0, 16, 1000)
    var = noise_variance(cb.a, cfg)[q // 4]
    y = codewords(gains, const, cfg.p_ap)[q] + np.sqrt(var / 2) * (rng.standard_normal(1000) + 1j * rng.standard_normal(1000))
    m, k = ml_detect(y, gains, const, cfg.p_ap)
    siso_ok = np.array_equal(np.column_stack([m, k]), _siso_brute(y, gains, const.points, cfg.p_ap))
    # MIMO detector
    mcfg = SystemConfig(n_elements=32, codebook_order=2, nt=2, nr=2, p_ap=dbm_to_watt(0))
    mch = gen_mimo_channels(mcfg, rng)
    sol = mbcd_phases(mch.H, mch.F, mch.G, 10)
    mcb, _ = design_mimo_codebook(mch, sol, const, mcfg)
    s_idx = rng.integers(0, 4, (1000, 2))
    kk = rng.integers(0, 2, 1000)
    my = mimo_transceive(s_idx, kk, mch, sol, mcb, const, mcfg, rng)
    s_hat, k_hat = mimo_ml_detect(my, mch, sol, mcb, const, mcfg)
    ref = _mimo_brute(my, effective_channels(mch, sol, mcb), const.points, mcfg.p_ap, 2)
    mimo_ok = np.array_equal(np.column_stack([s_hat, k_hat]), ref)
    # bit mapping
    bij_ok = True
    for R in range(2, 11):
        for b1 in range(1, R):
            M, A = 2**b1, 2 ** (R - b1)
            words = int_to_bits(np.arange(2**R), R)
            mm, kk2 = split_bits(words, M, A)
            bij_ok &= len(set(zip(mm.tolist(), kk2.tolist()))) == 2**R
            bij_ok &= np.array_equal(join_bits(mm, kk2, M, A), words)
    elapsed = time.perf_counter() - t0
    ok = identity_ok and siso_ok and mimo_ok and bij_ok and elapsed < 60
    verdict(10, ok, f"identity max rel err {worst:.1e}; SISO ML {siso_ok}; MIMO ML {mimo_ok}; "
                    f"bijection R<=10 {bij_ok}; {elapsed:.1f} s")


def test_criterion_11_determinism(verdict):
    cfg = SystemConfig()
    sweep = SweepSpec(dbm_grid(-10), bits_per_point=400_000, channels_per_point=100, master_seed=7, csi_delta=0.03)
    siso_1 = _run("c7-0.03", cfg, sweep)
    siso_2 = _run("c7-0.03", cfg, sweep, workers=2)
    mimo_1 = _run("c8-2", _c8_config(2), C8_SWEEP, MimoAdrmScheme())
    mimo_2 = _run("c8-2", _c8_config(2), C8_SWEEP, MimoAdrmScheme(), workers=2)
    same_siso = siso_1.csv_body() == siso_2.csv_body()
    same_mimo = mimo_1.csv_body() == mimo_2.csv_body()
    verdict(11, same_siso and same_mimo,
            f"workers 1 vs 2 identical CSV bodies: criterion-7 run {same_siso}, criterion-8 run {same_mimo}")
