"""Log-barrier interior-point method for the linearized max-min subproblem.

Solves::

    maximize    tau
    subject to  G a - tau >= c                  (one row per codeword pair)
                a_k^T F a_k <= 1                 (one per column block of a)
                lo <= a <= hi

with damped Newton steps on the barrier objective. ``a`` stacks A blocks of
length L; F is L x L symmetric positive definite.
"""

from __future__ import annotations

import numpy as np


class BarrierError(RuntimeError):
    pass


def _slacks(a, tau, G, c, F, lo, hi, L):
    blocks = a.reshape(-1, L)
    s_lin = G @ a - tau - c
    s_pow = 1.0 - np.einsum("kl,lm,km->k", blocks, F, blocks)
    return s_lin, s_pow, a - lo, hi - a


def _feasible(sl):
    return min(s.min() for s in sl) > 0


def _barrier_value(t, tau, sl):
    return -t * tau - np.log(np.concatenate(sl)).sum()


def solve_barrier(G, c, F, lo, hi, a0, *, gap_tol=1e-9, mu=20.0, max_newton=200):
    """Return ``(a, tau, duality_gap_bound)`` for a strictly feasible start ``a0``."""
    G = np.asarray(G, dtype=float)
    c = np.asarray(c, dtype=float)
    a = np.array(a0, dtype=float)
    n = a.size
    L = F.shape[0]
    s_pow0 = 1.0 - np.einsum("kl,lm,km->k", a.reshape(-1, L), F, a.reshape(-1, L))
    if np.any(a <= lo) or np.any(a >= hi) or np.any(s_pow0 <= 0):
        raise BarrierError("starting point is not strictly feasible")

    lin0 = G @ a - c
    tau = float(lin0.min() - max(1e-3 * abs(lin0.min()), 1e-9))
    m = G.shape[0] + n * 2 + a.size // L
    t = 1.0 / max(1.0, abs(tau))
    F2 = 2.0 * F

    while True:
        for _ in range(max_newton):
            s_lin, s_pow, s_lo, s_hi = sl = _slacks(a, tau, G, c, F, lo, hi, L)
            inv = 1.0 / s_lin
            inv2 = inv * inv
            blocks = a.reshape(-1, L)
            Fa = blocks @ F2  # gradient of a_k^T F a_k, shape (A, L)

            grad = np.empty(n + 1)
            grad[:n] = -G.T @ inv + (Fa / s_pow[:, None]).ravel() - 1.0 / s_lo + 1.0 / s_hi
            grad[n] = -t + inv.sum()

            H = np.empty((n + 1, n + 1))
            H[:n, :n] = (G.T * inv2) @ G
            A = blocks.shape[0]
            pw = (F2[None] / s_pow[:, None, None]
                  + Fa[:, :, None] * Fa[:, None, :] / (s_pow**2)[:, None, None])
            Hv = H[:n, :n].reshape(A, L, A, L)
            Hv[np.arange(A), :, np.arange(A), :] += pw
            H[np.arange(n), np.arange(n)] += 1.0 / s_lo**2 + 1.0 / s_hi**2
            H[:n, n] = H[n, :n] = -G.T @ inv2
            H[n, n] = inv2.sum()

            try:
                step = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H, grad, rcond=None)[0]
            decrement = -grad @ step
            if decrement / 2.0 <= 1e-12:
                break

            f0 = _barrier_value(t, tau, sl)
            alpha = 1.0
            while True:
                a_new = a + alpha * step[:n]
                tau_new = tau + alpha * step[n]
                sl_new = _slacks(a_new, tau_new, G, c, F, lo, hi, L)
                if _feasible(sl_new) and _barrier_value(t, tau_new, sl_new) <= f0 - 0.25 * alpha * decrement:
                    break
                alpha *= 0.5
                if alpha < 1e-14:
                    break
            if alpha < 1e-14:
                break
            a, tau = a_new, tau_new

        gap = m / t
        if gap <= gap_tol * max(1.0, abs(tau)):
            return a, float(tau), gap
        t *= mu
