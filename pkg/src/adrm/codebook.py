"""AAP codebook design: max-min distance QCQP solved by successive convex approximation.

The design works on the unit-norm direction of the group-gain vector ``h``; all
distances and ``tau`` values reported here are in those normalized units
(multiply by ``problem.scale`` for physical units).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._ipm import BarrierError, solve_barrier
from .channel import ChannelRealization
from .config import SystemConfig
from .modem import AapCodebook, Constellation
from .power import power_matrix

LOWER_MARGIN = 1e-6


class DesignError(RuntimeError):
    """Raised when the amplitude box and the power budget admit no feasible codebook."""


@dataclass
class DistanceProblem:
    """Pairwise distance quadratic forms plus the convex feasible set.

    Pair ``q`` contributes ``a^T R_q a = |V[q] . a|^2`` with ``R_q = V[q] V[q]^H``,
    which equals ``h_tilde^H h_tilde * (Psi_q - Psi_qh)(Psi_q - Psi_qh)^H``
    evaluated on real ``a``.
    """

    V: np.ndarray
    pairs: np.ndarray
    F: np.ndarray
    lower: float
    upper: float
    n_groups: int
    order: int
    scale: float = 1.0

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    def R_matrices(self) -> np.ndarray:
        return self.V[:, :, None] * np.conj(self.V[:, None, :])

    def pair_distances(self, a) -> np.ndarray:
        return np.abs(self.V @ np.asarray(a, dtype=float)) ** 2

    def min_distance(self, a) -> float:
        return float(self.pair_distances(a).min())

    def column_power(self, a) -> np.ndarray:
        """Per-column ``a_k^T F a_k`` as a fraction of the budget."""
        blocks = np.asarray(a, dtype=float).reshape(self.order, self.n_groups)
        return np.einsum("kl,lm,km->k", blocks, self.F, blocks)

    def is_feasible(self, a, tol=1e-8) -> bool:
        a = np.asarray(a, dtype=float)
        return bool(
            np.all(a >= self.lower - tol)
            and np.all(a <= self.upper + tol)
            and np.all(self.column_power(a) <= 1.0 + tol)
        )


@dataclass
class ScaTrace:
    tau_per_iter: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_distance_per_iter: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    converged: bool = False


def codeword_vectors(constellation: Constellation, order: int, n_groups: int) -> np.ndarray:
    """Stacked ``Psi_q = e_k kron (s_m 1_L)`` for ``q = k * M + m``; shape (A*M, A*L)."""
    M = constellation.order
    psi = np.zeros((order * M, order * n_groups), dtype=complex)
    for k in range(order):
        psi[k * M:(k + 1) * M, k * n_groups:(k + 1) * n_groups] = constellation.points[:, None]
    return psi


def build_distance_problem(h, constellation: Constellation, cfg: SystemConfig, F=None,
                           order=None, normalize=True) -> DistanceProblem:
    """Assemble the pairwise distance forms for gains ``h`` and power matrix ``F`` (watts).

    ``F`` defaults to zero RIS output power (box constraints only).
    """
    h = np.asarray(h, dtype=float)
    L = h.shape[0]
    A = cfg.codebook_order if order is None else order
    scale = float(h @ h) if normalize else 1.0
    h_dir = h / np.sqrt(scale) if normalize else h
    psi = codeword_vectors(constellation, A, L)
    iu, ju = np.triu_indices(psi.shape[0], k=1)
    h_tilde = np.tile(h_dir, A)
    V = h_tilde[None, :] * (psi[iu] - psi[ju])
    F = np.zeros((L, L)) if F is None else np.asarray(F, dtype=float)
    return DistanceProblem(
        V=V, pairs=np.stack([iu, ju], axis=1), F=F / cfg.p_a,
        lower=1.0 + LOWER_MARGIN, upper=float(cfg.alpha_max), n_groups=L, order=A, scale=scale,
    )


def problem_for_channel(channel: ChannelRealization, constellation, cfg, power_form="coherent"):
    """Distance problem on a SISO channel with its RIS output-power constraint.

    ``power_form="coherent"`` uses ``P_AP |p^H a|^2 + sigma_r^2 ||a||^2`` exactly;
    ``"diagonal"`` keeps only the ``|p_l|^2`` terms.
    """
    if power_form == "coherent":
        F = power_matrix(channel.p, cfg)
    elif power_form == "diagonal":
        F = cfg.p_ap * np.diag(np.abs(channel.p) ** 2) + cfg.sigma_r_sq * np.eye(channel.n_groups)
    else:
        raise ValueError(f"unknown power_form {power_form!r}")
    return build_distance_problem(channel.h, constellation, cfg, F=F)


def project_feasible(a, problem: DistanceProblem, margin=0.0) -> np.ndarray:
    """Clip into the box, then pull each over-budget column toward the all-minimum column.

    ``margin`` keeps the result strictly inside (fraction of the box width and budget).
    """
    L = problem.n_groups
    width = problem.upper - problem.lower
    lo = problem.lower + margin * width
    hi = problem.upper - margin * width
    blocks = np.clip(np.asarray(a, dtype=float), lo, hi).reshape(-1, L).copy()
    base = np.full(L, lo)
    budget = 1.0 - margin
    if base @ problem.F @ base > budget:
        raise DesignError(
            "power constraint infeasible: even the minimum amplitude "
            f"{problem.lower:.6g} exceeds the RIS output budget"
        )
    for k, col in enumerate(blocks):
        if col @ problem.F @ col <= budget:
            continue
        d = col - base
        # solve (base + s d)^T F (base + s d) = budget for s in [0, 1]
        qa = d @ problem.F @ d
        qb = 2 * base @ problem.F @ d
        qc = base @ problem.F @ base - budget
        s = (-qb + np.sqrt(qb * qb - 4 * qa * qc)) / (2 * qa)
        blocks[k] = base + min(max(s, 0.0), 1.0) * d
    return blocks.ravel()


def initial_point(problem: DistanceProblem, init="spread") -> np.ndarray:
    """Strictly feasible SCA start.

    ``"spread"`` gives column k the common gain ``lo + (c_max - lo)(k+1)/A`` where
    ``c_max`` is the largest feasible uniform gain. Identical columns (``"max"``:
    every entry alpha_max, scaled onto the budget) make every same-symbol pair's
    linearization vanish and freeze the iteration at tau = 0.
    """
    A, L = problem.order, problem.n_groups
    if isinstance(init, str):
        if init == "spread":
            ones = np.ones(L)
            c_max = min(problem.upper, 1.0 / np.sqrt(ones @ problem.F @ ones)) if problem.F.any() else problem.upper
            c_max = max(c_max, problem.lower)
            levels = problem.lower + (c_max - problem.lower) * (np.arange(A) + 1) / A
            a = np.repeat(levels, L)
        elif init == "max":
            a = np.full(A * L, problem.upper)
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        a = np.asarray(init, dtype=float).reshape(L, A).T.ravel()
    return project_feasible(a, problem, margin=1e-4)


def solve_sca_subproblem(problem: DistanceProblem, a_prev):
    """One convex step: maximize tau over the linearized pair constraints.

    Returns ``(a_next, tau)``. ``a_prev`` must be strictly feasible.
    """
    a_prev = np.asarray(a_prev, dtype=float)
    z = problem.V @ a_prev
    G = 2.0 * np.real(z[:, None] * np.conj(problem.V))
    c = np.abs(z) ** 2
    try:
        a, tau, _ = solve_barrier(G, c, problem.F, problem.lower, problem.upper, a_prev)
    except BarrierError as exc:
        raise DesignError(f"SCA subproblem failed: {exc}") from exc
    return a, tau


def run_sca(problem: DistanceProblem, init="spread", max_iter=100, tol=1e-4):
    """Iterate convex subproblems until tau stalls; returns ``(a, ScaTrace)``."""
    if problem.V.shape[0] == 0:
        raise DesignError("need at least two codewords to define a distance")
    a = initial_point(problem, init)
    taus, dists = [], [problem.min_distance(a)]
    converged = False
    for _ in range(max_iter):
        a_next, tau = solve_sca_subproblem(problem, a)
        d_next = problem.min_distance(a_next)
        taus.append(tau)
        if d_next < dists[-1]:
            # only reachable through solver round-off; keep the better iterate
            dists.append(dists[-1])
            converged = True
            break
        a = a_next
        dists.append(d_next)
        if len(taus) > 1 and abs(taus[-1] - taus[-2]) / max(1.0, abs(taus[-2])) < tol:
            converged = True
            break
    trace = ScaTrace(np.array(taus), np.array(dists), len(taus), converged)
    return a, trace


def to_codebook(a, problem: DistanceProblem) -> AapCodebook:
    return AapCodebook(np.asarray(a).reshape(problem.order, problem.n_groups).T.copy())


def design_codebook_sca(channel: ChannelRealization, constellation: Constellation, cfg: SystemConfig,
                        power_form="coherent", init="spread", max_iter=100, tol=1e-4):
    """Design an L x A codebook for one channel realization; returns ``(AapCodebook, ScaTrace)``."""
    problem = problem_for_channel(channel, constellation, cfg, power_form)
    a, trace = run_sca(problem, init=init, max_iter=max_iter, tol=tol)
    return to_codebook(a, problem), trace


def random_feasible(problem: DistanceProblem, rng, size=None) -> np.ndarray:
    """Uniform draws in the amplitude box, repaired onto the power-feasible set."""
    n = 1 if size is None else size
    raw = rng.uniform(problem.lower, problem.upper, size=(n, problem.dim))
    out = np.array([project_feasible(r, problem) for r in raw])
    return out[0] if size is None else out


def design_codebook_ga(channel: ChannelRealization, constellation: Constellation, cfg: SystemConfig,
                       rng, population=50, generations=200, tournament=3, blend=0.5,
                       mutation_scale=0.1, power_form="coherent", problem=None):
    """Real-coded genetic algorithm maximizing the same min-distance objective.

    Tournament selection, BLX-``blend`` crossover, Gaussian mutation, elitism of
    one, infeasible children repaired by projection. Returns ``(AapCodebook, best_min_distance)``.
    """
    if problem is None:
        problem = problem_for_channel(channel, constellation, cfg, power_form)
    n = problem.dim
    width = problem.upper - problem.lower
    pop = random_feasible(problem, rng, population)
    fit = np.array([problem.min_distance(x) for x in pop])
    for _ in range(generations):
        elite = pop[np.argmax(fit)].copy()
        elite_fit = fit.max()
        contenders = rng.integers(0, population, size=(2, population, tournament))
        parents = [pop[c[np.arange(population), np.argmax(fit[c], axis=1)]] for c in contenders]
        lo = np.minimum(parents[0], parents[1])
        hi = np.maximum(parents[0], parents[1])
        span = hi - lo
        children = rng.uniform(lo - blend * span, hi + blend * span)
        mutate = rng.random(children.shape) < 1.0 / n
        children = children + mutate * rng.normal(0.0, mutation_scale * width, children.shape)
        pop = np.array([project_feasible(x, problem) for x in children])
        fit = np.array([problem.min_distance(x) for x in pop])
        worst = np.argmin(fit)
        pop[worst], fit[worst] = elite, elite_fit
    best = np.argmax(fit)
    return to_codebook(pop[best], problem), float(fit[best])
