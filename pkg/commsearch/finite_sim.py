"""
Finite-dimension simulation
Monte Carlo payoff P_d(kappa, n), grid-search policy optimization,
performance gaps against the mapped asymptotic policy and the weighted
two-subspace payoff

Replication r draws its search noise X_i from stream (seed, r) and its
message and recommendation fidelities from stream (seed, r) keyed by kappa.
Every grid cell therefore sees the same X_i (common random numbers), and a
cell's value does not depend on which other cells were evaluated with it.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numba
import numpy as np
from tqdm import tqdm

from .asymptotic import map_to_finite, solve_comm_only, solve_joint, solve_search_only
from .directional import kappa_from_rho, kl_divergence, rho_from_kappa
from .errors import DegenerateWeightError, DomainError, SamplerFailure, require_dim, require_kappa, require_set_size
from .hparams import hparams as hp
from .policies import AsymptoticPolicy, InteractionPolicy, ScaledCosts
from .sampling import RngStream, _draw_w, _draw_x

logger = logging.getLogger(__name__)

DEFAULT_RHO_GRID = tuple(round(0.05 * k, 2) for k in range(20)) + (0.97,)


@dataclass(frozen=True)
class SimConfig:
    dim: int
    replications: int = hp.replications
    seed: int = hp.seed
    max_n: int = hp.max_n
    namespace: int = 0
    workers: int = hp.workers
    show_progress: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dim", require_dim(self.dim))
        if int(self.replications) != self.replications or self.replications < 2:
            raise DomainError(f"replications must be an integer >= 2, got {self.replications}")
        if self.replications < hp.min_reported_replications:
            logger.warning("only %d replications; estimates below %d are not meant for reporting",
                           self.replications, hp.min_reported_replications)
        require_set_size(self.max_n, hp.max_set_size)
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        RngStream(self.seed, 0, self.namespace)

    def noise_stream(self, replication: int) -> RngStream:
        return RngStream(self.seed, replication, self.namespace)

    def fidelity_stream(self, replication: int, kappa: float) -> RngStream:
        return self.noise_stream(replication).keyed(kappa)


@dataclass(frozen=True)
class PayoffEstimate:
    mean: float
    std_error: float
    utility: float
    search_cost: float
    comm_cost: float
    parts: Tuple["PayoffEstimate", ...] = field(default=(), repr=False)

    @property
    def components(self) -> Tuple[float, float, float]:
        return self.utility, self.search_cost, self.comm_cost


class GapMode(Enum):
    JOINT = "Joint"
    SEARCH_ONLY = "SearchOnly"
    COMM_ONLY = "CommOnly"


@dataclass(frozen=True)
class GapReport:
    d: int
    mode: GapMode
    policy_opt: InteractionPolicy
    p_opt: PayoffEstimate
    policy_asym: InteractionPolicy
    p_asym: PayoffEstimate
    asymptotic_value: float

    @property
    def gap(self) -> float:
        return self.p_opt.mean - self.p_asym.mean


@dataclass(frozen=True)
class PolicyCell:
    policy: InteractionPolicy
    estimate: PayoffEstimate


# ------------------------------
# GRIDS
# ------------------------------
def default_kappa_grid(dim: int) -> List[float]:
    """Precisions whose message mode sweeps rho from 0 to 0.97."""
    return [0.0] + [kappa_from_rho(rho, dim) for rho in DEFAULT_RHO_GRID[1:]]


def default_n_grid(dim: int, max_n: int) -> List[int]:
    """1, 2, 3, 5, 8, 13, ... up to min(e^{d/2}, max_n)."""
    limit = math.exp(min(0.5 * dim, 700.0))
    if limit > max_n:
        logger.warning("set-size grid clamped to max_n=%d (e^{d/2}=%.3g at d=%d)", max_n, limit, dim)
    limit = min(limit, max_n)
    grid, a, b = [1], 1, 2
    while b <= limit:
        grid.append(b)
        a, b = b, a + b
    return grid


# ------------------------------
# SIMULATION CORE
# ------------------------------
@numba.njit(cache=True)
def _prefix_max(w, w_i, x_i, checkpoints, out):
    """Running maximum of the utilities, recorded at each checkpoint set size."""
    s = math.sqrt(1.0 - w * w)
    best = -np.inf
    k = 0
    for i in range(w_i.size):
        u = w * w_i[i] + s * math.sqrt(1.0 - w_i[i] * w_i[i]) * x_i[i]
        if u > best:
            best = u
        while k < checkpoints.size and checkpoints[k] == i + 1:
            out[k] = best
            k += 1


def _simulate_block(kappas: np.ndarray, checkpoints: np.ndarray, start: int, stop: int,
                    cfg: SimConfig) -> np.ndarray:
    d, n_max = cfg.dim, int(checkpoints[-1])
    block = np.empty((stop - start, kappas.size, checkpoints.size))
    for r in range(start, stop):
        try:
            x_i = _draw_x(d, n_max, cfg.noise_stream(r).generator)
            for j, kappa in enumerate(kappas):
                gen = cfg.fidelity_stream(r, kappa).generator
                w = _draw_w(kappa, d, 1, gen)[0]
                w_i = _draw_w(kappa, d, n_max, gen)
                _prefix_max(w, w_i, x_i, checkpoints, block[r - start, j])
        except SamplerFailure as exc:
            raise exc.at_replication(r) from exc
    return block


def _chunks(cfg: SimConfig) -> List[Tuple[int, int]]:
    count = max(1, cfg.workers * 4) if cfg.workers > 1 else max(1, min(cfg.replications // 500, 50))
    edges = np.linspace(0, cfg.replications, count + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_blocks(task, cfg: SimConfig, label: str) -> List[np.ndarray]:
    """Evaluate task(start, stop) over replication chunks; results kept in chunk order."""
    chunks = _chunks(cfg)
    results: List[Optional[np.ndarray]] = [None] * len(chunks)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            futures = {pool.submit(task, a, b): k for k, (a, b) in enumerate(chunks)}
            for future in tqdm(as_completed(futures), total=len(futures), desc=label, disable=not cfg.show_progress):
                results[futures[future]] = future.result()
    else:
        for k, (a, b) in enumerate(tqdm(chunks, desc=label, disable=not cfg.show_progress)):
            results[k] = task(a, b)
    return results


def _summarise(samples: np.ndarray) -> Tuple[float, float]:
    """Mean (exactly rounded sum) and standard error over the first axis."""
    count = samples.shape[0]
    mean = math.fsum(samples.tolist()) / count
    return mean, float(np.std(samples, ddof=1)) / math.sqrt(count)


def _utility_table(kappas: Sequence[float], ns: Sequence[int], cfg: SimConfig):
    """Estimated E[max_i <h, theta_i>] for every (kappa, n); arrays of shape (K, N)."""
    kappas = np.asarray([require_kappa(k) for k in kappas], dtype=float)
    ns = [require_set_size(n, cfg.max_n) for n in ns]
    if kappas.size == 0 or not ns:
        raise DomainError("grids must be nonempty")
    checkpoints = np.unique(np.asarray(ns, dtype=np.int64))
    column = {int(c): k for k, c in enumerate(checkpoints)}

    blocks = _run_blocks(lambda a, b: _simulate_block(kappas, checkpoints, a, b, cfg), cfg, "replications")
    samples = np.concatenate(blocks, axis=0)
    means = np.empty((kappas.size, len(ns)))
    errors = np.empty_like(means)
    for i in range(kappas.size):
        for j, n in enumerate(ns):
            means[i, j], errors[i, j] = _summarise(samples[:, i, column[n]])
    return means, errors


def _estimate(utility: float, std_error: float, n: int, kappa: float, lambda_s: float, lambda_c: float,
              dim: int) -> PayoffEstimate:
    search_cost = lambda_s * math.log(n)
    comm_cost = lambda_c * kl_divergence(kappa, dim)
    return PayoffEstimate(mean=utility - search_cost - comm_cost, std_error=std_error, utility=utility,
                          search_cost=search_cost, comm_cost=comm_cost)


# ------------------------------
# OPERATIONS
# ------------------------------
def estimate_max_utility(kappa: float, n: int, cfg: SimConfig) -> Tuple[float, float]:
    means, errors = _utility_table([kappa], [n], cfg)
    return float(means[0, 0]), float(errors[0, 0])


def payoff(kappa: float, n: int, lambda_s: float, lambda_c: float, cfg: SimConfig) -> PayoffEstimate:
    """P_d(kappa, n); only the utility is random, both costs are exact."""
    utility, std_error = estimate_max_utility(kappa, n, cfg)
    return _estimate(utility, std_error, int(n), float(kappa), lambda_s, lambda_c, cfg.dim)


def payoff_grid(lambda_s: float, lambda_c: float, cfg: SimConfig, kappa_grid: Optional[Sequence[float]] = None,
                n_grid: Optional[Sequence[int]] = None) -> List[PolicyCell]:
    kappa_grid = default_kappa_grid(cfg.dim) if kappa_grid is None else list(kappa_grid)
    n_grid = default_n_grid(cfg.dim, cfg.max_n) if n_grid is None else list(n_grid)
    means, errors = _utility_table(kappa_grid, n_grid, cfg)
    return _cells(means, errors, kappa_grid, n_grid, lambda_s, lambda_c, cfg.dim)


def _cells(means: np.ndarray, errors: np.ndarray, kappa_grid: Sequence[float], n_grid: Sequence[int],
           lambda_s: float, lambda_c: float, dim: int) -> List[PolicyCell]:
    cells = []
    for i, kappa in enumerate(kappa_grid):
        for j, n in enumerate(n_grid):
            estimate = _estimate(means[i, j], errors[i, j], int(n), float(kappa), lambda_s, lambda_c, dim)
            cells.append(PolicyCell(InteractionPolicy(float(kappa), int(n)), estimate))
    return cells


def best_cell(cells: Sequence[PolicyCell]) -> PolicyCell:
    # ties go to the smaller set, then the smaller precision
    return min(cells, key=lambda c: (-c.estimate.mean, c.policy.n, c.policy.kappa))


def optimize_policy(lambda_s: float, lambda_c: float, cfg: SimConfig, kappa_grid: Optional[Sequence[float]] = None,
                    n_grid: Optional[Sequence[int]] = None) -> Tuple[InteractionPolicy, PayoffEstimate]:
    """Grid argmax of P_d under common random numbers."""
    best = best_cell(payoff_grid(lambda_s, lambda_c, cfg, kappa_grid, n_grid))
    return best.policy, best.estimate


def _asymptotic_policy(costs: ScaledCosts, mode: GapMode) -> Tuple[AsymptoticPolicy, float]:
    if mode is GapMode.SEARCH_ONLY:
        alpha, value = solve_search_only(costs.c_s)
        return AsymptoticPolicy(0.0, alpha), value
    if mode is GapMode.COMM_ONLY:
        rho, value = solve_comm_only(costs.c_c)
        return AsymptoticPolicy(rho, 0.0), value
    solution = solve_joint(costs)
    return solution.policy, solution.value


def performance_gap(costs: ScaledCosts, cfg: SimConfig, mode: GapMode = GapMode.JOINT) -> GapReport:
    """Grid optimum against the mapped asymptotic policy at d = cfg.dim.

    The mapped (kappa, n) joins the grid, so both estimates come from the same
    common-random-number table and the gap is nonnegative cell for cell.
    """
    d = cfg.dim
    lambda_s, lambda_c = costs.lambdas(d)
    policy, value = _asymptotic_policy(costs, mode)
    mapped = map_to_finite(policy, d)
    n_asym = mapped.n
    if n_asym > cfg.max_n:
        logger.warning("mapped set size %d clamped to max_n=%d at d=%d", n_asym, cfg.max_n, d)
        n_asym = cfg.max_n
    mapped = InteractionPolicy(mapped.kappa, n_asym)

    if mode is GapMode.SEARCH_ONLY:
        kappa_grid = [0.0]
    else:
        kappa_grid = sorted(set(default_kappa_grid(d)) | {mapped.kappa})
    if mode is GapMode.COMM_ONLY:
        n_grid = [1]
    else:
        cap = min(cfg.max_n, max(16 * n_asym, 64))
        n_grid = sorted({n for n in default_n_grid(d, cfg.max_n) if n <= cap} | {n_asym})

    cells = payoff_grid(lambda_s, lambda_c, cfg, kappa_grid, n_grid)
    best = best_cell(cells)
    asym = next(c for c in cells if c.policy == mapped)
    return GapReport(d=d, mode=mode, policy_opt=best.policy, p_opt=best.estimate, policy_asym=mapped,
                     p_asym=asym.estimate, asymptotic_value=value)


def weighted_payoff(mu: float, kappas: Tuple[float, float], ns: Tuple[int, int],
                    lambdas: Tuple[float, float, float], dims: Tuple[int, int], cfg: SimConfig) -> PayoffEstimate:
    """mu^2 P_{d1}(kappa_1, n_1) + (1 - mu^2) P_{d2}(kappa_2, n_2) with costs rescaled per subspace."""
    mu = float(mu)
    if not 0.0 < mu < 1.0:
        raise DegenerateWeightError(f"mu must lie strictly between 0 and 1, got {mu}", mu=mu)
    if ns[0] * ns[1] > cfg.max_n:
        raise DomainError(f"n1 * n2 = {ns[0] * ns[1]} exceeds max_n={cfg.max_n}", n1=ns[0], n2=ns[1])
    lambda_s, lambda_1c, lambda_2c = lambdas
    w1, w2 = mu * mu, 1.0 - mu * mu

    first = payoff(kappas[0], ns[0], lambda_s / w1, lambda_1c / w1, replace(cfg, dim=dims[0]))
    second = payoff(kappas[1], ns[1], lambda_s / w2, lambda_2c / w2,
                    replace(cfg, dim=dims[1], namespace=cfg.namespace + 1))
    return PayoffEstimate(
        mean=w1 * first.mean + w2 * second.mean,
        std_error=math.sqrt((w1 * first.std_error) ** 2 + (w2 * second.std_error) ** 2),
        utility=w1 * first.utility + w2 * second.utility,
        search_cost=w1 * first.search_cost + w2 * second.search_cost,
        comm_cost=w1 * first.comm_cost + w2 * second.comm_cost,
        parts=(first, second),
    )


# ------------------------------
# CROSS-CHECKS AND SWEEPS
# ------------------------------
def estimate_tilted_utility(kappa: float, n: int, v: float, cfg: SimConfig) -> Tuple[float, float]:
    """Monte Carlo E[max_i <h, theta_i>] for tilted recommendations."""
    kappa = require_kappa(kappa)
    n = require_set_size(n, cfg.max_n)
    if not -1.0 <= v <= 1.0:
        raise DomainError(f"tilt must lie in [-1, 1], got {v}", v=v)
    spread = math.sqrt(1.0 - v * v)

    def task(a, b):
        out = np.empty(b - a)
        for r in range(a, b):
            top = np.max(_draw_x(cfg.dim, n, cfg.noise_stream(r).generator))
            w = _draw_w(kappa, cfg.dim, 1, cfg.fidelity_stream(r, kappa).generator)[0]
            out[r - a] = v * w + spread * math.sqrt(1.0 - w * w) * top
        return out

    return _summarise(np.concatenate(_run_blocks(task, cfg, "tilted")))


def expected_max_orthogonal_mc(n: int, cfg: SimConfig) -> Tuple[float, float]:
    n = require_set_size(n, cfg.max_n)

    def task(a, b):
        return np.array([np.max(_draw_x(cfg.dim, n, cfg.noise_stream(r).generator)) for r in range(a, b)])

    return _summarise(np.concatenate(_run_blocks(task, cfg, "order statistic")))


def convergence_sweep(costs: ScaledCosts, dims: Sequence[int], cfg: SimConfig,
                      mode: GapMode = GapMode.JOINT) -> List[GapReport]:
    """Performance gap and optimal finite policy as d grows."""
    return [performance_gap(costs, replace(cfg, dim=d), mode) for d in dims]


@dataclass(frozen=True)
class FiniteSweepRow:
    d: int
    c_s: float
    c_c: float
    policy: InteractionPolicy
    estimate: PayoffEstimate

    @property
    def rho_eff(self) -> float:
        return rho_from_kappa(self.policy.kappa, self.d)

    @property
    def alpha_eff(self) -> float:
        return math.log(self.policy.n) / self.d


def finite_sweep(c_s: float, c_c_grid: Sequence[float], dims: Sequence[int], cfg: SimConfig) -> List[FiniteSweepRow]:
    """Optimal finite policy along a communication-cost sweep.

    The costs do not enter the simulation, so one utility table per dimension
    serves the whole sweep.
    """
    rows = []
    for d in dims:
        sub = replace(cfg, dim=d)
        kappa_grid, n_grid = default_kappa_grid(d), default_n_grid(d, sub.max_n)
        means, errors = _utility_table(kappa_grid, n_grid, sub)
        for c_c in c_c_grid:
            lambda_s, lambda_c = ScaledCosts(c_s, c_c).lambdas(d)
            best = best_cell(_cells(means, errors, kappa_grid, n_grid, lambda_s, lambda_c, d))
            rows.append(FiniteSweepRow(d=d, c_s=float(c_s), c_c=float(c_c), policy=best.policy,
                                       estimate=best.estimate))
    return rows
