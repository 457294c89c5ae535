"""
Asymptotic optimizer
Rate function, utility frontier f(rho, alpha) and the high-dimensional
communication/search problem with its pure-policy closed forms

The frontier is maximised in u = atanh(w). On that scale the constraint
function r and the objective only involve log cosh, which stays finite for
alpha far beyond what any cost pair can make optimal.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy import optimize

from .errors import DegenerateWeightError, DomainError, require_dim, require_positive, require_rho, require_set_size
from .hparams import hparams as hp
from .policies import AsymptoticPolicy, InteractionPolicy, JointSolution, Regime, ScaledCosts

logger = logging.getLogger(__name__)

_LOG2 = math.log(2.0)


def _logcosh(u: float) -> float:
    a = abs(u)
    return a + math.log1p(math.exp(-2.0 * a)) - _LOG2


def _validate_alpha(alpha) -> float:
    alpha = float(alpha)
    if not (alpha >= 0.0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be finite and >= 0, got {alpha}", alpha=alpha)
    return alpha


# ------------------------------
# RATE FUNCTION AND FRONTIER
# ------------------------------
def rate_function(rho: float, w: float, x: float) -> float:
    """Large-deviation cost of observing (W, X) = (w, x) when the message mode is rho."""
    rho = require_rho(rho)
    if not (-1.0 < w < 1.0 and -1.0 < x < 1.0):
        return math.inf
    value = (-rho * (w - rho) / (1.0 - rho * rho)
             - 0.5 * math.log1p(-w * w) - 0.5 * math.log1p(-x * x) + 0.5 * math.log1p(-rho * rho))
    return max(value, 0.0)


class _Frontier:
    """Scalar pieces of the frontier at a fixed rho, in u = atanh(w)."""

    def __init__(self, rho: float):
        self.rho = rho
        self.u_rho = math.atanh(rho)
        self.lc_rho = _logcosh(self.u_rho)

    def rate(self, u: float) -> float:
        """r(u): rate of W = tanh(u) alone."""
        du = u - self.u_rho
        shift = self.lc_rho - _logcosh(u)
        sinh_part = 0.5 * (math.exp(du + shift) - math.exp(-du + shift))
        return -self.rho * sinh_part + _logcosh(u) - self.lc_rho

    def value(self, u: float, alpha: float) -> Tuple[float, float]:
        slack = max(alpha - self.rate(u), 0.0)
        x = math.sqrt(-math.expm1(-2.0 * slack))
        scale = math.exp(-self.lc_rho - _logcosh(u))  # sqrt(1 - rho^2) sqrt(1 - w^2)
        return self.rho * math.tanh(u) + scale * x, x

    def feasible(self, alpha: float) -> Tuple[float, float]:
        """Endpoints of {u : r(u) <= alpha}; r is zero at u_rho and grows on both sides."""
        ends = []
        for side in (-1.0, 1.0):
            step = 1.0
            while self.rate(self.u_rho + side * step) < alpha:
                step *= 2.0
            a, b = sorted((self.u_rho, self.u_rho + side * step))
            ends.append(optimize.brentq(lambda u: self.rate(u) - alpha, a, b, xtol=1e-14))
        return ends[0], ends[1]


def _frontier(rho: float, alpha: float) -> Tuple[float, float, float]:
    if alpha == 0.0:
        return rho * rho, rho, 0.0
    piece = _Frontier(rho)
    lo, hi = piece.feasible(alpha)
    grid = np.linspace(lo, hi, hp.frontier_scan_points)
    scanned = [piece.value(u, alpha)[0] for u in grid]
    k = int(np.argmax(scanned))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    result = optimize.minimize_scalar(lambda u: -piece.value(u, alpha)[0], bounds=(a, b),
                                      method="bounded", options={"xatol": 1e-12})
    u_best = float(result.x) if -result.fun >= scanned[k] else float(grid[k])
    value, x = piece.value(u_best, alpha)
    return min(value, 1.0), math.tanh(u_best), x


def utility_frontier(rho: float, alpha: float) -> Tuple[float, float, float]:
    """f(rho, alpha) with its maximiser (w, x).

    Maximises rho w + sqrt(1 - rho^2) sqrt(1 - w^2) x subject to the rate
    constraint. For fixed w the constraint binds, which gives x in closed form
    and leaves a bracketed 1-D search over w.
    """
    return _frontier(require_rho(rho), _validate_alpha(alpha))


def _frontier_rows(rhos: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Coarse f on a (rho, alpha) grid, maximising over a fixed w lattice."""
    lattice = np.linspace(-1.0, 1.0, hp.frontier_w_points + 2)[1:-1]
    values = np.empty((rhos.size, alphas.size))
    for i, rho in enumerate(rhos):
        w = np.append(lattice, rho)
        rate = (-rho * (w - rho) / (1.0 - rho * rho) - 0.5 * np.log1p(-w * w) + 0.5 * math.log1p(-rho * rho))
        slack = alphas[:, None] - rate[None, :]
        x = np.sqrt(-np.expm1(-2.0 * np.clip(slack, 0.0, None)))
        objective = rho * w + math.sqrt(1.0 - rho * rho) * np.sqrt(1.0 - w * w) * x
        values[i] = np.max(np.where(slack >= 0.0, objective, -np.inf), axis=1)
    return values


# ------------------------------
# PURE POLICIES
# ------------------------------
def solve_search_only(c_s: float) -> Tuple[float, float]:
    """(alpha*, OPT_Search) with no communication."""
    c = require_positive("c_s", c_s)
    alpha = 0.5 * math.log(0.5 + math.sqrt(0.25 + 1.0 / (c * c)))
    return alpha, math.sqrt(-math.expm1(-2.0 * alpha)) - c * alpha


def solve_comm_only(c_c: float) -> Tuple[float, float]:
    """(rho*, OPT_Comm) with a single recommendation."""
    c = require_positive("c_c", c_c)
    if c >= 2.0:
        return 0.0, 0.0
    return math.sqrt(1.0 - 0.5 * c), 1.0 - 0.5 * c * math.log(2.0 * math.e / c)


# ------------------------------
# JOINT PROBLEM
# ------------------------------
def _objective(costs: ScaledCosts, rho: float, alpha: float) -> float:
    return _frontier(rho, alpha)[0] - costs.c_s * alpha + 0.5 * costs.c_c * math.log1p(-rho * rho)


def _refine(costs: ScaledCosts, start: Tuple[float, float], box: List[Tuple[float, float]]) -> Tuple[float, float, float]:
    def loss(p):
        rho = min(max(p[0], 0.0), box[0][1])
        alpha = min(max(p[1], 0.0), box[1][1])
        return -_objective(costs, rho, alpha)

    result = optimize.minimize(loss, np.asarray(start, dtype=float), method="Nelder-Mead", bounds=box,
                               options={"xatol": hp.refine_xatol, "fatol": hp.refine_fatol,
                                        "maxiter": hp.refine_maxiter})
    rho = min(max(float(result.x[0]), 0.0), box[0][1])
    alpha = min(max(float(result.x[1]), 0.0), box[1][1])
    best = _objective(costs, rho, alpha)

    # alternate 1-D bounded Brent steps; Nelder-Mead stalls on the box faces
    for _ in range(hp.polish_sweeps):
        step = optimize.minimize_scalar(lambda r: -_objective(costs, r, alpha), bounds=box[0],
                                        method="bounded", options={"xatol": hp.refine_xatol})
        if -step.fun > best:
            rho, best = float(step.x), -float(step.fun)
        step = optimize.minimize_scalar(lambda a: -_objective(costs, rho, a), bounds=box[1],
                                        method="bounded", options={"xatol": hp.refine_xatol})
        if -step.fun > best:
            alpha, best = float(step.x), -float(step.fun)
    return rho, alpha, best


def solve_joint(costs: ScaledCosts) -> JointSolution:
    """Global maximiser of f(rho, alpha) - c_s alpha + c_c/2 log(1 - rho^2).

    The maximiser lies in rho <= sqrt(1 - e^{-2/c_c}), alpha <= 1/c_s. A coarse
    grid over that box seeds local refinement from the best cell and from the
    best cell with rho > 0, and the pure-policy optima join as candidates.
    """
    rho_max = costs.rho_bound(hp.rho_shrink)
    alpha_max = costs.alpha_bound()
    box = [(0.0, rho_max), (0.0, alpha_max)]

    rhos = np.linspace(0.0, rho_max, hp.joint_grid_points)
    alphas = np.linspace(0.0, alpha_max, hp.joint_grid_points)
    coarse = (_frontier_rows(rhos, alphas) - costs.c_s * alphas[None, :]
              + 0.5 * costs.c_c * np.log1p(-rhos * rhos)[:, None])

    starts = [np.unravel_index(np.argmax(coarse), coarse.shape)]
    hybrid = np.unravel_index(np.argmax(coarse[1:]), coarse[1:].shape)
    starts.append((hybrid[0] + 1, hybrid[1]))

    alpha_s, value_s = solve_search_only(costs.c_s)
    rho_c, value_c = solve_comm_only(costs.c_c)
    candidates = [(0.0, alpha_s, value_s), (min(rho_c, rho_max), 0.0, _objective(costs, min(rho_c, rho_max), 0.0))]
    for i, j in dict.fromkeys(starts):
        candidates.append(_refine(costs, (rhos[i], alphas[j]), box))
    rho, alpha, value = max(candidates, key=lambda c: c[2])
    logger.debug("solve_joint c_s=%g c_c=%g -> rho=%.9g alpha=%.9g value=%.12g",
                 costs.c_s, costs.c_c, rho, alpha, value)

    if rho < hp.zero_tolerance or value - value_s < hp.tie_tolerance:
        return JointSolution(AsymptoticPolicy(0.0, alpha_s), value_s, Regime.SEARCH_ONLY)
    if alpha < hp.zero_tolerance:
        return JointSolution(AsymptoticPolicy(rho, alpha), value, Regime.FRICTIONLESS_BOUNDARY)
    return JointSolution(AsymptoticPolicy(rho, alpha), value, Regime.HYBRID)


def joint_gain(costs: ScaledCosts, solution: Optional[JointSolution] = None) -> float:
    """How much the joint policy adds over the better of the two pure ones.

    Pass an already computed `solution` for the same costs to skip the solve.
    """
    pure = max(solve_search_only(costs.c_s)[1], solve_comm_only(costs.c_c)[1])
    if solution is None:
        solution = solve_joint(costs)
    return max(solution.value - pure, 0.0)


# ------------------------------
# FINITE DIMENSION MAPPING
# ------------------------------
def map_to_finite(policy: AsymptoticPolicy, dim: int) -> InteractionPolicy:
    """kappa = rho/(1 - rho^2) (d - 3), n = floor(e^{d alpha})."""
    d = require_dim(dim)
    exponent = d * policy.alpha
    if exponent > 700.0:
        raise DomainError(f"set size e^{exponent:.1f} overflows", alpha=policy.alpha, dim=d)
    kappa = policy.rho / (1.0 - policy.rho ** 2) * (d - 3)
    # the nudge keeps floor(e^{log n}) == n when alpha came from alpha_from_n
    return InteractionPolicy(kappa=kappa, n=max(1, math.floor(math.exp(exponent) * (1.0 + 1e-12))))


def alpha_from_n(n: int, dim: int) -> float:
    return math.log(require_set_size(n)) / require_dim(dim)


# ------------------------------
# SWITCHING CURVE
# ------------------------------
@dataclass(frozen=True)
class SwitchingThreshold:
    c_s: float
    threshold: float
    bracketed: bool


def switching_threshold(c_s: float) -> SwitchingThreshold:
    """Smallest c_c at which the joint optimum stops communicating.

    Bisection over (0, c_s]; rho* is nonincreasing in c_c so the search-only
    set is an interval reaching up to c_s.
    """
    c_s = require_positive("c_s", c_s)

    def search_only(c_c: float) -> bool:
        return solve_joint(ScaledCosts(c_s, c_c)).regime is Regime.SEARCH_ONLY

    lo, hi = hp.switching_floor * c_s, c_s
    if not search_only(hi):
        return SwitchingThreshold(c_s, c_s, True)
    if search_only(lo):
        logger.warning("switching threshold not bracketed for c_s=%g: search-only already at c_c=%g", c_s, lo)
        return SwitchingThreshold(c_s, 0.0, False)
    while hi - lo > hp.switching_rtol * c_s:
        mid = 0.5 * (lo + hi)
        if search_only(mid):
            hi = mid
        else:
            lo = mid
    return SwitchingThreshold(c_s, hi, True)


# ------------------------------
# WEIGHTED PREFERENCES
# ------------------------------
@dataclass(frozen=True)
class WeightedSolution:
    mu: float
    first: JointSolution
    second: JointSolution

    def __iter__(self) -> Iterator[JointSolution]:
        yield self.first
        yield self.second

    @property
    def combined_value(self) -> float:
        return self.mu ** 2 * self.first.value + (1.0 - self.mu ** 2) * self.second.value


def weighted_costs(mu: float, costs1: ScaledCosts, costs2: ScaledCosts) -> Tuple[ScaledCosts, ScaledCosts]:
    """Costs each subspace faces once its payoff weight is divided out."""
    mu = float(mu)
    if not 0.0 < mu < 1.0:
        raise DegenerateWeightError(f"mu must lie strictly between 0 and 1, got {mu}; "
                                    "use solve_joint for a single subspace", mu=mu)
    w1, w2 = mu * mu, 1.0 - mu * mu
    return (ScaledCosts(costs1.c_s / w1, costs1.c_c / w1), ScaledCosts(costs2.c_s / w2, costs2.c_c / w2))


def weighted_solve(mu: float, d1: int, d2: int, costs1: ScaledCosts, costs2: ScaledCosts) -> WeightedSolution:
    """Solve a preference split over two subspaces with weights mu^2 and 1 - mu^2.

    costs1 and costs2 are already scaled by their own subspace dimension; the
    dimensions only matter when the solutions are mapped to finite policies.
    """
    require_dim(d1)
    require_dim(d2)
    scaled1, scaled2 = weighted_costs(mu, costs1, costs2)
    return WeightedSolution(mu=float(mu), first=solve_joint(scaled1), second=solve_joint(scaled2))
