"""
Tilted recommendations
Recommendations theta = v m + sqrt(1 - v^2) Y with a deterministic tilt v:
asymptotic objective, optimal tilt, the pure-regime solution and the exact
finite-dimension payoff
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Tuple

from .asymptotic import solve_joint, solve_search_only
from .directional import _moments, expected_maximum, kl_divergence
from .errors import DegenerateInputError, DomainError, require_dim, require_kappa, require_rho, require_set_size
from .hparams import hparams as hp
from .policies import JointSolution, ScaledCosts, TiltedPolicy, TiltedRegime, TiltedSolution

logger = logging.getLogger(__name__)


def tilt_utility_asymptotic(policy: TiltedPolicy, costs: ScaledCosts) -> float:
    rho, alpha, v = policy.rho, policy.alpha, policy.v
    search = math.sqrt(-math.expm1(-2.0 * alpha))
    return (rho * v + math.sqrt(1.0 - rho * rho) * math.sqrt(1.0 - v * v) * search
            - costs.c_s * alpha + 0.5 * costs.c_c * math.log1p(-rho * rho))


def optimal_tilt(rho: float, alpha: float) -> float:
    """v*(rho, alpha) = rho / sqrt(1 - (1 - rho^2) e^{-2 alpha})."""
    rho = require_rho(rho)
    alpha = float(alpha)
    if not (alpha >= 0.0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be finite and >= 0, got {alpha}", alpha=alpha)
    if rho == 0.0 and alpha == 0.0:
        raise DegenerateInputError("tilt is undefined with no communication and no search", rho=rho, alpha=alpha)
    decay = math.exp(-2.0 * alpha)
    v = rho / math.sqrt(-math.expm1(-2.0 * alpha) + rho * rho * decay)
    return min(max(v, rho), 1.0)


def _tilted_root(c: float) -> float:
    # z* = (sqrt(c^4 + 4c^2) - c^2)/2 without the cancellation
    return 2.0 / (1.0 + math.sqrt(1.0 + 4.0 / (c * c)))


def solve_tilted(costs: ScaledCosts) -> TiltedSolution:
    """Optimal tilted policy; only the cheaper channel is ever used."""
    z = _tilted_root(min(costs.c_s, costs.c_c))
    communicate = TiltedPolicy(rho=math.sqrt(1.0 - z), alpha=0.0, v=1.0)
    alpha_s, value_s = solve_search_only(costs.c_s)
    search = TiltedPolicy(rho=0.0, alpha=alpha_s, v=0.0)

    if costs.c_c < costs.c_s:
        return TiltedSolution(communicate, tilt_utility_asymptotic(communicate, costs), TiltedRegime.PURE_COMMUNICATION)
    if costs.c_c > costs.c_s:
        return TiltedSolution(search, value_s, TiltedRegime.PURE_SEARCH)
    logger.info("tilted solution at c_s == c_c = %g is a boundary; both pure policies are optimal", costs.c_s)
    return TiltedSolution(search, value_s, TiltedRegime.BOUNDARY, alternative=communicate)


def expected_max_orthogonal(n: int, dim: int) -> float:
    """E[max_i X_i] for n i.i.d. X_i ~ p_{0,d-1}."""
    d = require_dim(dim)
    n = require_set_size(n, hp.max_set_size)
    if n == 1:
        return 0.0
    return expected_maximum(n, 0.0, d - 1)


def _tilt_terms(kappa: float, n: int, d: int) -> Tuple[float, float]:
    """(E[W], E[sqrt(1 - W^2)] E[M_n]): utility is v A + sqrt(1 - v^2) B."""
    moments = _moments(kappa, d)
    return moments.mean_w, moments.mean_sqrt * expected_max_orthogonal(n, d)


def tilted_utility_finite(kappa: float, n: int, v: float, dim: int) -> float:
    kappa, d = require_kappa(kappa), require_dim(dim)
    n = require_set_size(n, hp.max_set_size)
    if not -1.0 <= v <= 1.0:
        raise DomainError(f"tilt must lie in [-1, 1], got {v}", v=v)
    a, b = _tilt_terms(kappa, n, d)
    return v * a + math.sqrt(1.0 - v * v) * b


def tilted_payoff_finite(kappa: float, n: int, v: float, lambda_s: float, lambda_c: float, dim: int) -> float:
    """T_d(kappa, n, v): utility minus lambda_s log n minus lambda_c KL, all by quadrature."""
    if lambda_s < 0.0 or lambda_c < 0.0:
        raise DomainError("costs must be nonnegative", lambda_s=lambda_s, lambda_c=lambda_c)
    utility = tilted_utility_finite(kappa, n, v, dim)
    return utility - lambda_s * math.log(n) - lambda_c * kl_divergence(kappa, dim)


def optimal_tilt_finite(kappa: float, n: int, dim: int) -> Tuple[float, float]:
    """Exact maximiser of the finite utility over v, with the maximised utility."""
    kappa, d = require_kappa(kappa), require_dim(dim)
    a, b = _tilt_terms(kappa, require_set_size(n, hp.max_set_size), d)
    norm = math.hypot(a, b)
    if norm == 0.0:
        raise DegenerateInputError("every tilt gives zero utility at kappa=0, n=1", kappa=kappa, n=n)
    return a / norm, norm


# ------------------------------
# POSTERIOR VS TILTED
# ------------------------------
@dataclass(frozen=True)
class TiltComparison:
    costs: ScaledCosts
    posterior: JointSolution
    tilted: TiltedSolution

    @property
    def improvement(self) -> float:
        return self.tilted.value - self.posterior.value


def compare_tilt(costs: ScaledCosts) -> TiltComparison:
    return TiltComparison(costs=costs, posterior=solve_joint(costs), tilted=solve_tilted(costs))


def tilted_sweep(costs_list: Iterable[ScaledCosts]) -> List[TiltComparison]:
    return [compare_tilt(costs) for costs in costs_list]
