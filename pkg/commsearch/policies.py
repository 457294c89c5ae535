"""
Policies and costs
Value objects shared by the asymptotic, tilted and simulation layers
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from .errors import DomainError, require_positive


class Regime(Enum):
    HYBRID = "Hybrid"
    SEARCH_ONLY = "SearchOnly"
    FRICTIONLESS_BOUNDARY = "FrictionlessBoundary"


class TiltedRegime(Enum):
    PURE_COMMUNICATION = "PureCommunication"
    PURE_SEARCH = "PureSearch"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class ScaledCosts:
    """Costs scaled by dimension: c_s = d * lambda_s, c_c = d * lambda_c."""

    c_s: float
    c_c: float

    def __post_init__(self):
        object.__setattr__(self, "c_s", require_positive("c_s", self.c_s))
        object.__setattr__(self, "c_c", require_positive("c_c", self.c_c))

    def lambdas(self, dim: int) -> Tuple[float, float]:
        """Per-dimension costs (lambda_s, lambda_c) at dimension d."""
        return self.c_s / dim, self.c_c / dim

    def rho_bound(self, shrink: float = 0.0) -> float:
        # beyond this rho the communication cost alone exceeds the best utility of 1
        return math.sqrt(-math.expm1(-2.0 / self.c_c)) * (1.0 - shrink)

    def alpha_bound(self) -> float:
        return 1.0 / self.c_s


@dataclass(frozen=True)
class AsymptoticPolicy:
    rho: float
    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.rho < 1.0):
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}", rho=self.rho)
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be finite and >= 0, got {self.alpha}", alpha=self.alpha)


@dataclass(frozen=True)
class InteractionPolicy:
    kappa: float
    n: int

    def __post_init__(self):
        if not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa}", kappa=self.kappa)
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}", n=self.n)
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class JointSolution:
    policy: AsymptoticPolicy
    value: float
    regime: Regime


@dataclass(frozen=True)
class TiltedPolicy:
    rho: float
    alpha: float
    v: float

    def __post_init__(self):
        AsymptoticPolicy(self.rho, self.alpha)
        if not -1.0 <= self.v <= 1.0:
            raise DomainError(f"tilt must lie in [-1, 1], got {self.v}", v=self.v)


@dataclass(frozen=True)
class TiltedSolution:
    policy: TiltedPolicy
    value: float
    regime: TiltedRegime
    # Boundary (c_s == c_c): policy is the pure-search optimum, alternative the pure-communication one
    alternative: Optional[TiltedPolicy] = None
