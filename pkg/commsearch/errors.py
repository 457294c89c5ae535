"""
Exception hierarchy
Every failure the library raises on purpose derives from CommSearchError
"""

from typing import Any, Dict, Optional


class CommSearchError(Exception):
    """Base class; `context` ends up in the CLI's structured error record."""

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context: Dict[str, Any] = {k: v for k, v in context.items() if v is not None}


class DomainError(CommSearchError, ValueError):
    """An argument lies outside the domain the formula is defined on."""


class DegenerateInputError(DomainError):
    pass


class DegenerateWeightError(DomainError):
    pass


class NumericFailure(CommSearchError, ArithmeticError):
    def __init__(self, message: str, kappa: Optional[float] = None, dim: Optional[int] = None, **context: Any):
        super().__init__(message, kappa=kappa, dim=dim, **context)
        self.kappa = kappa
        self.dim = dim


class SamplerFailure(CommSearchError, RuntimeError):
    def __init__(self, message: str, replication: Optional[int] = None, **context: Any):
        super().__init__(message, replication=replication, **context)
        self.replication = replication

    def at_replication(self, replication: int) -> "SamplerFailure":
        context = dict(self.context)
        context.pop("replication", None)
        return SamplerFailure(str(self), replication=replication, **context)


class ConfigError(CommSearchError, ValueError):
    def __init__(self, message: str, key: Optional[str] = None, **context: Any):
        super().__init__(message, key=key, **context)
        self.key = key


def require_dim(d, minimum: int = 4) -> int:
    if isinstance(d, bool) or int(d) != d:
        raise DomainError(f"dimension must be an integer, got {d!r}", dim=d)
    d = int(d)
    if d < minimum:
        raise DomainError(f"dimension must be >= {minimum}, got {d}", dim=d)
    return d


def require_kappa(kappa) -> float:
    kappa = float(kappa)
    if not kappa >= 0.0 or kappa == float("inf"):
        raise DomainError(f"precision must be finite and >= 0, got {kappa}", kappa=kappa)
    return kappa


def require_rho(rho, rmin: float = 1e-12) -> float:
    """0 <= rho < 1 with 1 - rho^2 kept away from zero."""
    rho = float(rho)
    if not 0.0 <= rho < 1.0 or 1.0 - rho * rho < rmin:
        raise DomainError(f"rho must lie in [0, 1) with 1 - rho^2 >= {rmin}, got {rho}", rho=rho)
    return rho


def require_set_size(n, cap: Optional[int] = None) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"set size must be a positive integer, got {n!r}", n=n)
    n = int(n)
    if cap is not None and n > cap:
        raise DomainError(f"set size {n} exceeds the cap {cap}", n=n, cap=cap)
    return n


def require_positive(name: str, value) -> float:
    value = float(value)
    if not 0.0 < value < float("inf"):
        raise DomainError(f"{name} must be positive and finite, got {value}", **{name: value})
    return value
