"""
Directional core
Log-partition, moments, KL divergence and distribution function of the
alignment marginal p_{kappa,d}(w) ∝ exp(kappa w) (1 - w^2)^((d-3)/2)

All integrals are taken in angle form, w = cos t:

    Z(kappa, d) = ∫_0^π exp(kappa cos t) sin^(d-2) t dt

which is smooth on the whole interval for integer d, so plain Gauss-Legendre
converges geometrically. The integrand is max-shifted before exponentiation,
which keeps kappa ~ 1e6, d ~ 1e4 overflow-free.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy import optimize, special

from .errors import DomainError, NumericFailure, require_dim, require_kappa, require_rho
from .hparams import hparams as hp

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class MarginalMoments:
    mean_w: float  # E[W]
    mean_sqrt: float  # E[sqrt(1 - W^2)]
    log_partition: float  # log Z(kappa, d)


@dataclass(frozen=True)
class _Window:
    lo: float
    hi: float
    peak: float  # log-integrand at the mode


# ------------------------------
# QUADRATURE PLUMBING
# ------------------------------
@lru_cache(maxsize=32)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = special.roots_legendre(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _log_integrand(t, kappa: float, d: int):
    return kappa * np.cos(t) + (d - 2) * np.log(np.sin(t))


def _mode_angle(kappa: float, d: int) -> float:
    if kappa == 0.0:
        return 0.5 * math.pi
    # kappa sin^2 t = (d - 2) cos t, written to stay accurate for large kappa
    c = 2.0 * kappa / ((d - 2) + math.sqrt((d - 2) ** 2 + 4.0 * kappa * kappa))
    s = math.sqrt((d - 2) * c / kappa)
    return math.atan2(s, c)


@lru_cache(maxsize=1024)
def _window(kappa: float, d: int, drop: float) -> _Window:
    """Angles where the log-integrand is within `drop` of its peak.

    The integrand is unimodal in t, so each side is a single root.
    """
    t_star = _mode_angle(kappa, d)
    peak = float(_log_integrand(t_star, kappa, d))
    level = peak - drop

    def excess(t):
        return float(_log_integrand(t, kappa, d)) - level

    left = 1e-300
    lo = 0.0 if excess(left) >= 0.0 else optimize.brentq(excess, left, t_star, xtol=1e-15)
    hi = math.pi if excess(math.pi) >= 0.0 else optimize.brentq(excess, t_star, math.pi, xtol=1e-15)
    return _Window(lo=lo, hi=hi, peak=peak)


def _rule(window: _Window, n: int, kappa: float, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and max-shifted masses of an n-point rule on the window."""
    x, w = _legendre(n)
    half = 0.5 * (window.hi - window.lo)
    t = window.lo + half * (x + 1.0)
    mass = w * half * np.exp(_log_integrand(t, kappa, d) - window.peak)
    return t, mass


@lru_cache(maxsize=1024)
def _converged_rule(kappa: float, d: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """Double the node count until log Z settles; returns (nodes, masses, log Z)."""
    window = _window(kappa, d, hp.quad_tail_drop)
    n = hp.quad_initial_nodes
    previous = None
    while True:
        t, mass = _rule(window, n, kappa, d)
        total = math.fsum(mass)
        if not (total > 0.0 and math.isfinite(total)):
            raise NumericFailure("log-partition quadrature is not finite", kappa=kappa, dim=d)
        log_z = window.peak + math.log(total)
        if previous is not None and abs(log_z - previous) < hp.quad_rtol:
            break
        if n >= hp.quad_max_nodes:
            logger.warning("quadrature hit %d nodes for kappa=%g d=%d (last change %.3g)",
                           n, kappa, d, abs(log_z - previous))
            break
        previous = log_z
        n *= 2
    t.setflags(write=False)
    mass.setflags(write=False)
    return t, mass, log_z


def _log_partition(kappa: float, d: int) -> float:
    return _converged_rule(float(kappa), int(d))[2]


def _cumulative_masses(angles: np.ndarray, kappa: float, d: int, window: _Window) -> Tuple[np.ndarray, np.ndarray]:
    """Upper and lower masses at each angle, normalised over the window.

    Returns (survival, cdf) where survival[i] = P(W >= cos angles[i]) and
    cdf[i] = P(W <= cos angles[i]). Both are built from nonnegative pieces,
    so they are exactly monotone, and cdf is exactly 1 above the window.
    """
    clipped = np.clip(angles, window.lo, window.hi)
    panels = np.linspace(window.lo, window.hi, hp.cdf_panels + 1)
    edges = np.unique(np.concatenate([panels, clipped.ravel()]))

    x, w = _legendre(hp.cdf_panel_nodes)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    t = a + half * (x + 1.0)
    pieces = np.sum(w * half * np.exp(_log_integrand(t, kappa, d) - window.peak), axis=1)

    from_top = np.concatenate([[0.0], np.cumsum(pieces)])
    from_bottom = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    idx = np.searchsorted(edges, clipped)
    survival = from_top[idx] / from_top[-1]
    cdf = from_bottom[idx] / from_bottom[0]
    return survival, cdf


# ------------------------------
# PUBLIC OPERATIONS
# ------------------------------
def log_partition(kappa: float, dim: int) -> float:
    """log ∫_{-1}^{1} e^{kappa w} (1 - w^2)^{(d-3)/2} dw."""
    return _log_partition(require_kappa(kappa), require_dim(dim))


def marginal_moments(kappa: float, dim: int) -> MarginalMoments:
    kappa, d = require_kappa(kappa), require_dim(dim)
    return _moments(kappa, d)


def _moments(kappa: float, d: int) -> MarginalMoments:
    t, mass, log_z = _converged_rule(kappa, d)
    total = math.fsum(mass)
    mean_w = 0.0 if kappa == 0.0 else math.fsum(mass * np.cos(t)) / total
    mean_sqrt = math.fsum(mass * np.sin(t)) / total
    if not (math.isfinite(mean_w) and math.isfinite(mean_sqrt)):
        raise NumericFailure("marginal moments are not finite", kappa=kappa, dim=d)
    return MarginalMoments(
        mean_w=min(max(mean_w, 0.0), 1.0),
        mean_sqrt=min(max(mean_sqrt, 0.0), 1.0),
        log_partition=log_z,
    )


def kl_divergence(kappa: float, dim: int) -> float:
    """KL(p_kappa || p_0) = kappa E[W] - (log Z(kappa) - log Z(0)).

    This is the information a message of precision kappa carries about the
    preference; the surface-area prefactor cancels in the difference.
    """
    kappa, d = require_kappa(kappa), require_dim(dim)
    if kappa == 0.0:
        return 0.0
    moments = _moments(kappa, d)
    kl = kappa * moments.mean_w - (moments.log_partition - _log_partition(0.0, d))
    if kl < -1e-9 or not math.isfinite(kl):
        raise NumericFailure(f"KL divergence evaluated to {kl}", kappa=kappa, dim=d)
    return max(kl, 0.0)


def kl_asymptotic(rho: float, dim: int) -> float:
    """(d - 2)/2 * log(1 / (1 - rho^2))."""
    rho, d = require_rho(rho), require_dim(dim)
    return 0.5 * (d - 2) * -math.log1p(-rho * rho)


def kappa_from_rho(rho: float, dim: int) -> float:
    rho, d = require_rho(rho), require_dim(dim)
    return rho / (1.0 - rho * rho) * (d - 3)


def rho_from_kappa(kappa: float, dim: int) -> float:
    """Mode of p_{kappa,d}; inverts kappa_from_rho."""
    kappa, d = require_kappa(kappa), require_dim(dim)
    if kappa == 0.0:
        return 0.0
    return 2.0 * kappa / ((d - 3) + math.sqrt((d - 3) ** 2 + 4.0 * kappa * kappa))


def marginal_pdf(w: ArrayLike, kappa: float, dim: int) -> ArrayLike:
    kappa, d = require_kappa(kappa), require_dim(dim)
    w_arr = np.asarray(w, dtype=float)
    if np.any(np.abs(w_arr) > 1.0) or np.any(np.isnan(w_arr)):
        raise DomainError("w must lie in [-1, 1]", kappa=kappa, dim=d)
    with np.errstate(divide="ignore"):
        log_p = kappa * w_arr + 0.5 * (d - 3) * np.log1p(-w_arr * w_arr) - _log_partition(kappa, d)
    density = np.exp(log_p)
    return float(density) if np.ndim(w) == 0 else density


def marginal_cdf(x: ArrayLike, kappa: float, dim: int) -> ArrayLike:
    """P(W <= x) for W ~ p_{kappa,d}; accepts scalars or arrays."""
    kappa, d = require_kappa(kappa), require_dim(dim)
    return _marginal_cdf(x, kappa, d)


def _marginal_cdf(x: ArrayLike, kappa: float, d: int) -> ArrayLike:
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0) or np.any(np.isnan(x_arr)):
        raise DomainError("x must lie in [-1, 1]", kappa=kappa, dim=d)
    window = _window(kappa, d, hp.quad_tail_drop)
    _, cdf = _cumulative_masses(np.arccos(x_arr.ravel()), kappa, d, window)
    cdf = np.clip(cdf, 0.0, 1.0).reshape(x_arr.shape)
    return float(cdf) if np.ndim(x) == 0 else cdf


def expected_maximum(n: int, kappa: float, d: int) -> float:
    """E[max of n i.i.d. draws from p_{kappa,d}] by order-statistic quadrature.

    Uses E[M_n] = 1 - ∫_{-1}^{1} F(x)^n dx, with F^n formed from the upper
    tail mass as exp(n log1p(-S)) so large n keeps its precision. d may be 3
    here, since the orthogonal components live one dimension down.
    """
    d = require_dim(d, minimum=3)
    kappa = require_kappa(kappa)
    if n == 1:
        return _moments(kappa, d).mean_w if d >= 4 else _mean_w_low_dim(kappa, d)

    window = _window(kappa, d, hp.quad_tail_drop + math.log(n))
    x, w = _legendre(16)
    panels = hp.order_stat_panels
    previous = None
    while True:
        edges = np.linspace(window.lo, window.hi, panels + 1)
        a, b = edges[:-1, None], edges[1:, None]
        half = 0.5 * (b - a)
        t = (a + half * (x + 1.0)).ravel()
        omega = (w * half).ravel()
        survival, _ = _cumulative_masses(t, kappa, d, window)
        with np.errstate(divide="ignore"):
            f_pow = np.exp(n * np.log1p(-survival))
        estimate = 1.0 - 2.0 * math.sin(0.5 * window.lo) ** 2 - math.fsum(omega * f_pow * np.sin(t))
        if not math.isfinite(estimate):
            raise NumericFailure("order-statistic quadrature is not finite", kappa=kappa, dim=d, n=n)
        if previous is not None and abs(estimate - previous) < hp.order_stat_rtol:
            break
        if panels >= hp.order_stat_max_panels:
            logger.warning("order-statistic quadrature hit %d panels for n=%d d=%d", panels, n, d)
            break
        previous = estimate
        panels *= 2
    return min(max(estimate, -1.0), 1.0)


def _mean_w_low_dim(kappa: float, d: int) -> float:
    if kappa == 0.0:
        return 0.0
    t, mass, _ = _converged_rule(kappa, d)
    return math.fsum(mass * np.cos(t)) / math.fsum(mass)
