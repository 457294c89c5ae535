"""
Seeded sampling
Exact draws of the alignment variables (W, W_i, X_i) and of full preference,
message and recommendation vectors on the unit sphere
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import DomainError, SamplerFailure, require_dim, require_kappa, require_set_size
from .hparams import hparams as hp

logger = logging.getLogger(__name__)


@dataclass
class RngStream:
    """One reproducible random stream.

    Streams are keyed by (seed, namespace, stream_id) through a counter-based
    Philox generator, so replication r draws the same numbers whichever thread
    runs it. A single stream must not be shared across threads.
    """

    seed: int
    stream_id: int = 0
    namespace: int = 0
    substream: Optional[int] = None
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("seed", "stream_id", "namespace", "substream"):
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, bool) or int(value) != value or not 0 <= value < 2**64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
            setattr(self, name, int(value))
        key = (self.namespace, self.stream_id)
        if self.substream is not None:
            key += (self.substream,)
        sequence = np.random.SeedSequence(self.seed, spawn_key=key)
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def keyed(self, value: float) -> "RngStream":
        """Sibling stream keyed by a float parameter, e.g. one per precision kappa."""
        bits = int(np.float64(value).view(np.uint64))
        return RngStream(self.seed, self.stream_id, self.namespace, substream=bits)


@dataclass(frozen=True)
class AlignmentSample:
    w: float  # message fidelity W = <h, m>
    w_i: np.ndarray  # recommendation fidelities W_i = <theta_i, m>
    x_i: np.ndarray  # alignment of the orthogonal parts

    @property
    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.w_i.tolist(), self.x_i.tolist()))

    def utilities(self) -> np.ndarray:
        """<h, theta_i> rebuilt from the decomposition."""
        return self.w * self.w_i + np.sqrt(1.0 - self.w ** 2) * np.sqrt(1.0 - self.w_i ** 2) * self.x_i


@dataclass(frozen=True)
class FullInteraction:
    h: np.ndarray  # true preference
    m: np.ndarray  # message
    thetas: np.ndarray  # (n, d) recommendations

    def utilities(self) -> np.ndarray:
        return self.thetas @ self.h

    def alignment(self) -> AlignmentSample:
        """Recover (W, W_i, X_i) from the vectors."""
        w = float(self.h @ self.m)
        w_i = self.thetas @ self.m
        h_perp = self.h - w * self.m
        h_perp /= np.linalg.norm(h_perp)
        theta_perp = self.thetas - np.outer(w_i, self.m)
        theta_perp /= np.linalg.norm(theta_perp, axis=1, keepdims=True)
        return AlignmentSample(w=w, w_i=w_i, x_i=theta_perp @ h_perp)


# ------------------------------
# SCALAR DRAWS
# ------------------------------
def _draw_w(kappa: float, d: int, count: int, gen: np.random.Generator) -> np.ndarray:
    """Wood's rejection sampler for the vMF alignment marginal, in batches."""
    shape = 0.5 * (d - 1)
    if kappa == 0.0:
        return 2.0 * gen.beta(shape, shape, count) - 1.0

    b = (d - 1) / (2.0 * kappa + np.sqrt(4.0 * kappa ** 2 + (d - 1) ** 2))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (d - 1) * np.log1p(-x0 * x0)

    out = np.empty(count)
    filled = 0
    rounds = 0
    while filled < count:
        rounds += 1
        if rounds > hp.max_rejection_rounds:
            raise SamplerFailure("rejection sampler exceeded its round limit", kappa=kappa, dim=d)
        need = count - filled
        batch = need + need // 2 + 8
        z = gen.beta(shape, shape, batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        log_u = np.log(gen.random(batch))
        accepted = w[kappa * w + (d - 1) * np.log1p(-x0 * w) - c >= log_u][:need]
        out[filled:filled + accepted.size] = accepted
        filled += accepted.size
    return np.clip(out, -1.0, 1.0)


def _draw_x(d: int, count: int, gen: np.random.Generator) -> np.ndarray:
    # p_{0,d-1}: (1 + X)/2 ~ Beta((d-2)/2, (d-2)/2)
    shape = 0.5 * (d - 2)
    return 2.0 * gen.beta(shape, shape, count) - 1.0


def sample_w(kappa: float, dim: int, rng: RngStream, size: Optional[int] = None) -> Union[float, np.ndarray]:
    """Exact draw(s) from p_{kappa,d}(w) ∝ e^{kappa w}(1 - w^2)^{(d-3)/2}."""
    kappa, d = require_kappa(kappa), require_dim(dim)
    if size is None:
        return float(_draw_w(kappa, d, 1, rng.generator)[0])
    return _draw_w(kappa, d, require_set_size(size, hp.max_set_size), rng.generator)


def sample_alignment_tuple(kappa: float, dim: int, n: int, rng: RngStream) -> AlignmentSample:
    """W, n fidelities W_i and n orthogonal alignments X_i, all independent.

    X is drawn first so that runs differing only in kappa share the search
    noise.
    """
    kappa, d = require_kappa(kappa), require_dim(dim)
    n = require_set_size(n, hp.max_set_size)
    gen = rng.generator
    x_i = _draw_x(d, n, gen)
    w = float(_draw_w(kappa, d, 1, gen)[0])
    w_i = _draw_w(kappa, d, n, gen)
    return AlignmentSample(w=w, w_i=w_i, x_i=x_i)


# ------------------------------
# VECTOR DRAWS
# ------------------------------
def _unit_rows(gen: np.random.Generator, count: int, d: int) -> np.ndarray:
    g = gen.standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _orthogonal_rows(m: np.ndarray, count: int, gen: np.random.Generator) -> np.ndarray:
    """`count` independent unit vectors uniform on the great sphere orthogonal to m."""
    out = np.empty((count, m.size))
    todo = np.arange(count)
    while todo.size:
        g = gen.standard_normal((todo.size, m.size))
        g -= np.outer(g @ m, m)
        norms = np.linalg.norm(g, axis=1)
        good = norms >= 1e-12
        y = g[good] / norms[good, None]
        # second projection removes the rounding left by the first
        y -= np.outer(y @ m, m)
        out[todo[good]] = y / np.linalg.norm(y, axis=1, keepdims=True)
        todo = todo[~good]
    return out


def sample_orthogonal_uniform(m: np.ndarray, rng: RngStream) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 1 or abs(np.linalg.norm(m) - 1.0) > 1e-9:
        raise DomainError("m must be a unit vector")
    return _orthogonal_rows(m, 1, rng.generator)[0]


def _preference_and_message(kappa: float, d: int, gen: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    h = _unit_rows(gen, 1, d)[0]
    w = float(_draw_w(kappa, d, 1, gen)[0])
    m = w * h + np.sqrt(1.0 - w * w) * _orthogonal_rows(h, 1, gen)[0]
    return h, m / np.linalg.norm(m)


def _around(m: np.ndarray, weights: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    y = _orthogonal_rows(m, weights.size, gen)
    thetas = np.outer(weights, m) + np.sqrt(1.0 - weights ** 2)[:, None] * y
    return thetas / np.linalg.norm(thetas, axis=1, keepdims=True)


def sample_full_interaction(kappa: float, dim: int, n: int, rng: RngStream) -> FullInteraction:
    """h uniform, m ~ vMF(h, kappa), theta_i ~ vMF(m, kappa) i.i.d."""
    kappa, d = require_kappa(kappa), require_dim(dim)
    n = require_set_size(n, hp.max_set_size)
    gen = rng.generator
    h, m = _preference_and_message(kappa, d, gen)
    thetas = _around(m, _draw_w(kappa, d, n, gen), gen)
    return FullInteraction(h=h, m=m, thetas=thetas)


def sample_tilted_interaction(kappa: float, dim: int, n: int, v: float, rng: RngStream) -> FullInteraction:
    """Recommendations theta_i = v m + sqrt(1 - v^2) Y_i with Y_i uniform orthogonal to m."""
    kappa, d = require_kappa(kappa), require_dim(dim)
    n = require_set_size(n, hp.max_set_size)
    if not -1.0 <= v <= 1.0:
        raise DomainError(f"tilt must lie in [-1, 1], got {v}", v=v)
    gen = rng.generator
    h, m = _preference_and_message(kappa, d, gen)
    thetas = _around(m, np.full(n, float(v)), gen)
    return FullInteraction(h=h, m=m, thetas=thetas)
