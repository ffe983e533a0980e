"""Seeded random streams and gamma/Dirichlet sampling.

The generator is PCG32 (XSH-RR, 64-bit state, 32-bit output), implemented
in-repo so that a seed yields the same stream on every platform and under
both kernel backends.
"""
import math

import numpy as np

from . import _kernels
from .errors import InvalidParameterError

MASK64 = 0xFFFFFFFFFFFFFFFF
DEFAULT_STREAM = 54
MAX_DIRICHLET_RETRIES = 16


class Rng:
    """PCG32 random stream.

    Single-owner: methods advance ``state`` in place. Two instances built
    from the same ``(seed, stream)`` produce identical sequences.
    """

    def __init__(self, seed=0, stream=DEFAULT_STREAM):
        seed = int(seed)
        if not 0 <= seed <= MASK64:
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.inc = ((int(stream) << 1) | 1) & MASK64
        self.state = 0
        self.next_u32()
        self.state = (self.state + seed) & MASK64
        self.next_u32()

    def next_u32(self):
        out, self.state = _kernels.impl.pcg32_next(self.state, self.inc)
        return out

    def uniform(self, size=None):
        """Doubles in [0, 1) with 53 random bits."""
        n = 1 if size is None else int(np.prod(size))
        out, self.state = _kernels.impl.fill_uniform(self.state, self.inc, n)
        return float(out[0]) if size is None else out.reshape(size)

    def normal(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        out, self.state = _kernels.impl.fill_normal(self.state, self.inc, n)
        return float(out[0]) if size is None else out.reshape(size)

    def bernoulli(self, p, size=None):
        if not 0.0 <= p <= 1.0:
            raise InvalidParameterError(f"p must lie in [0, 1], got {p}")
        return self.uniform(size) < p

    def integer(self, n):
        """Unbiased integer in ``[0, n)`` for ``1 <= n <= 2**32``."""
        if not 1 <= n <= 1 << 32:
            raise InvalidParameterError(f"bound must be in [1, 2**32], got {n}")
        threshold = ((1 << 32) - n) % n
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % n

    def sample_indices(self, population, count):
        """``count`` indices from ``range(population)``; without replacement
        when ``count <= population``, otherwise with replacement."""
        if count <= population:
            pool = list(range(population))
            for i in range(count):
                j = i + self.integer(population - i)
                pool[i], pool[j] = pool[j], pool[i]
            return np.array(pool[:count], dtype=np.intp)
        return np.array([self.integer(population) for _ in range(count)], dtype=np.intp)

    def getstate(self):
        return {"seed": self.seed, "state": self.state, "inc": self.inc}

    def setstate(self, st):
        self.seed = int(st["seed"])
        self.state = int(st["state"]) & MASK64
        self.inc = int(st["inc"]) & MASK64

    def copy(self):
        other = Rng.__new__(Rng)
        other.setstate(self.getstate())
        return other


def gamma_sample(alpha, rng):
    """One Gamma(alpha, 1) draw (Marsaglia-Tsang, boosted for alpha < 1)."""
    alpha = float(alpha)
    if not alpha > 0.0 or not math.isfinite(alpha):
        raise InvalidParameterError(f"gamma shape must be positive and finite, got {alpha}")
    lg, rng.state = _kernels.impl.log_gamma_draw(rng.state, rng.inc, alpha)
    return math.exp(lg)


def _check_alphas(alphas):
    a = np.asarray(alphas, dtype=np.float64)
    if a.size == 0 or a.shape[-1] < 1:
        raise InvalidParameterError("need at least one concentration parameter")
    if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
        raise InvalidParameterError("concentration parameters must be positive and finite")
    return a


def dirichlet_sample(alphas, rng):
    """One draw from Dir(alphas); the result sums to 1."""
    a = _check_alphas(alphas)
    if a.ndim != 1:
        raise InvalidParameterError("dirichlet_sample takes a 1-D alpha vector")
    return dirichlet_rows(a[None, :], rng)[0]


def dirichlet_rows(alphas, rng):
    """Independent Dirichlet draws, one per row of a ``(rows, k)`` array.

    Gammas are drawn in log space and normalised against their maximum, so
    tiny concentrations cannot underflow the whole row to zero.
    """
    a = _check_alphas(alphas)
    if a.ndim != 2:
        raise InvalidParameterError("dirichlet_rows takes a 2-D alpha array")
    out, rng.state = _kernels.impl.dirichlet_rows(
        rng.state, rng.inc, a, MAX_DIRICHLET_RETRIES
    )
    return out
