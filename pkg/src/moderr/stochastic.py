"""Seeded Gaussian sampling for model error and observation noise.

Random numbers come from a counter-based generator: the ``c``-th 64-bit
output of a stream is the SplitMix64 finalizer applied to
``key + (c + 1) * 0x9E3779B97F4A7C15`` (mod 2**64), where ``key`` is derived
from the seed and the stream name. Any output can be recomputed from
``(seed, stream_id, counter)`` alone, so streams are replayable and need no
shared state.

Standard normals use the cosine branch of Box-Muller. Normal number ``c``
consumes raw outputs ``2c`` and ``2c + 1``; the stream counter counts
normals, so drawing ``n`` normals in one call or in ``n`` calls gives the
same values.
"""

import dataclasses
import operator
from dataclasses import dataclass

import numpy as np

from .errors import NotPSDError, ValidationError

STREAM_IDS = {"model-error": 1, "observation-noise": 2, "init": 3}

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def splitmix64(values):
    """SplitMix64 output function applied elementwise to uint64 ``values``."""
    return _mix(np.asarray(values, dtype=np.uint64))


def _stream_key(seed, stream_id):
    s = np.uint64(seed)
    with np.errstate(over="ignore"):
        tag = splitmix64(np.uint64(STREAM_IDS[stream_id]) * _GOLDEN)
    return splitmix64(s ^ tag)


def _count(n):
    n = operator.index(n)  # numpy integers would overflow the 64-bit counter arithmetic
    if n < 0:
        raise ValidationError(f"draw count must be non-negative, got {n}")
    return n


@dataclass
class RngStream:
    """A replayable random stream: ``(seed, stream_id, counter)`` fixes all output."""

    seed: int
    stream_id: str = "model-error"
    counter: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) <= _MASK64):
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stream_id not in STREAM_IDS:
            raise ValidationError(f"unknown stream {self.stream_id!r}")
        if not (0 <= int(self.counter) <= _MASK64):
            raise ValidationError("counter out of range")
        self.seed = int(self.seed)
        self.counter = int(self.counter)

    def copy(self):
        return dataclasses.replace(self)

    def _raw(self, start, n):
        key = _stream_key(self.seed, self.stream_id)
        idx = (np.arange(n, dtype=np.uint64) + np.uint64(start) + np.uint64(1))
        with np.errstate(over="ignore"):
            return splitmix64(key + idx * _GOLDEN)

    def raw(self, n):
        """Next ``n`` raw 64-bit outputs (advances the counter by ``n``)."""
        n = _count(n)
        out = self._raw(self.counter, n)
        self.counter = (self.counter + n) & _MASK64
        return out

    def uniform(self, n):
        """``n`` doubles in [0, 1) with 53 random bits each."""
        return (self.raw(n) >> np.uint64(11)).astype(float) * _TWO_M53

    def normal(self, n):
        """``n`` independent standard normals; advances the counter by ``n``."""
        n = _count(n)
        bits = self._raw((2 * self.counter) & _MASK64, 2 * n) >> np.uint64(11)
        u1 = (bits[0::2].astype(float) + 1.0) * _TWO_M53
        u2 = bits[1::2].astype(float) * _TWO_M53
        self.counter = (self.counter + n) & _MASK64
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def build_true_mean(n):
    """Prescribed model-error mean, component ``i`` (1-based) = 0.2 sin(pi i / N)."""
    if n < 1:
        raise ValidationError("N must be at least 1")
    i = np.arange(1, n + 1)
    return 0.2 * np.sin(np.pi * i / n)


def build_true_cov(n, cyclic=False):
    """Prescribed model-error covariance ``0.015 * C`` with banded ``C``.

    ``C`` has 1 on the diagonal, 2/3 on the first off-diagonals and 1/6 on
    the second. Distances are literal ``|i - j|`` unless ``cyclic`` is set,
    in which case the band wraps around like the Lorenz 96 ring.
    """
    if n < 5:
        raise ValidationError("N must be at least 5")
    i = np.arange(n)
    dist = np.abs(i[:, None] - i[None, :])
    if cyclic:
        dist = np.minimum(dist, n - dist)
    c = np.zeros((n, n))
    c[dist == 0] = 1.0
    c[dist == 1] = 2.0 / 3.0
    c[dist == 2] = 1.0 / 6.0
    return (0.1 ** 2) * 1.5 * c


def symmetric_sqrt(cov, tol=1e-10):
    """Symmetric square root ``S`` with ``S S^T = cov`` via eigendecomposition.

    Eigenvalues in ``[-tol, 0)`` are rounding noise and are clamped to zero.
    """
    q = np.asarray(cov, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValidationError("covariance must be a square matrix")
    q = 0.5 * (q + q.T)
    w, v = np.linalg.eigh(q)
    if w.size and w.min() < -tol:
        raise NotPSDError(f"matrix has eigenvalue {w.min():.3e} < -{tol:g}")
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    sqrt_cov: np.ndarray

    @classmethod
    def from_cov(cls, mean, cov):
        return cls(np.asarray(mean, dtype=float), symmetric_sqrt(cov))

    @property
    def cov(self):
        return self.sqrt_cov @ self.sqrt_cov.T


def sample_gaussian(spec, rng, count=None):
    """Draw ``mean + S z`` with ``z`` standard normal from ``rng``.

    With ``count`` set, returns a ``(count, N)`` array whose rows match
    ``count`` consecutive single draws up to matrix-product rounding.
    """
    n = spec.mean.shape[0]
    if count is None:
        return spec.mean + spec.sqrt_cov @ rng.normal(n)
    z = rng.normal(count * n).reshape(count, n)
    return spec.mean + z @ spec.sqrt_cov.T
