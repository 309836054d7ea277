"""Deterministic pseudo-random streams.

Everything stochastic in this package (weight init, reparameterization noise,
data sampling, shuffling, splits) draws from :class:`SeededRng` so that a seed
pins the exact byte-level outcome on every platform.  The generator is
counter-based splitmix64: output i is a fixed 64-bit mix of ``key + (i+1)*GAMMA``,
so streams can be split by index without generating intermediate values.
Normals come from the Box-Muller transform applied to pairs of uniforms.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_CHILD_SALT = np.uint64(0x85EBCA6B9E3779F9)

# float in [0, 1) from the top 53 bits of a uint64
_INV_2_53 = float(2.0**-53)


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; z is a uint64 array, returns uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class SeededRng:
    """Counter-based splitmix64 stream with Box-Muller normals.

    State is just (key, counter); identical seeds give bit-identical output
    sequences regardless of platform or call batching, and ``child(i)``
    derives independent substreams (used for per-index data generation so the
    i-th example does not depend on how many were drawn before it).
    """

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        self.seed = int(seed)
        # mix the raw seed once so small seeds do not give correlated keys
        with np.errstate(over="ignore"):
            self._key = _mix64(np.array([np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64))[0]
        self._counter = np.uint64(0)

    def child(self, index: int) -> "SeededRng":
        """Independent substream; deterministic function of (seed, index) only."""
        with np.errstate(over="ignore"):
            salted = _mix64(np.array([self._key ^ (_CHILD_SALT + np.uint64(index) * _GAMMA)], dtype=np.uint64))[0]
        out = SeededRng(0)
        out.seed = self.seed
        out._key = salted
        out._counter = np.uint64(0)
        return out

    def _raw(self, n: int) -> np.ndarray:
        """Next n uint64 outputs."""
        with np.errstate(over="ignore"):
            idx = self._counter + np.arange(1, n + 1, dtype=np.uint64)
            self._counter = self._counter + np.uint64(n)
            return _mix64(self._key + idx * _GAMMA)

    def uniform(self, shape=()) -> np.ndarray:
        """Uniform f64 in [0, 1), shape-sized array (scalar array for ())."""
        shape = _as_shape(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        vals = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return vals.reshape(shape)

    def normal(self, shape=()) -> np.ndarray:
        """Standard normal f64 via Box-Muller, shape-sized array."""
        shape = _as_shape(shape)
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs)
        # u1 in (0, 1] keeps log finite; u2 in [0, 1)
        u1 = ((raw[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        vals = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return vals.reshape(shape)

    def integers(self, low: int, high: int, shape=()) -> np.ndarray:
        """Uniform integers in [low, high), via floor of scaled uniforms."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        u = self.uniform(shape)
        return (low + np.floor(u * (high - low))).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n): argsort of n uniform keys."""
        keys = self.uniform((n,))
        return np.argsort(keys, kind="stable")

    def split_indices(self, n: int, fraction: float) -> tuple[np.ndarray, np.ndarray]:
        """Shuffle range(n) once and split: first part has round(n*fraction) items."""
        perm = self.permutation(n)
        k = int(round(n * fraction))
        return perm[:k], perm[k:]


def _as_shape(shape) -> tuple:
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(s) for s in shape)
