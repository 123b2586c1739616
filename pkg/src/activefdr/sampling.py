"""Index streams and label oracles.

Engines draw whole epochs at once: the sampling region is fixed between two
epoch boundaries, so a vectorised block of draws followed by a membership
mask is the same event sequence as drawing, testing and observing one index
at a time.
"""

from __future__ import annotations

import enum
from typing import Optional

import numpy as np

from .core import Instance, NoiseMode


class StreamMode(str, enum.Enum):
    WITH_REPLACEMENT = "with_replacement"
    WITHOUT_REPLACEMENT = "without_replacement"


class StreamExhausted(RuntimeError):
    """A without-replacement stream was asked for more than n indices."""


def stream_mode_for(mode: NoiseMode) -> StreamMode:
    if NoiseMode(mode) is NoiseMode.PERSISTENT:
        return StreamMode.WITHOUT_REPLACEMENT
    return StreamMode.WITH_REPLACEMENT


class IndexStream:
    """Uniform item indices, with or without replacement.

    Without replacement the whole permutation is drawn up front from the
    seeded generator, so the sequence is fixed by the seed alone.
    """

    def __init__(self, mode, n: int, rng: np.random.Generator):
        self.mode = StreamMode(mode)
        self.n = int(n)
        self.rng = rng
        self.count = 0
        self._perm = rng.permutation(self.n) if self.mode is StreamMode.WITHOUT_REPLACEMENT else None

    @property
    def remaining(self) -> Optional[int]:
        if self._perm is None:
            return None
        return self.n - self.count

    def drawn(self) -> np.ndarray:
        """0-based indices already drawn (without-replacement streams only)."""
        if self._perm is None:
            raise ValueError("with-replacement streams do not track drawn indices")
        return self._perm[:self.count].copy()

    def draw(self, size: int) -> np.ndarray:
        """Next ``size`` indices, 0-based."""
        if self._perm is None:
            out = self.rng.integers(0, self.n, size=size)
        else:
            if self.count + size > self.n:
                raise StreamExhausted(f"stream of {self.n} items exhausted")
            out = self._perm[self.count:self.count + size]
        self.count += size
        return out

    def next_index(self) -> int:
        """Next index, 1-based."""
        return int(self.draw(1)[0]) + 1


class LabelOracle:
    """Answers label queries for an instance and counts observations.

    ``observe_many`` consumes the same randomness whether or not a draw is
    observed, so an adaptive run and a passive run on the same seed see the
    same labels.
    """

    def __init__(self, instance: Instance, rng: Optional[np.random.Generator] = None):
        self.instance = instance
        self.rng = rng if rng is not None else np.random.default_rng()
        self.query_count = 0
        self._fixed = instance.fixed_labels() if instance.noise_mode is NoiseMode.PERSISTENT else None

    def observe(self, i: int) -> int:
        """Label of item ``i`` (1-based)."""
        if not 1 <= i <= self.instance.n:
            raise IndexError(f"item {i} outside [1, {self.instance.n}]")
        return int(self.observe_many(np.array([i - 1]))[0])

    def observe_many(self, idx: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """Labels for 0-based ``idx``; entries outside ``mask`` come back as 0 and are not counted."""
        idx = np.asarray(idx, dtype=np.int64)
        if self._fixed is not None:
            labels = self._fixed[idx]
        else:
            labels = (self.rng.random(idx.size) < self.instance.eta[idx]).astype(float)
        if mask is None:
            self.query_count += int(idx.size)
            return labels
        self.query_count += int(np.count_nonzero(mask))
        return np.where(mask, labels, 0.0)


class RewardOracle:
    """Finite-support rewards in [-1, 1] per item, for the general bandit setting.

    ``values[i]`` and ``probs[i]`` give item i's support points and their
    probabilities. Persistent mode returns each item's mean.
    """

    def __init__(self, values, probs, mode=NoiseMode.STOCHASTIC, rng: Optional[np.random.Generator] = None):
        self.values = np.atleast_2d(np.asarray(values, dtype=float))
        self.probs = np.atleast_2d(np.asarray(probs, dtype=float))
        if self.values.shape != self.probs.shape:
            raise ValueError("values and probs must have the same shape")
        if np.any(np.abs(self.values) > 1):
            raise ValueError("rewards must lie in [-1, 1]")
        if not np.allclose(self.probs.sum(axis=1), 1.0) or np.any(self.probs < 0):
            raise ValueError("each row of probs must be a distribution")
        self.mode = NoiseMode(mode)
        self.rng = rng if rng is not None else np.random.default_rng()
        self.query_count = 0
        self._cdf = np.cumsum(self.probs, axis=1)
        self._cdf[:, -1] = 1.0

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def means(self) -> np.ndarray:
        return (self.values * self.probs).sum(axis=1)

    def observe_many(self, idx: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self.mode is NoiseMode.PERSISTENT:
            out = self.means[idx]
        else:
            u = self.rng.random(idx.size)
            col = (u[:, None] >= self._cdf[idx]).sum(axis=1)
            out = self.values[idx, col]
        if mask is None:
            self.query_count += int(idx.size)
            return out
        self.query_count += int(np.count_nonzero(mask))
        return np.where(mask, out, 0.0)


def spawn_generators(seed, count: int) -> list:
    """Independent generators derived from one seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]
