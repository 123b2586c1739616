"""Monte Carlo coverage of the confidence radii.

Each function runs ``reps`` independent replications at a fixed draw count
and returns the fraction in which some policy's deviation exceeds its
radius.
"""

from __future__ import annotations

import numpy as np

from ..confidence import BoundConfig, conf_pair, conf_single, conf_threshold_pair
from ..core import NoiseMode, PolicyFamily


def random_explicit_family(rng: np.random.Generator, n: int, size: int, max_tries: int = 10_000) -> PolicyFamily:
    """``size`` distinct nonempty random subsets of [n]."""
    seen = set()
    tries = 0
    while len(seen) < size:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not draw enough distinct policies")
        k = int(rng.integers(1, n + 1))
        seen.add(tuple(sorted((rng.choice(n, size=k, replace=False) + 1).tolist())))
    return PolicyFamily("explicit", n, sorted(seen, key=lambda p: (len(p), p)))


def _item_sums(rng, mu: np.ndarray, t: int, mode: NoiseMode) -> np.ndarray:
    """Per-item sums of t rewards with means ``mu``; rewards are +-1 (stochastic) or mu (persistent)."""
    n = mu.size
    if mode is NoiseMode.PERSISTENT:
        idx = rng.permutation(n)[:t]
        y = mu[idx]
    else:
        idx = rng.integers(0, n, size=t)
        y = np.where(rng.random(t) < (1.0 + mu[idx]) / 2.0, 1.0, -1.0)
    return np.bincount(idx, weights=y, minlength=n)


def coverage_single(family, mu, t, delta, mode=NoiseMode.STOCHASTIC, reps=1000, rng=None, corrections=True) -> float:
    rng = rng if rng is not None else np.random.default_rng()
    mode = NoiseMode(mode)
    ids = np.arange(len(family))
    cfg = BoundConfig(mode, n=family.n, corrections=corrections)
    truth = family.policy_sums(ids, mu)
    radius = conf_single(family.sizes, family.v_single, t, delta, cfg)
    misses = 0
    for _ in range(reps):
        est = family.n / t * family.policy_sums(ids, _item_sums(rng, mu, t, mode))
        misses += bool(np.any(np.abs(est - truth) > radius))
    return misses / reps


def coverage_pair(family, mu, anchor, t, delta, mode=NoiseMode.STOCHASTIC, reps=1000, rng=None, corrections=True) -> float:
    rng = rng if rng is not None else np.random.default_rng()
    mode = NoiseMode(mode)
    ids = np.arange(len(family))
    cfg = BoundConfig(mode, n=family.n, corrections=corrections)
    truth = family.policy_sums(ids, mu)
    true_diff = truth[anchor] - truth
    sd = family.symdiff_sizes(ids, [anchor])[:, 0]
    v = family.v_pair(ids, [anchor], sd[:, None])[:, 0]
    radius = conf_pair(sd, v, t, delta, cfg)
    misses = 0
    for _ in range(reps):
        est = family.n / t * family.policy_sums(ids, _item_sums(rng, mu, t, mode))
        dev = np.abs((est[anchor] - est) - true_diff)
        misses += bool(np.any(dev > radius + 1e-12))
    return misses / reps


def coverage_threshold(mu, anchor, T, delta, reps=1000, rng=None) -> float:
    """Threshold bound on the 1/T averaged scale, anchored at threshold ``anchor`` (1-based)."""
    rng = rng if rng is not None else np.random.default_rng()
    n = mu.size
    s = np.arange(1, n + 1)
    truth = np.cumsum(mu) / n
    radius = conf_threshold_pair(s, anchor, n, T, delta)
    misses = 0
    for _ in range(reps):
        est = np.cumsum(_item_sums(rng, mu, T, NoiseMode.STOCHASTIC)) / T
        dev = np.abs((est - est[anchor - 1]) - (truth - truth[anchor - 1]))
        misses += bool(np.any(dev > radius + 1e-12))
    return misses / reps
