"""Synthetic instances from the threshold noise models."""

from __future__ import annotations

import numpy as np

from ..core import Instance, NoiseMode


def tsybakov_eta(n: int, h: float, noise_exponent: float, z: float) -> np.ndarray:
    """eta_i = 1/2 + sign(z - i/n)/2 * h * |z - i/n|^exponent, with sign(0) = +1."""
    if not 0 < h <= 1:
        raise ValueError("h must lie in (0, 1]")
    if not 0 <= z <= 1:
        raise ValueError("z must lie in [0, 1]")
    if noise_exponent < 0:
        raise ValueError("noise exponent must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    x = z - np.arange(1, n + 1) / n
    sign = np.where(x >= 0, 1.0, -1.0)
    return 0.5 + sign / 2.0 * h * np.abs(x) ** noise_exponent


def gen_tsybakov(n: int, h: float, noise_exponent: float, z: float, mode=NoiseMode.STOCHASTIC, rng=None) -> Instance:
    """Threshold instance under Tsybakov-type noise.

    Persistent mode needs ``rng`` to realize one label per item, unless every
    eta is already 0 or 1.
    """
    eta = tsybakov_eta(n, h, noise_exponent, z)
    if NoiseMode(mode) is NoiseMode.STOCHASTIC:
        return Instance(eta)
    if np.all((eta == 0) | (eta == 1)):
        return Instance(eta, NoiseMode.PERSISTENT)
    if rng is None:
        raise ValueError("persistent Tsybakov instances need an rng to realize labels")
    return Instance.realize(eta, rng)


def gen_beta_band(n: int, beta: float, z: int, seed=None) -> Instance:
    """Persistent 0/1 labels: Bernoulli(beta) on items 1..z, zero beyond."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if not 1 <= z <= n:
        raise ValueError("band end z must lie in [1, n]")
    rng = np.random.default_rng(seed)
    eta = np.zeros(n)
    eta[:z] = rng.random(z) < beta
    return Instance(eta, NoiseMode.PERSISTENT)
