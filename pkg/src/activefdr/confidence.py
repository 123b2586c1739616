"""Deviation bounds for the set estimators.

``conf_single`` and ``conf_pair`` are Bernstein radii on the sum scale of the
``(n/t) * sum`` estimators, with the without-replacement factors rho_t and
kappa_t applied in persistent mode. ``conf_threshold_pair`` is the nested
threshold bound on the ``1/T`` averaged scale. All functions broadcast over
numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import NoiseMode


class BoundKind(str, enum.Enum):
    GENERAL_VC = "general_vc"
    THRESHOLD_SPECIAL = "threshold_special"


@dataclass(frozen=True)
class BoundConfig:
    """Which radii an engine uses.

    ``corrections`` toggles rho_t/kappa_t in persistent mode; with it off the
    stochastic radii are used unchanged.
    """

    mode: NoiseMode = NoiseMode.STOCHASTIC
    bound_kind: BoundKind = BoundKind.GENERAL_VC
    n: int = 1
    corrections: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", NoiseMode(self.mode))
        object.__setattr__(self, "bound_kind", BoundKind(self.bound_kind))


def _check_delta(delta):
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def _rho_kappa_branch(t, n, upper: bool):
    if not upper:
        rho = 1.0 - (t - 1) / n
        kappa = 4.0 / 3.0 + math.sqrt(t * (t - 1) / (n * (n - t + 1)))
    else:
        rho = 1.0 - t / n
        kappa = 4.0 / 3.0 + math.sqrt(max((n - t - 1) * (n - t), 0) / ((t + 1) * n))
    return rho, kappa


def rho_kappa(t: int, n: int, mode=NoiseMode.STOCHASTIC) -> tuple:
    """Without-replacement correction factors (rho_t, kappa_t).

    At exactly t = n/2 both branches apply; the componentwise larger value is
    returned since the radii are increasing in both factors.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    if NoiseMode(mode) is NoiseMode.STOCHASTIC:
        return 1.0, 1.0
    if t > n:
        raise ValueError(f"persistent mode needs t <= n (t={t}, n={n})")
    if 2 * t < n:
        return _rho_kappa_branch(t, n, upper=False)
    if 2 * t > n:
        return _rho_kappa_branch(t, n, upper=True)
    lo, hi = _rho_kappa_branch(t, n, False), _rho_kappa_branch(t, n, True)
    return max(lo[0], hi[0]), max(lo[1], hi[1])


def _factors(t, cfg: BoundConfig):
    if cfg.mode is NoiseMode.PERSISTENT and cfg.corrections:
        return rho_kappa(t, cfg.n, cfg.mode)
    return 1.0, 1.0


def conf_single(size, v, t: int, delta: float, cfg: BoundConfig):
    """Radius C1 for |mu_hat(pi) - mu(pi)| given |pi| = ``size`` and weight ``v``."""
    _check_delta(delta)
    if t < 1:
        raise ValueError("t must be at least 1")
    rho, kappa = _factors(t, cfg)
    n = cfg.n
    log_term = math.log(n / delta)
    size = np.asarray(size, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.sqrt(4.0 * rho * size * n * v * log_term / t) + 4.0 * n * kappa * v * log_term / (3.0 * t)
    return out if out.ndim else float(out)


def conf_pair(symdiff, v, t: int, delta: float, cfg: BoundConfig):
    """Radius C2 for a pairwise difference; zero where the sets coincide."""
    _check_delta(delta)
    if t < 1:
        raise ValueError("t must be at least 1")
    rho, kappa = _factors(t, cfg)
    n = cfg.n
    log_term = math.log(n / delta)
    symdiff = np.asarray(symdiff, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.sqrt(8.0 * rho * symdiff * n * v * log_term / t) + 4.0 * kappa * n * v * log_term / (3.0 * t)
    out = np.where(symdiff > 0, out, 0.0)
    return out if out.ndim else float(out)


def conf_threshold_pair_gap(gap, n: int, T: int, delta: float):
    """Threshold bound as a function of |s - t'|, averaged scale."""
    _check_delta(delta)
    if T < 1:
        raise ValueError("T must be at least 1")
    gap = np.asarray(gap, dtype=float)
    safe = np.maximum(gap, 1.0)
    log_term = np.log(2.0 * np.log2(4.0 * safe) ** 2 / (3.0 * delta))
    first = np.sqrt(2.0 * safe / (n * T) * (43.0 + 2.0 * math.sqrt(2.0) * log_term))
    second = (12.0 + log_term) / (3.0 * T)
    out = np.where(gap > 0, first + second, 0.0)
    return out if out.ndim else float(out)


def conf_threshold_pair(s, t_prime, n: int, T: int, delta: float):
    """Deviation bound for mu_hat_s - mu_hat_t' between thresholds [s] and [t']."""
    s = np.asarray(s)
    t_prime = np.asarray(t_prime)
    if np.any(s < 1) or np.any(s > n) or np.any(t_prime < 1) or np.any(t_prime > n):
        raise ValueError("threshold indices must lie in [1, n]")
    return conf_threshold_pair_gap(np.abs(s - t_prime), n, T, delta)


def pair_radius(symdiff, v, t: int, delta: float, cfg: BoundConfig):
    """Sum-scale pairwise radius used by the engines for the configured bound."""
    if cfg.bound_kind is BoundKind.THRESHOLD_SPECIAL:
        return cfg.n * conf_threshold_pair_gap(symdiff, cfg.n, t, delta)
    return conf_pair(symdiff, v, t, delta, cfg)
