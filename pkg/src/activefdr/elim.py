"""Doubling-epoch action elimination for active classification.

Rewards are ``2Y - 1`` for Bernoulli labels, or any [-1, 1] rewards through a
:class:`~activefdr.sampling.RewardOracle`. Between epoch boundaries only
items in the disagreement region of the active policies are observed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .confidence import BoundConfig, BoundKind, pair_radius
from .core import FamilyKind, Instance, NoiseMode, PolicyFamily, symdiff_mask
from .results import CAP_HIT, TrialResult
from .sampling import IndexStream, LabelOracle, RewardOracle, spawn_generators, stream_mode_for

DEFAULT_CAP = 2 ** 26
_PAIR_BLOCK = 4_000_000


@dataclass
class ElimState:
    active: np.ndarray
    region: np.ndarray
    epoch: int
    t: int
    item_sums: np.ndarray
    delta: float
    delta_k: Optional[float] = None


def default_bound(instance_or_n, mode=None) -> BoundConfig:
    if isinstance(instance_or_n, Instance):
        return BoundConfig(instance_or_n.noise_mode, BoundKind.GENERAL_VC, instance_or_n.n)
    return BoundConfig(mode or NoiseMode.STOCHASTIC, BoundKind.GENERAL_VC, int(instance_or_n))


def _check_bound(cfg: BoundConfig, family: PolicyFamily):
    if cfg.bound_kind is BoundKind.THRESHOLD_SPECIAL and family.kind is not FamilyKind.THRESHOLDS:
        raise ValueError("the threshold bound needs a thresholds family")
    if cfg.n != family.n:
        raise ValueError("bound config and family disagree on n")


def _tolerance(values: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(values)))) if values.size else 0.0


def dominated(
    family: PolicyFamily,
    candidates: np.ndarray,
    cand_est: np.ndarray,
    rivals: np.ndarray,
    rival_est: np.ndarray,
    t: int,
    delta_k: float,
    cfg: BoundConfig,
    exact: bool = False,
) -> np.ndarray:
    """Mask over ``candidates``: some rival beats it by more than the pairwise radius.

    With ``exact`` the radius is zero and any strictly positive gap counts.
    """
    out = np.zeros(candidates.size, dtype=bool)
    if candidates.size == 0 or rivals.size == 0:
        return out
    tol = _tolerance(np.concatenate([cand_est, rival_est]))
    spread = float(rival_est.max() - cand_est.min())
    if spread <= tol:
        return out
    if not exact and spread - float(pair_radius(1, 1.0, t, delta_k, cfg)) <= tol:
        # radii are increasing in symdiff and weight, both at least 1
        return out
    block = max(1, _PAIR_BLOCK // rivals.size)
    for start in range(0, candidates.size, block):
        rows = candidates[start:start + block]
        diff = rival_est[None, :] - cand_est[start:start + block, None]
        if exact:
            out[start:start + block] = (diff > tol).any(axis=1)
            continue
        sd = family.symdiff_sizes(rows, rivals)
        v = family.v_pair(rows, rivals, sd)
        radius = pair_radius(sd, v, t, delta_k, cfg)
        out[start:start + block] = (diff - radius > tol).any(axis=1)
    return out


def estimates(state: ElimState, family: PolicyFamily) -> np.ndarray:
    """(n/t) * sum of observed rewards over each active policy.

    Only differences between active policies are meaningful.
    """
    if state.t == 0:
        return np.zeros(state.active.size)
    return family.n / state.t * family.policy_sums(state.active, state.item_sums)


def epoch_update(
    state: ElimState,
    family: PolicyFamily,
    cfg: BoundConfig,
    exact: bool = False,
) -> ElimState:
    """Eliminate against the current active snapshot, refresh the region, advance the epoch."""
    k = state.epoch
    delta_k = 0.5 * state.delta / k ** 2
    est = estimates(state, family)
    drop = dominated(family, state.active, est, state.active, est, state.t, delta_k, cfg, exact)
    active = state.active[~drop]
    return dataclasses.replace(
        state,
        active=active,
        region=symdiff_mask(family, active),
        epoch=k + 1,
        delta_k=delta_k,
    )


def run_classify(
    instance: Instance,
    family: PolicyFamily,
    delta: float,
    cfg: Optional[BoundConfig] = None,
    *,
    seed=None,
    cap: int = DEFAULT_CAP,
    passive: bool = False,
    exact_at_exhaustion: bool = True,
    fast_path: bool = False,
    rewards: Optional[RewardOracle] = None,
    record: bool = False,
) -> TrialResult:
    """Run action elimination until one policy is left.

    Persistent runs draw without replacement and stop after n draws. With
    ``exact_at_exhaustion`` the last update at t = n uses zero radii, since
    every label in the disagreement region has been seen by then. ``passive``
    observes every draw while keeping the same elimination logic.
    ``rewards`` replaces Bernoulli labels with arbitrary [-1, 1] rewards.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if len(family) < 1:
        raise ValueError("family must contain at least one policy")
    if family.n != instance.n:
        raise ValueError("instance and family disagree on n")
    cfg = cfg or default_bound(instance)
    _check_bound(cfg, family)
    mode = instance.noise_mode
    if rewards is not None:
        mode = rewards.mode
        if rewards.n != instance.n:
            raise ValueError("reward oracle and instance disagree on n")
    if fast_path and (passive or mode is NoiseMode.PERSISTENT):
        raise ValueError("the binomial fast path only applies to adaptive stochastic runs")

    n = family.n
    gen_index, gen_label, gen_fast = spawn_generators(seed, 3)
    stream = IndexStream(stream_mode_for(mode), n, gen_index)
    if rewards is not None:
        oracle = rewards
        oracle.rng = gen_label
    else:
        oracle = LabelOracle(instance, gen_label)

    active = np.arange(len(family))
    state = ElimState(
        active=active,
        region=symdiff_mask(family, active),
        epoch=1,
        t=0,
        item_sums=np.zeros(n),
        delta=delta,
    )
    trace, observed_log, flags = [], [], []
    persistent = mode is NoiseMode.PERSISTENT

    def log_epoch(exact=False):
        rec = {
            "k": state.epoch - 1,
            "t": state.t,
            "n_active": int(state.active.size),
            "n_region": int(state.region.sum()),
            "labels": int(oracle.query_count),
        }
        if exact:
            rec["exact"] = True
        if record:
            rec["active"] = state.active.tolist()
            rec["region"] = np.flatnonzero(state.region).tolist()
        trace.append(rec)

    while state.region.any():
        if persistent and state.t >= n:
            break
        if state.t >= cap:
            flags.append(CAP_HIT)
            break
        boundary = 2 ** state.epoch
        m = boundary - state.t
        if persistent:
            m = min(m, n - state.t)
        m = min(m, cap - state.t)

        if fast_path:
            region_items = np.flatnonzero(state.region)
            hits = gen_fast.binomial(m, region_items.size / n)
            idx = region_items[gen_fast.integers(0, region_items.size, size=hits)]
            mask = np.ones(idx.size, dtype=bool)
            stream.count += m
        else:
            idx = stream.draw(m)
            mask = np.ones(m, dtype=bool) if passive else state.region[idx]
        if rewards is not None:
            values = oracle.observe_many(idx, mask)
        else:
            values = np.where(mask, 2.0 * oracle.observe_many(idx, mask) - 1.0, 0.0)
        state.item_sums += np.bincount(idx, weights=values, minlength=n)
        state.t += m
        if record:
            observed_log.append(
                {"t_end": state.t, "region": np.flatnonzero(state.region).tolist(), "observed": idx[mask].tolist()}
            )

        at_exhaustion = persistent and exact_at_exhaustion and state.t == n
        if state.t == boundary or at_exhaustion:
            state = epoch_update(state, family, cfg, exact=at_exhaustion)
            log_epoch(exact=at_exhaustion)

    est = estimates(state, family)
    winner = int(state.active[int(np.argmax(est))])
    extras = {"estimates": dict(zip(state.active.tolist(), est.tolist()))}
    if record:
        extras["observations"] = observed_log
    return TrialResult(
        winner=winner,
        labels_used=int(oracle.query_count),
        epochs=state.epoch - 1,
        t=state.t,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        flags=flags,
        final_active=state.active.tolist(),
        trace=trace,
        extras=extras,
    )
