"""Active FDR control: find the max-TP policy whose FDR is at most alpha.

Two index streams run side by side. The I-stream is observed inside the union
of uncertified active policies and feeds the FDR estimates. The J-stream is
observed inside the disagreement region and feeds the TP differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .confidence import BoundConfig, conf_single
from .core import Instance, NoiseMode, PolicyFamily, symdiff_mask, union_mask
from .elim import DEFAULT_CAP, _check_bound, default_bound, dominated
from .results import CAP_HIT, INFEASIBLE, OK, UNCERTIFIED, TrialResult
from .sampling import IndexStream, LabelOracle, spawn_generators, stream_mode_for


@dataclass
class FdrState:
    active: np.ndarray
    controlled: np.ndarray
    superset_record: set
    s_region: np.ndarray
    t_region: np.ndarray
    epoch: int
    t: int
    i_sums: np.ndarray
    j_sums: np.ndarray
    delta: float
    alpha: float
    frozen_fdr: dict = field(default_factory=dict)
    certified_ever: set = field(default_factory=set)
    events: list = field(default_factory=list)


def _regions(family: PolicyFamily, active: np.ndarray, controlled: np.ndarray):
    uncertified = np.setdiff1d(active, controlled)
    s = union_mask(family, uncertified)
    t = symdiff_mask(family, active) if active.size else np.zeros(family.n, dtype=bool)
    return s, t


def fdr_estimates(state: FdrState, family: PolicyFamily, ids: np.ndarray) -> np.ndarray:
    """1 - (n / (|pi| t)) * sum of I-stream labels over pi."""
    if state.t == 0:
        return np.zeros(ids.size)
    sums = family.policy_sums(ids, state.i_sums)
    return 1.0 - family.n * sums / (family.sizes[ids] * state.t)


def tp_estimates(state: FdrState, family: PolicyFamily, ids: np.ndarray) -> np.ndarray:
    """(n/t) * sum of J-stream labels over pi; only differences among active policies are meaningful."""
    if state.t == 0:
        return np.zeros(ids.size)
    return family.n / state.t * family.policy_sums(ids, state.j_sums)


def certify_and_prune(state: FdrState, family: PolicyFamily, cfg: BoundConfig, exact: bool = False) -> FdrState:
    """One epoch boundary: certification, conditions 1 and 2, then condition 3.

    FDR statistics of a policy are frozen when it is certified; later
    condition-1 checks use the frozen pair.
    """
    k = state.epoch
    delta_k = 0.25 * state.delta / k ** 2
    alpha = state.alpha
    active, controlled = state.active, state.controlled

    uncertified = np.setdiff1d(active, controlled)
    fdr_hat = fdr_estimates(state, family, uncertified)
    if exact:
        radius = np.zeros(uncertified.size)
    else:
        sizes = family.sizes[uncertified]
        radius = conf_single(sizes, family.v_single[uncertified], state.t, delta_k, cfg) / sizes
    tol = 1e-12
    newly = fdr_hat + radius <= alpha + tol
    for pid, f, r in zip(uncertified[newly], fdr_hat[newly], radius[newly]):
        state.frozen_fdr[int(pid)] = (float(f), float(r))
        state.certified_ever.add(int(pid))
    ctl_next = np.union1d(controlled, uncertified[newly])

    # condition 1: FDR provably above alpha
    live_over = dict(zip(uncertified.tolist(), (fdr_hat - radius > alpha + tol).tolist()))
    cond1 = np.array(
        [
            live_over[p] if p in live_over else state.frozen_fdr[p][0] - state.frozen_fdr[p][1] > alpha + tol
            for p in active.tolist()
        ],
        dtype=bool,
    )

    # condition 2: beaten on TP by some certified policy
    tp_hat = tp_estimates(state, family, active)
    pos = np.searchsorted(active, ctl_next)
    cond2 = dominated(family, active, tp_hat, ctl_next, tp_hat[pos], state.t, delta_k, cfg, exact)

    removed = cond1 | cond2
    record = state.superset_record | set(active[cond2].tolist())
    for p in active[cond1].tolist():
        state.events.append({"k": k, "rule": 1, "policy": p})
    for p in active[cond2].tolist():
        state.events.append({"k": k, "rule": 2, "policy": p})
    active = active[~removed]
    ctl_next = np.intersect1d(ctl_next, active)

    # condition 3: strictly inside a certified or recorded policy
    anchors = np.union1d(ctl_next, np.fromiter(record, dtype=np.int64, count=len(record)))
    if active.size and anchors.size:
        inside = family.strict_subset(active, anchors)
        cond3 = inside.any(axis=1)
        for row in np.flatnonzero(cond3):
            sup = int(anchors[np.argmax(inside[row])])
            state.events.append({"k": k, "rule": 3, "policy": int(active[row]), "superset": sup})
        active = active[~cond3]
        ctl_next = np.intersect1d(ctl_next, active)

    s_region, t_region = _regions(family, active, ctl_next)
    state.active = active
    state.controlled = ctl_next
    state.superset_record = record
    state.s_region = s_region
    state.t_region = t_region
    state.epoch = k + 1
    return state


def run_fdr(
    instance: Instance,
    family: PolicyFamily,
    alpha: float,
    delta: float,
    cfg: Optional[BoundConfig] = None,
    *,
    seed=None,
    cap: int = DEFAULT_CAP,
    passive: bool = False,
    exact_at_exhaustion: bool = True,
    assume_feasible: bool = False,
    record: bool = False,
) -> TrialResult:
    """Run active FDR control and return the max estimated TP certified policy.

    ``winner`` is None with status ``infeasible`` when nothing is certified at
    termination. If a single uncertified policy survives and the caller knows
    a feasible policy exists (``assume_feasible``), that survivor is returned
    with status ``uncertified_survivor``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if family.n != instance.n:
        raise ValueError("instance and family disagree on n")
    cfg = cfg or default_bound(instance)
    _check_bound(cfg, family)

    n = family.n
    mode = instance.noise_mode
    persistent = mode is NoiseMode.PERSISTENT
    g_i, g_j, g_yi, g_yj = spawn_generators(seed, 4)
    stream_i = IndexStream(stream_mode_for(mode), n, g_i)
    stream_j = IndexStream(stream_mode_for(mode), n, g_j)
    oracle_i = LabelOracle(instance, g_yi)
    oracle_j = LabelOracle(instance, g_yj)

    active = np.arange(len(family))
    controlled = np.zeros(0, dtype=np.int64)
    s_region, t_region = _regions(family, active, controlled)
    state = FdrState(
        active=active,
        controlled=controlled,
        superset_record=set(),
        s_region=s_region,
        t_region=t_region,
        epoch=1,
        t=0,
        i_sums=np.zeros(n),
        j_sums=np.zeros(n),
        delta=delta,
        alpha=alpha,
    )
    trace, observed_log, flags = [], [], []

    def labels():
        return oracle_i.query_count + oracle_j.query_count

    def log_epoch(exact=False):
        rec = {
            "k": state.epoch - 1,
            "t": state.t,
            "n_active": int(state.active.size),
            "n_controlled": int(state.controlled.size),
            "n_record": len(state.superset_record),
            "n_s": int(state.s_region.sum()),
            "n_t": int(state.t_region.sum()),
            "labels": int(labels()),
        }
        if exact:
            rec["exact"] = True
        if record:
            rec["active"] = state.active.tolist()
            rec["controlled"] = state.controlled.tolist()
            rec["s_region"] = np.flatnonzero(state.s_region).tolist()
            rec["t_region"] = np.flatnonzero(state.t_region).tolist()
        trace.append(rec)

    while state.active.size > 1:
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

        idx_i = stream_i.draw(m)
        idx_j = stream_j.draw(m)
        mask_i = np.ones(m, dtype=bool) if passive else state.s_region[idx_i]
        mask_j = np.ones(m, dtype=bool) if passive else state.t_region[idx_j]
        y_i = oracle_i.observe_many(idx_i, mask_i)
        y_j = oracle_j.observe_many(idx_j, mask_j)
        state.i_sums += np.bincount(idx_i, weights=y_i, minlength=n)
        state.j_sums += np.bincount(idx_j, weights=y_j, minlength=n)
        state.t += m
        if record:
            observed_log.append(
                {
                    "t_end": state.t,
                    "s_region": np.flatnonzero(state.s_region).tolist(),
                    "t_region": np.flatnonzero(state.t_region).tolist(),
                    "observed_i": idx_i[mask_i].tolist(),
                    "observed_j": idx_j[mask_j].tolist(),
                }
            )

        at_exhaustion = persistent and exact_at_exhaustion and state.t == n
        if state.t == boundary or at_exhaustion:
            state = certify_and_prune(state, family, cfg, exact=at_exhaustion)
            log_epoch(exact=at_exhaustion)

    status, winner, tp_hat = INFEASIBLE, None, None
    if state.controlled.size:
        tps = tp_estimates(state, family, state.controlled)
        best = int(np.argmax(tps))
        winner, tp_hat, status = int(state.controlled[best]), float(tps[best]), OK
    elif state.active.size == 1 and assume_feasible:
        winner, status = int(state.active[0]), UNCERTIFIED

    final = {"winner": winner, "status": status, "tp_hat": tp_hat}
    if winner is not None and winner in state.frozen_fdr:
        final["fdr_hat"], final["fdr_radius"] = state.frozen_fdr[winner]
    trace.append(final)

    extras = {
        "certified_ever": sorted(state.certified_ever),
        "superset_record": sorted(state.superset_record),
        "controlled": state.controlled.tolist(),
        "events": state.events,
        "frozen_fdr": {str(k): v for k, v in state.frozen_fdr.items()},
    }
    uncertified = np.setdiff1d(state.active, state.controlled)
    extras["fdr_estimates"] = dict(zip(uncertified.tolist(), fdr_estimates(state, family, uncertified).tolist()))
    if record:
        extras["observations"] = observed_log
    return TrialResult(
        winner=winner,
        labels_used=int(labels()),
        epochs=state.epoch - 1,
        t=state.t,
        status=status,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        flags=flags,
        final_active=state.active.tolist(),
        trace=trace,
        extras=extras,
    )
