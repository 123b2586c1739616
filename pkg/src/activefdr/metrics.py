"""Ground-truth functionals, brute-force optima and sample-complexity predictors."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Instance, NoiseMode, PolicyFamily

_FDR_TOL = 1e-12


def _items(policy, n: int) -> np.ndarray:
    idx = np.array(sorted(int(i) for i in policy), dtype=np.int64) - 1
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError("policy has items outside [1, n]")
    return idx


def _as_eta(instance) -> np.ndarray:
    """Ground-truth means; a persistent instance's truth is its fixed labels."""
    if isinstance(instance, Instance):
        if instance.noise_mode is NoiseMode.PERSISTENT:
            return instance.fixed_labels()
        return instance.eta
    return np.asarray(instance, dtype=float)


def risk(policy, instance) -> float:
    """Expected 0/1 error of classifying ``policy`` as positive, everything else negative."""
    eta = _as_eta(instance)
    inside = np.zeros(eta.size, dtype=bool)
    inside[_items(policy, eta.size)] = True
    return float((eta[~inside].sum() + (1.0 - eta[inside]).sum()) / eta.size)


def tp(policy, instance) -> float:
    eta = _as_eta(instance)
    return float(eta[_items(policy, eta.size)].sum())


def fdr(policy, instance) -> float:
    eta = _as_eta(instance)
    idx = _items(policy, eta.size)
    if idx.size == 0:
        raise ValueError("FDR of the empty set is undefined")
    return float(1.0 - eta[idx].sum() / idx.size)


def tpr(policy, instance) -> float:
    eta = _as_eta(instance)
    total = eta.sum()
    if total <= 0:
        raise ValueError("TPR is undefined when no item has positive mean")
    return float(eta[_items(policy, eta.size)].sum() / total)


def mu_values(family: PolicyFamily, instance) -> np.ndarray:
    """mu_pi = sum over pi of (2 eta_i - 1), for every policy."""
    eta = _as_eta(instance)
    return family.policy_sums(np.arange(len(family)), 2.0 * eta - 1.0)


def tp_values(family: PolicyFamily, instance) -> np.ndarray:
    return family.policy_sums(np.arange(len(family)), _as_eta(instance))


def fdr_values(family: PolicyFamily, instance) -> np.ndarray:
    return 1.0 - tp_values(family, instance) / family.sizes


def best_policy(family: PolicyFamily, instance) -> int:
    """argmax of mu_pi (equivalently argmin of risk); lowest id on ties."""
    return int(np.argmax(mu_values(family, instance)))


def fdr_feasible(family: PolicyFamily, instance, alpha: float) -> np.ndarray:
    """Mask of policies with FDR <= alpha, up to floating-point rounding."""
    return fdr_values(family, instance) <= alpha + _FDR_TOL


def best_fdr_policy(family: PolicyFamily, instance, alpha: float) -> Optional[int]:
    """Max-TP policy with FDR <= alpha, or None when no policy qualifies."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    feasible = fdr_feasible(family, instance, alpha)
    if not feasible.any():
        return None
    tps = np.where(feasible, tp_values(family, instance), -np.inf)
    return int(np.argmax(tps))


@dataclass
class GapProfile:
    mu_pi: np.ndarray
    tp_pi: np.ndarray
    delta_tilde: np.ndarray
    delta_alpha: Optional[np.ndarray] = None
    delta_tilde_fdr: Optional[np.ndarray] = None


def gap_profile(family: PolicyFamily, instance, alpha: Optional[float] = None) -> GapProfile:
    """Per-policy gaps; the reference policy itself gets gap 0."""
    everything = np.arange(len(family))
    mu = mu_values(family, instance)
    tps = tp_values(family, instance)
    star = int(np.argmax(mu))
    sd = family.symdiff_sizes(everything, [star])[:, 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        dt = np.where(sd > 0, np.abs(mu - mu[star]) / np.maximum(sd, 1), 0.0)
    prof = GapProfile(mu_pi=mu, tp_pi=tps, delta_tilde=dt)
    if alpha is not None:
        prof.delta_alpha = np.abs(fdr_values(family, instance) - alpha)
        star_a = best_fdr_policy(family, instance, alpha)
        if star_a is not None:
            sd_a = family.symdiff_sizes(everything, [star_a])[:, 0]
            prof.delta_tilde_fdr = np.where(sd_a > 0, np.abs(tps[star_a] - tps) / np.maximum(sd_a, 1), 0.0)
    return prof


def _log_factor(gap: np.ndarray, n: int, delta: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        inner = np.log(1.0 / gap ** 2)
    inner = np.maximum(inner, math.e)
    return np.log(n * inner / delta)


def _rate(weight, gap, n, delta) -> np.ndarray:
    """weight / gap^2 * log(n log(gap^-2) / delta), infinite at zero gap."""
    gap = np.asarray(gap, dtype=float)
    out = np.full(gap.shape, np.inf)
    ok = gap > 0
    out[ok] = weight[ok] / gap[ok] ** 2 * _log_factor(gap[ok], n, delta)
    return out


def _per_item_max(family: PolicyFamily, member: np.ndarray, values: np.ndarray) -> np.ndarray:
    """For each item, max of ``values`` over policies whose ``member`` row contains it (0 if none)."""
    out = np.where(member, values[:, None], -np.inf).max(axis=0)
    out[np.isneginf(out)] = 0.0
    return out


@dataclass
class Predictors:
    tau: np.ndarray
    classify_total: dict
    s_fdr: Optional[np.ndarray] = None
    s_tp: Optional[np.ndarray] = None
    t_fdr: Optional[np.ndarray] = None
    t_tp: Optional[np.ndarray] = None
    fdr_total: Optional[dict] = None
    best: int = 0
    best_alpha: Optional[int] = None

    def records(self) -> dict:
        def cell(arr, p):
            if arr is None:
                return None
            x = float(arr[p])
            return "inf" if math.isinf(x) else x

        out = {}
        for p in range(self.tau.size):
            out[str(p)] = {
                "tau": cell(self.tau, p),
                "s_fdr": cell(self.s_fdr, p),
                "s_tp": cell(self.s_tp, p),
                "T_fdr": cell(self.t_fdr, p),
                "T_tp": cell(self.t_tp, p),
            }
        return out

    def to_json(self) -> str:
        def clean(d):
            if d is None:
                return None
            return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}

        return json.dumps(
            {
                "best": self.best,
                "best_alpha": self.best_alpha,
                "classify_total": clean(self.classify_total),
                "fdr_total": clean(self.fdr_total),
                "policies": self.records(),
            },
            indent=2,
        )


def complexity_predictors(family: PolicyFamily, instance, alpha: Optional[float], delta: float) -> Predictors:
    """Ground-truth sample-complexity predictors, up to a multiplicative constant.

    Totals are reported for both noise models; the persistent totals clamp
    each item's contribution at 1.
    """
    n = family.n
    everything = np.arange(len(family))
    member = family.membership
    mu = mu_values(family, instance)
    star = int(np.argmax(mu))

    sd_star = family.symdiff_sizes(everything, [star])[:, 0]
    v_star = family.v_pair(everything, [star], sd_star[:, None])[:, 0]
    not_star = sd_star > 0
    gap = np.zeros(len(family))
    gap[not_star] = np.abs(mu[not_star] - mu[star]) / sd_star[not_star]
    tau = np.zeros(len(family))
    tau[not_star] = _rate(v_star[not_star] / sd_star[not_star], gap[not_star], n, delta)
    disagree = member != member[star][None, :]
    per_item = _per_item_max(family, disagree, tau)
    classify_total = {
        "stochastic": float(per_item.sum()),
        "persistent": float(np.minimum(per_item, 1.0).sum()),
    }
    pred = Predictors(tau=tau, classify_total=classify_total, best=star)
    if alpha is None:
        return pred

    star_a = best_fdr_policy(family, instance, alpha)
    pred.best_alpha = star_a
    fdrs = fdr_values(family, instance)
    feasible = fdrs <= alpha + _FDR_TOL
    s_fdr = _rate(family.v_single / family.sizes, np.abs(fdrs - alpha), n, delta)
    pred.s_fdr = s_fdr
    if star_a is None:
        return pred

    tps = tp_values(family, instance)
    sd_a = family.symdiff_sizes(everything, [star_a])[:, 0]
    v_a = family.v_pair(everything, [star_a], sd_a[:, None])[:, 0]
    off = sd_a > 0
    gap_tp = np.zeros(len(family))
    gap_tp[off] = np.abs(tps[star_a] - tps[off]) / sd_a[off]
    s_tp = np.zeros(len(family))
    s_tp[off] = _rate(v_a[off] / sd_a[off], gap_tp[off], n, delta)

    subset = family.strict_subset(everything, everything) & feasible[None, :]
    sup_min = np.where(subset, s_fdr[None, :], np.inf).min(axis=1)
    tp_or_star = np.maximum(s_tp, s_fdr[star_a])
    t_fdr = np.minimum(np.minimum(s_fdr, tp_or_star), sup_min)
    t_tp = np.minimum(tp_or_star, sup_min)

    fdr_part = _per_item_max(family, member, t_fdr)
    disagree_a = (member != member[star_a][None, :]) & feasible[:, None]
    tp_part = _per_item_max(family, disagree_a, t_tp)
    pred.s_tp, pred.t_fdr, pred.t_tp = s_tp, t_fdr, t_tp
    pred.fdr_total = {
        "fdr_control": float(fdr_part.sum()),
        "tpr_elimination": float(tp_part.sum()),
        "stochastic": float(fdr_part.sum() + tp_part.sum()),
        "persistent": float(np.minimum(fdr_part + tp_part, 1.0).sum()),
    }
    return pred
