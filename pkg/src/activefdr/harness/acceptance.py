"""Executable acceptance criteria.

Each ``criterion_*`` function runs one experiment at the tolerance it is
held to and returns a :class:`CriterionResult`. The CLI ``check`` command
and ``tests/test_acceptance.py`` both run them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..confidence import BoundConfig, conf_pair, rho_kappa
from ..core import Instance, NoiseMode, PolicyFamily
from ..elim import run_classify
from ..fdrctl import run_fdr
from ..metrics import best_fdr_policy, best_policy, fdr_feasible, fdr_values, gap_profile, mu_values, tp, tp_values
from ..results import OK
from .coverage import coverage_pair, coverage_single, coverage_threshold, random_explicit_family
from .experiment import ExperimentConfig, run_experiment, unique_argmax

DELTA = 0.1


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    checks: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.number}: {self.name} ({self.elapsed:.1f}s) {self.detail}"


# ----------------------------------------------------------------- instances
def random_classification_instance(rng, max_n=16, max_policies=12, min_gap=0.2):
    """Persistent 0/1 instance on a random explicit family with a unique, well-separated optimum."""
    while True:
        n = int(rng.integers(3, max_n + 1))
        size = int(rng.integers(2, max_policies + 1))
        size = min(size, 2 ** n - 1)
        family = random_explicit_family(rng, n, size)
        inst = Instance((rng.random(n) < 0.5).astype(float), NoiseMode.PERSISTENT)
        mu = mu_values(family, inst)
        if unique_argmax(mu) is None:
            continue
        gaps = gap_profile(family, inst).delta_tilde
        star = best_policy(family, inst)
        if np.delete(gaps, star).min() >= min_gap:
            return family, inst


def fdr_instance_ok(family, inst, alpha, tp_gap=0.3, fdr_gap=0.1) -> bool:
    fdrs = fdr_values(family, inst)
    if np.min(np.abs(fdrs - alpha)) < fdr_gap:
        return False
    feasible = fdr_feasible(family, inst, alpha)
    if not feasible.any():
        return False
    tps = tp_values(family, inst)
    star = int(np.argmax(np.where(feasible, tps, -np.inf)))
    others = np.delete(tps[feasible], np.flatnonzero(np.flatnonzero(feasible) == star))
    return others.size == 0 or tps[star] - others.max() >= tp_gap


def random_fdr_instance(rng, kind, mode, alpha, max_n=20):
    """Random instance satisfying the FDR-gap and TP-gap conditions."""
    mode = NoiseMode(mode)
    while True:
        if kind == "thresholds":
            n = int(rng.integers(3, 11))
            family = PolicyFamily("thresholds", n)
        else:
            n = int(rng.integers(4, max_n + 1))
            family = random_explicit_family(rng, n, int(rng.integers(2, 9)))
        if mode is NoiseMode.PERSISTENT:
            inst = Instance((rng.random(n) < rng.uniform(0.3, 0.9)).astype(float), mode)
        else:
            inst = Instance(rng.random(n) ** rng.uniform(0.3, 1.5))
        if fdr_instance_ok(family, inst, alpha):
            return family, inst


def step_instance(n=20, edge=10, high=0.9, low=0.1) -> Instance:
    return Instance(np.where(np.arange(1, n + 1) <= edge, high, low))


# ---------------------------------------------------------------- criteria
def criterion_1(trials=100, seed=101) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    hits, over_budget = 0, 0
    for trial in range(trials):
        family, inst = random_classification_instance(rng)
        res = run_classify(inst, family, DELTA, seed=seed * 1000 + trial)
        hits += res.winner == best_policy(family, inst)
        over_budget += res.labels_used > inst.n
    elapsed = time.perf_counter() - start
    rate = hits / trials
    passed = rate >= 0.95 and over_budget == 0 and elapsed < 60
    detail = f"success={rate:.3f} (>=0.95), over-budget trials={over_budget} (0), runtime<60s"
    return CriterionResult(1, "classification correctness (persistent)", passed, detail, elapsed)


def criterion_2(trials=50, seed=202) -> CriterionResult:
    start = time.perf_counter()
    inst = step_instance()
    family = PolicyFamily("thresholds", 20)
    target = family.index_of(range(1, 11))
    wins = sum(run_classify(inst, family, DELTA, seed=seed * 1000 + s).winner == target for s in range(trials))
    elapsed = time.perf_counter() - start
    rate = wins / trials
    passed = rate >= 0.90 and elapsed < 120
    return CriterionResult(2, "classification correctness (stochastic)", passed, f"success={rate:.3f} (>=0.90)", elapsed)


def criterion_3(trials=100, seed=303) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    hits, over_budget = 0, 0
    by_mode = {"stochastic": [0, 0], "persistent": [0, 0]}
    for trial in range(trials):
        alpha = (0.2, 0.4)[trial % 2]
        mode = ("stochastic", "persistent")[(trial // 2) % 2]
        kind = ("thresholds", "explicit")[(trial // 4) % 2]
        family, inst = random_fdr_instance(rng, kind, mode, alpha)
        res = run_fdr(inst, family, alpha, DELTA, seed=seed * 1000 + trial, assume_feasible=True)
        ok = res.winner == best_fdr_policy(family, inst, alpha)
        hits += ok
        by_mode[mode][0] += ok
        by_mode[mode][1] += 1
        if mode == "persistent":
            over_budget += res.labels_used > 2 * inst.n
    elapsed = time.perf_counter() - start
    rate = hits / trials
    passed = rate >= 0.90 and over_budget == 0 and elapsed < 300
    split = ", ".join(f"{m}={c}/{t}" for m, (c, t) in by_mode.items())
    detail = f"success={rate:.3f} (>=0.90) [{split}], persistent over-budget={over_budget} (0)"
    return CriterionResult(3, "FDR control correctness", passed, detail, elapsed)


def criterion_4(reps=1000, seed=404) -> CriterionResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    checks = {}
    fam = random_explicit_family(rng, 12, 20)
    mu = rng.uniform(-1, 1, 12)
    anchor = int(rng.integers(len(fam)))
    thr_mu = rng.uniform(-1, 1, 12)
    big = random_explicit_family(rng, 512, 20)
    big_mu = rng.uniform(-1, 1, 512)
    big_anchor = int(rng.integers(len(big)))
    for t in (64, 256):
        checks[f"C1 stochastic t={t}"] = coverage_single(fam, mu, t, DELTA, "stochastic", reps, rng)
        checks[f"C2 stochastic t={t}"] = coverage_pair(fam, mu, anchor, t, DELTA, "stochastic", reps, rng)
        checks[f"threshold t={t}"] = coverage_threshold(thr_mu, 6, t, DELTA, reps, rng)
        checks[f"C1 persistent t={t}"] = coverage_single(big, big_mu, t, DELTA, "persistent", reps, rng)
        checks[f"C2 persistent t={t}"] = coverage_pair(big, big_mu, big_anchor, t, DELTA, "persistent", reps, rng)
    elapsed = time.perf_counter() - start
    worst = max(checks.values())
    passed = worst <= DELTA and elapsed < 120
    detail = f"max violation frequency={worst:.4f} (<= {DELTA})"
    return CriterionResult(4, "confidence coverage", passed, detail, elapsed, checks)


def _scaling_checks(runs: dict, adaptive: str, passive: str, sizes) -> tuple:
    """Mean labels per (algorithm, n), plus paired-dominance and success-rate diagnostics."""
    labels = {key: float(np.mean([r.labels_used for r in res])) for key, res in runs.items()}
    checks = {f"mean labels {a} n={n}": v for (a, n), v in labels.items()}
    for n in sizes:
        pairs = zip(runs[(adaptive, n)], runs[(passive, n)])
        checks[f"paired passive >= adaptive n={n}"] = all(p.labels_used >= a.labels_used for a, p in pairs)
        for algo in (adaptive, passive):
            judged = [r.correct for r in runs[(algo, n)] if r.correct is not None]
            checks[f"success rate {algo} n={n}"] = float(np.mean(judged)) if judged else None
    return labels, checks


def criterion_5(trials=20, seed=505, sizes=(256, 1024, 4096)) -> CriterionResult:
    start = time.perf_counter()
    runs = {}
    for algo in ("classify", "passive_classify"):
        for n in sizes:
            cfg = ExperimentConfig(
                generator={"kind": "tsybakov", "n": n, "h": 0.5, "noise_exponent": 0.0, "z": 0.5},
                algorithm=algo,
                delta=DELTA,
                trials=trials,
                seed=seed,
            )
            runs[(algo, n)] = run_experiment(cfg)
    labels, checks = _scaling_checks(runs, "classify", "passive_classify", sizes)
    lo, hi = sizes[0], sizes[-1]
    adaptive = labels[("classify", hi)] / labels[("classify", lo)]
    passive = labels[("passive_classify", hi)] / labels[("passive_classify", lo)]
    elapsed = time.perf_counter() - start
    passed = adaptive <= 4 and passive >= 8 and elapsed < 600
    detail = f"adaptive ratio={adaptive:.3f} (<=4), passive ratio={passive:.3f} (>=8)"
    return CriterionResult(5, "threshold scaling", passed, detail, elapsed, checks)


def criterion_6(trials=20, seed=606, sizes=(512, 2048)) -> CriterionResult:
    start = time.perf_counter()
    runs = {}
    for algo in ("fdr", "passive_fdr"):
        for n in sizes:
            cfg = ExperimentConfig(
                generator={"kind": "beta_band", "n": n, "beta": 0.8, "z": 20},
                algorithm=algo,
                alpha=0.7,
                delta=DELTA,
                mode="persistent",
                trials=trials,
                seed=seed,
            )
            runs[(algo, n)] = run_experiment(cfg)
    labels, checks = _scaling_checks(runs, "fdr", "passive_fdr", sizes)
    lo, hi = sizes
    adaptive = labels[("fdr", hi)] / labels[("fdr", lo)]
    passive = labels[("passive_fdr", hi)] / labels[("passive_fdr", lo)]
    elapsed = time.perf_counter() - start
    passed = adaptive <= 2 and passive >= 3 and elapsed < 600
    detail = f"adaptive ratio={adaptive:.3f} (<=2), passive ratio={passive:.3f} (>=3)"
    return CriterionResult(6, "beta-band scaling", passed, detail, elapsed, checks)


# -------------------------------------------------------------- invariants
def _survival_classify(trials, seed):
    inst = step_instance()
    family = PolicyFamily("thresholds", 20)
    star = best_policy(family, inst)
    lost = sum(star not in run_classify(inst, family, DELTA, seed=seed + s).final_active for s in range(trials))
    return lost / trials


def survival_fdr_instance():
    """Stochastic thresholds instance with a unique, well-separated max-TP FDR-controlled set."""
    eta = np.array([0.95, 0.9, 0.9, 0.85, 0.05, 0.05, 0.05, 0.05])
    return Instance(eta), PolicyFamily("thresholds", 8), 0.2


def _survival_fdr(trials, seed):
    inst, family, alpha = survival_fdr_instance()
    star = best_fdr_policy(family, inst, alpha)
    feasible = fdr_feasible(family, inst, alpha)
    lost, unsound = 0, 0
    for s in range(trials):
        res = run_fdr(inst, family, alpha, DELTA, seed=seed + s, assume_feasible=True)
        removed = [e["policy"] for e in res.extras["events"]]
        lost += star in removed
        unsound += any(not feasible[p] for p in res.extras["certified_ever"])
    return lost / trials, 1 - unsound / trials


def _monotone_traces(trials, seed):
    ok = True
    inst = step_instance()
    family = PolicyFamily("thresholds", 20)
    for s in range(trials):
        res = run_classify(inst, family, DELTA, seed=seed + s, record=True)
        for prev, cur in zip(res.trace, res.trace[1:]):
            ok &= set(cur["active"]) <= set(prev["active"])
            ok &= set(cur["region"]) <= set(prev["region"])
    finst, ffam, alpha = survival_fdr_instance()
    for s in range(trials):
        res = run_fdr(finst, ffam, alpha, DELTA, seed=seed + s, record=True)
        epochs = [r for r in res.trace if "active" in r]
        left_uncertified = set()
        prev_unc = set(range(len(ffam)))
        for prev, cur in zip([None] + epochs, epochs):
            unc = set(cur["active"]) - set(cur["controlled"])
            ok &= set(cur["controlled"]) <= set(cur["active"])
            left_uncertified |= prev_unc - unc
            ok &= not (unc & left_uncertified)
            prev_unc = unc
            if prev is not None:
                ok &= set(cur["active"]) <= set(prev["active"])
                ok &= set(cur["s_region"]) <= set(prev["s_region"])
                ok &= set(cur["t_region"]) <= set(prev["t_region"])
    return bool(ok)


def _containment(trials, seed):
    ok = True
    inst = Instance(np.linspace(0.95, 0.05, 24))
    family = PolicyFamily("intervals", 24)
    for s in range(trials):
        res = run_classify(inst, family, DELTA, seed=seed + s, record=True, cap=2 ** 16)
        count = 0
        for obs in res.extras["observations"]:
            ok &= set(obs["observed"]) <= set(obs["region"])
            count += len(obs["observed"])
        ok &= count == res.labels_used
    finst, ffam, alpha = survival_fdr_instance()
    for s in range(trials):
        res = run_fdr(finst, ffam, alpha, DELTA, seed=seed + s, record=True)
        count = 0
        for obs in res.extras["observations"]:
            ok &= set(obs["observed_i"]) <= set(obs["s_region"])
            ok &= set(obs["observed_j"]) <= set(obs["t_region"])
            count += len(obs["observed_i"]) + len(obs["observed_j"])
        ok &= count == res.labels_used
    return bool(ok)


def _unbiased_classify(reps, seed):
    """Estimated differences after four draws, averaged over runs, against the truth."""
    eta = np.array([0.9, 0.2, 0.7, 0.4, 0.6, 0.1])
    inst = Instance(eta)
    family = PolicyFamily("explicit", 6, [[1, 2], [1, 3], [3, 4, 5], [2, 5, 6], [1, 3, 5]])
    truth = mu_values(family, inst)
    diffs = []
    for s in range(reps):
        res = run_classify(inst, family, 0.5, seed=seed + s, cap=4)
        est = res.extras["estimates"]
        if len(est) != len(family):
            return False
        vals = np.array([est[p] for p in range(len(family))])
        diffs.append(vals - vals[0])
    diffs = np.array(diffs)
    se = diffs.std(axis=0, ddof=1) / np.sqrt(reps)
    err = np.abs(diffs.mean(axis=0) - (truth - truth[0]))
    return bool(np.all(err[1:] <= 3 * se[1:]))


def _unbiased_fdr(reps, seed):
    eta = np.array([0.9, 0.8, 0.5, 0.3, 0.6, 0.2])
    inst = Instance(eta)
    family = PolicyFamily("thresholds", 6)
    truth = fdr_values(family, inst)
    vals = []
    for s in range(reps):
        res = run_fdr(inst, family, 0.05, 0.5, seed=seed + s, cap=4)
        est = res.extras["fdr_estimates"]
        if len(est) != len(family):
            return False
        vals.append([est[p] for p in range(len(family))])
    vals = np.array(vals)
    se = vals.std(axis=0, ddof=1) / np.sqrt(reps)
    return bool(np.all(np.abs(vals.mean(axis=0) - truth) <= 3 * se))


def _tp_subset_monotone(seed):
    rng = np.random.default_rng(seed)
    for _ in range(200):
        n = int(rng.integers(2, 15))
        eta = rng.random(n)
        big = np.flatnonzero(rng.random(n) < 0.7) + 1
        if big.size == 0:
            continue
        small = big[rng.random(big.size) < 0.5]
        if tp(small, eta) > tp(big, eta) + 1e-12:
            return False
    return True


def _bound_identities(seed):
    """conf_pair is symmetric in its two policies and zero on a policy against itself."""
    rng = np.random.default_rng(seed)
    ok = True
    for family in (PolicyFamily("intervals", 7), random_explicit_family(rng, 9, 15)):
        cfg = BoundConfig("stochastic", n=family.n)
        ids = np.arange(len(family))
        sd = family.symdiff_sizes(ids, ids)
        radius = conf_pair(sd, family.v_pair(ids, ids, sd), 100, 0.1, cfg)
        ok &= bool(np.array_equal(radius, radius.T)) and bool(np.all(np.diag(radius) == 0))
        ok &= bool(np.all(radius[sd > 0] > 0))
    rho, kappa = rho_kappa(1, 50, "persistent")
    return bool(ok), rho == 1.0 and abs(kappa - 4.0 / 3.0) < 1e-15


def criterion_7(trials=100, seed=707) -> CriterionResult:
    start = time.perf_counter()
    checks = {}
    checks["pi* eliminated fraction"] = _survival_classify(trials, seed)
    lost, sound = _survival_fdr(trials, seed + 10_000)
    checks["pi*_alpha removed fraction"] = lost
    checks["certification soundness"] = sound
    checks["monotone A/C/S/T"] = _monotone_traces(20, seed + 20_000)
    checks["region containment and budget"] = _containment(10, seed + 30_000)
    checks["classify estimator unbiased (3 SE)"] = _unbiased_classify(2000, seed + 40_000)
    checks["FDR estimator unbiased (3 SE)"] = _unbiased_fdr(2000, seed + 50_000)
    checks["tp subset monotone"] = _tp_subset_monotone(seed)
    sym, rk = _bound_identities(seed)
    checks["conf_pair symmetry and zero"] = sym
    checks["rho_1 = 1, kappa_1 = 4/3"] = rk
    elapsed = time.perf_counter() - start
    failed = [
        name
        for name, value in checks.items()
        if (isinstance(value, bool) and not value)
        or (name.endswith("fraction") and value > DELTA)
        or (name == "certification soundness" and value < 1 - DELTA)
    ]
    passed = not failed and elapsed < 300
    detail = "all invariants hold" if not failed else "failed: " + ", ".join(failed)
    return CriterionResult(7, "invariant suite", passed, detail, elapsed, checks)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
}


def run_all(only=None, echo=print) -> list:
    results = []
    for number, fn in CRITERIA.items():
        if only and number not in only:
            continue
        res = fn()
        if echo:
            echo(res.line())
        results.append(res)
    return results


__all__ = ["CRITERIA", "CriterionResult", "run_all", "OK"]
