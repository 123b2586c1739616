"""Seeded multi-trial experiments, passive baselines and parameter sweeps."""

from __future__ import annotations

import copy
import csv
import enum
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..confidence import BoundConfig, BoundKind
from ..core import Instance, NoiseMode, PolicyFamily
from ..elim import DEFAULT_CAP, run_classify
from ..fdrctl import run_fdr
from ..metrics import best_fdr_policy, fdr_feasible, mu_values, tp_values
from ..results import INFEASIBLE, TrialResult
from .generators import gen_beta_band, gen_tsybakov

_TIE_TOL = 1e-9


class Algorithm(str, enum.Enum):
    CLASSIFY = "classify"
    FDR = "fdr"
    PASSIVE_CLASSIFY = "passive_classify"
    PASSIVE_FDR = "passive_fdr"

    @property
    def passive(self) -> bool:
        return self in (Algorithm.PASSIVE_CLASSIFY, Algorithm.PASSIVE_FDR)

    @property
    def is_fdr(self) -> bool:
        return self in (Algorithm.FDR, Algorithm.PASSIVE_FDR)


@dataclass
class ExperimentConfig:
    """One experiment: an instance generator, a family, an engine and a seed.

    ``generator`` is a dict with ``kind`` one of ``tsybakov`` (n, h,
    noise_exponent, z), ``beta_band`` (n, beta, z) or ``explicit`` (eta).
    ``family`` is a family JSON description; its ``n`` defaults to the
    generator's.
    """

    generator: dict
    family: dict = field(default_factory=lambda: {"kind": "thresholds"})
    algorithm: Algorithm = Algorithm.CLASSIFY
    alpha: Optional[float] = None
    delta: float = 0.1
    mode: NoiseMode = NoiseMode.STOCHASTIC
    trials: int = 10
    seed: int = 0
    cap: int = DEFAULT_CAP
    bound_kind: BoundKind = BoundKind.GENERAL_VC

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        self.mode = NoiseMode(self.mode)
        self.bound_kind = BoundKind(self.bound_kind)
        kind = self.generator.get("kind")
        if kind not in ("tsybakov", "beta_band", "explicit"):
            raise ValueError(f"unknown generator kind {kind!r}")
        if kind == "beta_band" and self.mode is not NoiseMode.PERSISTENT:
            raise ValueError("beta_band instances are persistent; set mode to persistent")
        if self.algorithm.is_fdr and self.alpha is None:
            raise ValueError("FDR experiments need alpha")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be positive")

    @property
    def n(self) -> int:
        if self.generator["kind"] == "explicit":
            return len(self.generator["eta"])
        return int(self.generator["n"])

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("algorithm", "mode", "bound_kind"):
            out[key] = out[key].value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def trial_seed(base_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(trial)]).generate_state(1)[0])


def build_family(config: ExperimentConfig) -> PolicyFamily:
    desc = dict(config.family)
    desc.setdefault("n", config.n)
    return PolicyFamily.from_dict(desc)


def build_instance(config: ExperimentConfig, seed: int) -> Instance:
    """Instance for one trial; random generators are realized from ``seed``."""
    gen = config.generator
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    if gen["kind"] == "tsybakov":
        return gen_tsybakov(gen["n"], gen["h"], gen.get("noise_exponent", 0.0), gen["z"], config.mode, rng)
    if gen["kind"] == "beta_band":
        return gen_beta_band(gen["n"], gen["beta"], gen["z"], rng)
    eta = np.asarray(gen["eta"], dtype=float)
    if config.mode is NoiseMode.PERSISTENT and not np.all((eta == 0) | (eta == 1)):
        return Instance.realize(eta, rng)
    return Instance(eta, config.mode)


def unique_argmax(values: np.ndarray, mask: Optional[np.ndarray] = None) -> Optional[int]:
    """Index of the strict maximum, or None when it is tied or ``mask`` is empty."""
    vals = np.where(mask, values, -np.inf) if mask is not None else values
    if not np.isfinite(vals).any():
        return None
    best = int(np.argmax(vals))
    if np.sum(vals >= vals[best] - _TIE_TOL) > 1:
        return None
    return best


def judge(result: TrialResult, family: PolicyFamily, instance: Instance, alpha: Optional[float]) -> bool:
    """Whether the winner attains the brute-force optimum value (any member of a tied optimum counts)."""
    if alpha is None:
        mu = mu_values(family, instance)
        return result.winner is not None and bool(mu[result.winner] >= mu.max() - _TIE_TOL)
    feasible = fdr_feasible(family, instance, alpha)
    if not feasible.any():
        return result.status == INFEASIBLE
    if result.winner is None or not feasible[result.winner]:
        return False
    tps = tp_values(family, instance)
    return bool(tps[result.winner] >= tps[feasible].max() - _TIE_TOL)


def run_passive(
    instance: Instance,
    family: PolicyFamily,
    algorithm,
    alpha: Optional[float],
    delta: float,
    cfg: Optional[BoundConfig] = None,
    **kwargs,
) -> TrialResult:
    """Non-adaptive comparator: same engine with every draw observed."""
    algorithm = Algorithm(algorithm)
    if algorithm.is_fdr:
        return run_fdr(instance, family, alpha, delta, cfg, passive=True, **kwargs)
    return run_classify(instance, family, delta, cfg, passive=True, **kwargs)


def run_trial(config: ExperimentConfig, trial: int, family: Optional[PolicyFamily] = None) -> TrialResult:
    seed = trial_seed(config.seed, trial)
    family = family or build_family(config)
    instance = build_instance(config, seed)
    cfg = BoundConfig(config.mode, config.bound_kind, family.n)
    alpha = config.alpha if config.algorithm.is_fdr else None
    common = dict(seed=seed, cap=config.cap, passive=config.algorithm.passive)
    if alpha is None:
        result = run_classify(instance, family, config.delta, cfg, **common)
    else:
        feasible = best_fdr_policy(family, instance, alpha) is not None
        result = run_fdr(instance, family, alpha, config.delta, cfg, assume_feasible=feasible, **common)
    result.correct = judge(result, family, instance, alpha)
    return result


def _run_chunk(args):
    config_dict, trials = args
    config = ExperimentConfig.from_dict(config_dict)
    family = build_family(config)
    return [run_trial(config, i, family) for i in trials]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list:
    """All trials of ``config``, ordered by trial index."""
    if workers <= 1:
        family = build_family(config)
        return [run_trial(config, i, family) for i in range(config.trials)]
    chunks = [list(range(config.trials))[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [(config.to_dict(), c) for c in chunks]))
    by_trial = {}
    for chunk, results in zip(chunks, parts):
        by_trial.update(zip(chunk, results))
    return [by_trial[i] for i in range(config.trials)]


SWEEP_COLUMNS = [
    "generator", "n", "h", "noise_exponent", "z", "beta", "family", "algorithm", "mode",
    "alpha", "delta", "trials", "seed", "mean_labels", "median_labels", "success_rate",
]


def _apply(config: dict, key: str, value) -> dict:
    out = copy.deepcopy(config)
    if key == "n":
        out["generator"]["n"] = value
        out.setdefault("family", {"kind": "thresholds"}).pop("n", None)
    elif key in ("h", "noise_exponent", "z", "beta"):
        out["generator"][key] = value
    else:
        out[key] = value
    return out


def expand_grid(plan: dict) -> list:
    """Configs for every combination in ``plan['grid']`` applied to ``plan['base']``."""
    base = plan["base"]
    grid = plan.get("grid", {})
    keys = list(grid)
    configs = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        cfg = copy.deepcopy(base)
        for key, value in zip(keys, combo):
            cfg = _apply(cfg, key, value)
        configs.append(ExperimentConfig.from_dict(cfg))
    return configs


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def summarize(config: ExperimentConfig, results: list) -> dict:
    labels = np.array([r.labels_used for r in results], dtype=float)
    judged = [r.correct for r in results if r.correct is not None]
    gen = config.generator
    return {
        "generator": gen["kind"],
        "n": config.n,
        "h": gen.get("h"),
        "noise_exponent": gen.get("noise_exponent"),
        "z": gen.get("z"),
        "beta": gen.get("beta"),
        "family": config.family.get("kind", "thresholds"),
        "algorithm": config.algorithm.value,
        "mode": config.mode.value,
        "alpha": config.alpha,
        "delta": config.delta,
        "trials": config.trials,
        "seed": config.seed,
        "mean_labels": float(labels.mean()),
        "median_labels": float(np.median(labels)),
        "success_rate": float(np.mean(judged)) if judged else None,
    }


def sweep(plan: dict, workers: int = 1) -> list:
    """One summary row per grid point, in grid order."""
    return [summarize(cfg, run_experiment(cfg, workers)) for cfg in expand_grid(plan)]


def rows_to_csv(rows: list, columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


TRIAL_COLUMNS = ["trial", "seed", "winner", "status", "correct", "labels_used", "t", "epochs", "flags"]


def trials_to_csv(results: list) -> str:
    rows = []
    for i, r in enumerate(results):
        rows.append(
            {
                "trial": i,
                "seed": r.seed,
                "winner": r.winner,
                "status": r.status,
                "correct": r.correct,
                "labels_used": r.labels_used,
                "t": r.t,
                "epochs": r.epochs,
                "flags": ";".join(r.flags),
            }
        )
    return rows_to_csv(rows, TRIAL_COLUMNS)
