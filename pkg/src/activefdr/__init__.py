"""Action elimination for active classification and active FDR control."""

from .confidence import BoundConfig, BoundKind, conf_pair, conf_single, conf_threshold_pair, rho_kappa
from .core import FamilyKind, Instance, NoiseMode, PolicyFamily, WeightMode
from .elim import run_classify
from .fdrctl import run_fdr
from .metrics import best_fdr_policy, best_policy, complexity_predictors, fdr, gap_profile, risk, tp, tpr
from .results import TrialResult

__all__ = [
    "BoundConfig",
    "BoundKind",
    "FamilyKind",
    "Instance",
    "NoiseMode",
    "PolicyFamily",
    "TrialResult",
    "WeightMode",
    "best_fdr_policy",
    "best_policy",
    "complexity_predictors",
    "conf_pair",
    "conf_single",
    "conf_threshold_pair",
    "fdr",
    "gap_profile",
    "rho_kappa",
    "risk",
    "run_classify",
    "run_fdr",
    "tp",
    "tpr",
]
