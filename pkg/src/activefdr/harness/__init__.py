"""Instance generators, experiments, coverage checks and acceptance criteria."""

from .experiment import Algorithm, ExperimentConfig, run_experiment, run_trial, sweep
from .generators import gen_beta_band, gen_tsybakov, tsybakov_eta

__all__ = [
    "Algorithm",
    "ExperimentConfig",
    "gen_beta_band",
    "gen_tsybakov",
    "run_experiment",
    "run_trial",
    "sweep",
    "tsybakov_eta",
]
