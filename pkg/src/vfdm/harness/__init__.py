"""Monte Carlo experiments, configuration and CLI."""

from .config import ExperimentConfig, load_config, make_config
from .experiments import (
    ExperimentResult,
    run_experiment,
    run_rank_vs_l,
    run_rate_vs_snr,
    run_single_trial,
    run_target_rate_sweep,
    simulate_trial,
)
