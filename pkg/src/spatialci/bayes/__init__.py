from .diagnostics import posterior_summary, split_rhat
from .io import read_draws_binary, read_draws_csv, write_draws_binary, write_draws_csv
from .model import BLOCKS, McmcState, SpatialModel, block_logpdf, log_joint
from .priors import PriorConfig, default_priors
from .sampler import (
    DEFAULT_BURNIN,
    DEFAULT_N_ITER,
    DEFAULT_THIN,
    PosteriorChain,
    Tuning,
    initial_state,
    mcmc_step,
    run_chain,
)

__all__ = [
    "BLOCKS",
    "DEFAULT_BURNIN",
    "DEFAULT_N_ITER",
    "DEFAULT_THIN",
    "McmcState",
    "PosteriorChain",
    "PriorConfig",
    "SpatialModel",
    "Tuning",
    "block_logpdf",
    "default_priors",
    "initial_state",
    "log_joint",
    "mcmc_step",
    "posterior_summary",
    "read_draws_binary",
    "read_draws_csv",
    "run_chain",
    "split_rhat",
    "write_draws_binary",
    "write_draws_csv",
]
