"""Bayesian normal mixtures with proximity-penalty priors.

Library + CLI for fixed-K mixture MCMC where block proposals come from
the conjugate full conditionals of a standard base prior and a separation
penalty enters only through a Metropolis accept ratio, plus posterior
post-processing and a quadrature oracle that certifies the sampler on
instances small enough to enumerate.
"""

__version__ = "0.1.0"

from . import errors
from .analysis import (
    AxisSpec,
    DensityGrid,
    RelabeledSamples,
    default_axis,
    derived_columns,
    find_modes,
    grid_2d,
    kde_1d,
    pool_generic,
    relabel_ic,
    resolve_column,
    silverman_bandwidth,
    tail_probability,
)
from .model import (
    Dataset,
    MixtureParams,
    log_likelihood,
    log_mixture_pdf,
    mixture_pdf,
    read_dataset,
    simulate_data,
    write_dataset,
)
from .oracle import (
    GridPosterior,
    constrained_chain_marginal,
    coverage_fraction,
    grid_posterior,
    reference_rw_sampler,
    tv_distance,
)
from .penalty import (
    AbsDiffPower,
    MaxMinMatrix,
    NoPenalty,
    PenaltySpec,
    Product,
    Threshold,
    acceptance_probability,
    eval_log_penalty,
    format_penalty,
    parse_penalty,
    penalty_targets,
)
from .priors import (
    Hyperparams,
    LatentAllocations,
    default_hyperparams,
    log_p1,
    sample_allocations,
    sample_beta,
    sample_means_conditional,
    sample_variances,
    sample_weights,
)
from .sampler import ChainConfig, ChainState, SampleStore, init_chain, run_chain, sweep
