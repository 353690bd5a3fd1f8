"""Fixed-K Gibbs-within-Metropolis chain with penalty-ratio block acceptance.

Each sweep proposes parameter blocks from their exact conjugate full
conditionals under the base prior. Blocks the penalty depends on are then
accepted with probability min(1, penalty ratio); every other block is a
plain Gibbs update (the ratio is identically 1 there, so the acceptance
computation is skipped entirely). Because each conditional proposal is an
exact draw from the base-prior posterior conditional, the per-block accept
step leaves the penalty-weighted conditional invariant; the grid oracle
checks this numerically instead of trusting the algebra.

Draw order per sweep is fixed and is part of the determinism contract:
    1. allocations   - one ``rng.random((n, 1))`` call
    2. weights       - one ``rng.dirichlet`` call  (+1 uniform if targeted)
    3. means (joint) - one ``rng.standard_normal(K)`` call (+1 uniform if targeted)
    4. variances     - one ``rng.gamma(K)`` call   (+1 uniform if targeted)
    5. beta          - one ``rng.gamma`` call
Identical (data, config) therefore give bit-identical output, and a run
with penalty ``none`` consumes exactly the plain-Gibbs draw sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataFormatError, InitializationError
from .model import Dataset, MixtureParams
from .penalty import (
    NoPenalty,
    PenaltySpec,
    eval_log_penalty,
    log_ratio_accept_prob,
    penalty_targets,
)
from .priors import (
    Hyperparams,
    LatentAllocations,
    default_hyperparams,
    sample_allocations,
    sample_beta,
    sample_means_conditional,
    sample_variances,
    sample_weights,
)

_INIT_ATTEMPTS = 1000

CSV_FIXED_COLUMNS = ("iter", "accept_mu", "beta")


@dataclass(frozen=True)
class ChainConfig:
    """Run-length, seeding and model settings for one chain."""

    k: int
    iterations: int
    burn_in: int
    thin: int = 1
    seed: int = 0
    penalty: PenaltySpec = NoPenalty()
    hyper: Hyperparams | None = None
    init: str = "quantile"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (0 <= self.burn_in < self.iterations):
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.init not in ("quantile", "prior"):
            raise ValueError("init must be 'quantile' or 'prior'")


@dataclass
class ChainState:
    """Live sampler state.

    ``log_penalty`` caches eval_log_penalty(config.penalty, params) and is
    kept coherent by :func:`sweep`; it is never -inf after initialization.
    ``accept_mu`` records the outcome of the most recent mean-block step.
    """

    params: MixtureParams
    beta: float
    alloc: LatentAllocations
    log_penalty: float
    iteration: int = 0
    accept_mu: bool = True


@dataclass(frozen=True)
class SampleStore:
    """Retained posterior draws plus the mean-block acceptance rate."""

    k: int
    iters: np.ndarray
    accept_mu: np.ndarray
    beta: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    acceptance_rate: float

    @property
    def records(self) -> int:
        return int(self.iters.size)

    def header(self) -> str:
        cols = list(CSV_FIXED_COLUMNS)
        for name in ("pi", "mu", "sigma2"):
            cols += [f"{name}_{i + 1}" for i in range(self.k)]
        return ",".join(cols)

    def to_csv(self, path) -> None:
        """Persist as CSV: iter,accept_mu,beta,pi_1..pi_K,mu_1..mu_K,sigma2_1..sigma2_K."""
        with open(path, "w", newline="") as fh:
            fh.write(self.header() + "\n")
            for i in range(self.records):
                row = [str(int(self.iters[i])), str(int(self.accept_mu[i])), repr(float(self.beta[i]))]
                for block in (self.weights, self.means, self.variances):
                    row += [repr(float(v)) for v in block[i]]
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SampleStore":
        with open(path, "r", newline="") as fh:
            header = fh.readline().strip()
            rows = [line.strip().split(",") for line in fh if line.strip()]
        cols = header.split(",")
        if cols[: len(CSV_FIXED_COLUMNS)] != list(CSV_FIXED_COLUMNS) or (len(cols) - 3) % 3 != 0:
            raise DataFormatError(f"unexpected samples header in {path}: {header!r}")
        k = (len(cols) - 3) // 3
        expected = cls(
            k=k,
            iters=np.zeros(0, dtype=np.int64),
            accept_mu=np.zeros(0, dtype=np.int64),
            beta=np.zeros(0),
            weights=np.zeros((0, k)),
            means=np.zeros((0, k)),
            variances=np.zeros((0, k)),
            acceptance_rate=0.0,
        ).header()
        if header != expected:
            raise DataFormatError(f"unexpected samples header in {path}: {header!r}")
        data = np.array([[float(v) for v in row] for row in rows], dtype=float)
        if data.size == 0:
            data = data.reshape(0, len(cols))
        accept = data[:, 1].astype(np.int64)
        return cls(
            k=k,
            iters=data[:, 0].astype(np.int64),
            accept_mu=accept,
            beta=data[:, 2],
            weights=data[:, 3 : 3 + k],
            means=data[:, 3 + k : 3 + 2 * k],
            variances=data[:, 3 + 2 * k : 3 + 3 * k],
            acceptance_rate=float(accept.mean()) if accept.size else 1.0,
        )


def _resolved(data: Dataset, config: ChainConfig) -> ChainConfig:
    if config.hyper is None:
        return replace(config, hyper=default_hyperparams(data))
    return config


def init_chain(data: Dataset, config: ChainConfig, rng: np.random.Generator) -> ChainState:
    """Build a penalty-admissible starting state.

    ``quantile`` places the means at the k/(K+1) data quantiles, sets all
    variances to the data variance, uniform weights and beta at its prior
    mean g/h; ``prior`` draws everything from the base prior (order:
    weights, means, beta, variances). If the starting penalty is -inf
    (threshold variants, or separation penalties on the coincident
    variances/weights the quantile strategy produces), the parameters are
    re-jittered up to 1000 times before giving up: means additively with
    scale span/20, variances log-normally, weights redrawn from the
    Dirichlet prior. Allocations are sampled once at the end.

    Raises:
        InitializationError: when no admissible means were found.
    """
    config = _resolved(data, config)
    hyper = config.hyper
    k = config.k
    y = data.observations
    if config.init == "quantile":
        base_means = np.quantile(y, [(i + 1) / (k + 1) for i in range(k)])
        variances = np.full(k, float(np.var(y)))
        weights = np.full(k, 1.0 / k)
        beta = hyper.g / hyper.h
    else:
        weights = rng.dirichlet(np.full(k, hyper.dirichlet_delta))
        base_means = hyper.xi + np.sqrt(1.0 / hyper.kappa) * rng.standard_normal(k)
        beta = float(rng.gamma(hyper.g, 1.0 / hyper.h))
        variances = 1.0 / rng.gamma(hyper.alpha, 1.0 / beta, size=k)
    params = MixtureParams(weights=weights, means=base_means, variances=variances)
    log_pen = eval_log_penalty(config.penalty, params)
    jitter = max(data.span, 1.0) / 20.0
    attempts = 0
    while log_pen == -np.inf:
        attempts += 1
        if attempts > _INIT_ATTEMPTS:
            raise InitializationError(
                f"no penalty-admissible start after {_INIT_ATTEMPTS} jittered attempts"
            )
        params = MixtureParams(
            weights=rng.dirichlet(np.full(k, hyper.dirichlet_delta)),
            means=base_means + jitter * rng.standard_normal(k),
            variances=variances * np.exp(0.1 * rng.standard_normal(k)),
        )
        log_pen = eval_log_penalty(config.penalty, params)
    alloc = sample_allocations(data, params, rng)
    return ChainState(params=params, beta=beta, alloc=alloc, log_penalty=log_pen, iteration=0)


def _apply_block(
    spec: PenaltySpec,
    block: str,
    params: MixtureParams,
    patch: dict,
    log_pen: float,
    targeted: frozenset[str],
    rng: np.random.Generator,
) -> tuple[MixtureParams, float, bool]:
    """Install a proposed block, via penalty-ratio accept when targeted."""
    cand = replace(params, **patch)
    if block not in targeted:
        return cand, log_pen, True
    log_pen_new = eval_log_penalty(spec, cand)
    if rng.random() < log_ratio_accept_prob(log_pen_new, log_pen):
        return cand, log_pen_new, True
    return params, log_pen, False


def sweep(state: ChainState, data: Dataset, config: ChainConfig, rng: np.random.Generator) -> ChainState:
    """One systematic sweep over all blocks; see the module docstring.

    Allocation and beta updates are always plain Gibbs (the penalty never
    involves them); weights, means and variances go through the accept
    step only when the penalty targets them. On rejection the previous
    block value is kept and the remaining blocks still update.
    """
    config = _resolved(data, config)
    hyper = config.hyper
    spec = config.penalty
    targeted = penalty_targets(spec)
    params = state.params
    log_pen = state.log_penalty

    alloc = sample_allocations(data, params, rng)

    w_new = sample_weights(alloc, hyper, rng)
    params, log_pen, _ = _apply_block(spec, "weights", params, {"weights": w_new}, log_pen, targeted, rng)

    mu_new = sample_means_conditional(data, alloc, params.variances, hyper, rng)
    params, log_pen, accept_mu = _apply_block(spec, "means", params, {"means": mu_new}, log_pen, targeted, rng)

    var_new = sample_variances(data, alloc, params.means, state.beta, hyper, rng)
    params, log_pen, _ = _apply_block(spec, "variances", params, {"variances": var_new}, log_pen, targeted, rng)

    beta = sample_beta(params.variances, hyper, rng)

    return ChainState(
        params=params,
        beta=beta,
        alloc=alloc,
        log_penalty=log_pen,
        iteration=state.iteration + 1,
        accept_mu=accept_mu,
    )


def run_chain(data: Dataset, config: ChainConfig) -> SampleStore:
    """Run one chain and return the burn-in-discarded, thinned draws.

    Exactly floor((iterations - burn_in)/thin) records are kept (sweep t
    is retained when t > burn_in and (t - burn_in) % thin == 0). The
    reported acceptance rate is the mean-block acceptance frequency over
    all sweeps including burn-in; it is exactly 1.0 whenever the penalty
    does not target the means.
    """
    config = _resolved(data, config)
    rng = np.random.default_rng(config.seed)
    state = init_chain(data, config, rng)
    n_records = (config.iterations - config.burn_in) // config.thin
    k = config.k
    iters = np.zeros(n_records, dtype=np.int64)
    accept = np.zeros(n_records, dtype=np.int64)
    beta = np.zeros(n_records)
    weights = np.zeros((n_records, k))
    means = np.zeros((n_records, k))
    variances = np.zeros((n_records, k))
    accepted = 0
    row = 0
    for t in range(1, config.iterations + 1):
        state = sweep(state, data, config, rng)
        accepted += int(state.accept_mu)
        if t > config.burn_in and (t - config.burn_in) % config.thin == 0:
            iters[row] = t
            accept[row] = int(state.accept_mu)
            beta[row] = state.beta
            weights[row] = state.params.weights
            means[row] = state.params.means
            variances[row] = state.params.variances
            row += 1
    return SampleStore(
        k=k,
        iters=iters,
        accept_mu=accept,
        beta=beta,
        weights=weights,
        means=means,
        variances=variances,
        acceptance_rate=accepted / config.iterations,
    )
