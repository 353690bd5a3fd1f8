"""Brute-force verification of the sampler on two-component desk instances.

With weights, variances and beta held fixed, the posterior over the two
means is exactly computable on a grid: log likelihood + log base prior +
log penalty per cell, exponentiated stably and normalized. Two sampling
estimates of the same target — the penalty-accept chain restricted to
allocation/mean updates, and a plain random-walk Metropolis that never
touches allocations — are histogrammed on the same grid and compared in
total variation. Agreement of all three certifies the accept step on an
instance small enough to enumerate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analysis import AxisSpec, DensityGrid
from .errors import AllCellsZeroError, GridMismatchError, InitializationError
from .model import Dataset, MixtureParams
from .penalty import PenaltySpec, eval_log_penalty, log_ratio_accept_prob, penalty_targets
from .priors import Hyperparams, log_p1, sample_allocations, sample_means_conditional

_INIT_ATTEMPTS = 1000
_MAX_DESK_N = 10
_MAX_DESK_BINS = 201


@dataclass(frozen=True)
class GridPosterior:
    """Exact cell masses of the fixed-(weights, variances, beta) posterior."""

    axes: tuple
    masses: np.ndarray
    penalty: PenaltySpec

    def __post_init__(self) -> None:
        masses = np.asarray(self.masses, dtype=float)
        if abs(float(masses.sum()) - 1.0) > 1e-10:
            raise ValueError("grid posterior masses must sum to 1 within 1e-10")
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "masses", masses)

    @property
    def density(self) -> DensityGrid:
        return DensityGrid(axes=self.axes, masses=self.masses / self.masses.sum())


def _check_desk_scale(data: Dataset, axis1: AxisSpec, axis2: AxisSpec) -> None:
    if data.n > _MAX_DESK_N:
        raise ValueError(f"grid oracle is desk-scale only (n <= {_MAX_DESK_N})")
    if axis1.bins > _MAX_DESK_BINS or axis2.bins > _MAX_DESK_BINS:
        raise ValueError(f"grid oracle is desk-scale only (bins <= {_MAX_DESK_BINS})")


def _fixed_pair(weights, variances) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(weights, dtype=float)
    v = np.asarray(variances, dtype=float)
    if w.size != 2 or v.size != 2:
        raise ValueError("the oracle handles exactly two components")
    return w, v


def grid_posterior(
    data: Dataset,
    weights,
    variances,
    beta: float,
    hyper: Hyperparams,
    penalty: PenaltySpec,
    axis1: AxisSpec,
    axis2: AxisSpec,
) -> GridPosterior:
    """Evaluate the (mu_1, mu_2) posterior exactly on the grid.

    Per cell center: summed log mixture density over the data, plus the
    full base-prior log density, plus the log penalty; exponentiated
    after subtracting the maximum and normalized to unit mass.

    Raises:
        AllCellsZeroError: every cell has zero mass (e.g. a threshold
            penalty wider than the grid span).
    """
    _check_desk_scale(data, axis1, axis2)
    return _grid_posterior_unchecked(data, weights, variances, beta, hyper, penalty, axis1, axis2)


def _grid_posterior_unchecked(
    data: Dataset,
    weights,
    variances,
    beta: float,
    hyper: Hyperparams,
    penalty: PenaltySpec,
    axis1: AxisSpec,
    axis2: AxisSpec,
) -> GridPosterior:
    w, v = _fixed_pair(weights, variances)
    c1 = axis1.centers
    c2 = axis2.centers
    loglik = np.zeros((axis1.bins, axis2.bins))
    const_k = np.log(w) - 0.5 * np.log(2.0 * np.pi * v)
    for yi in data.observations:
        t1 = const_k[0] - (yi - c1) ** 2 / (2.0 * v[0])
        t2 = const_k[1] - (yi - c2) ** 2 / (2.0 * v[1])
        loglik += np.logaddexp(t1[:, None], t2[None, :])
    # full log p1 = mu-independent constant + the two normal mean terms
    params0 = MixtureParams(weights=w, means=np.array([c1[0], c2[0]]), variances=v)
    mu_terms0 = -0.5 * hyper.kappa * ((c1[0] - hyper.xi) ** 2 + (c2[0] - hyper.xi) ** 2)
    p1_const = log_p1(params0, beta, hyper) - mu_terms0
    logp1 = p1_const - 0.5 * hyper.kappa * (
        ((c1 - hyper.xi) ** 2)[:, None] + ((c2 - hyper.xi) ** 2)[None, :]
    )
    logpen = np.zeros((axis1.bins, axis2.bins))
    for i in range(axis1.bins):
        for j in range(axis2.bins):
            logpen[i, j] = eval_log_penalty(
                penalty, {"means": (c1[i], c2[j]), "variances": v, "weights": w}
            )
    total = loglik + logp1 + logpen
    finite = np.isfinite(total)
    if not finite.any():
        raise AllCellsZeroError("every grid cell has zero posterior mass")
    masses = np.zeros_like(total)
    top = total[finite].max()
    masses[finite] = np.exp(total[finite] - top)
    s = masses.sum()
    if s <= 0.0:
        raise AllCellsZeroError("every grid cell has zero posterior mass")
    return GridPosterior(axes=(axis1, axis2), masses=masses / s, penalty=penalty)


def coverage_fraction(
    data: Dataset,
    weights,
    variances,
    beta: float,
    hyper: Hyperparams,
    penalty: PenaltySpec,
    axis1: AxisSpec,
    axis2: AxisSpec,
) -> float:
    """Mass the base grid captures, judged on a grid twice as wide.

    The wide grid keeps the cell size (double span, double bins); the
    return value is the wide-grid mass falling inside the base extents.
    The base grid is adequate when this is >= 0.999.
    """
    wide = []
    for ax in (axis1, axis2):
        half = (ax.hi - ax.lo) / 2.0
        wide.append(AxisSpec(ax.lo - half, ax.hi + half, ax.bins * 2))
    gp = _grid_posterior_unchecked(data, weights, variances, beta, hyper, penalty, wide[0], wide[1])
    in1 = (wide[0].centers >= axis1.lo) & (wide[0].centers <= axis1.hi)
    in2 = (wide[1].centers >= axis2.lo) & (wide[1].centers <= axis2.hi)
    return float(gp.masses[np.ix_(in1, in2)].sum())


def _admissible_means(
    data: Dataset,
    weights: np.ndarray,
    variances: np.ndarray,
    penalty: PenaltySpec,
    rng: np.random.Generator,
) -> MixtureParams:
    base = np.quantile(data.observations, [1.0 / 3.0, 2.0 / 3.0])
    params = MixtureParams(weights=weights, means=base, variances=variances)
    jitter = max(data.span, 1.0) / 20.0
    attempts = 0
    while eval_log_penalty(penalty, params) == -math.inf:
        attempts += 1
        if attempts > _INIT_ATTEMPTS:
            raise InitializationError("no penalty-admissible oracle start found")
        params = replace(params, means=base + jitter * rng.standard_normal(2))
    return params


def constrained_chain_marginal(
    data: Dataset,
    weights,
    variances,
    beta: float,
    hyper: Hyperparams,
    penalty: PenaltySpec,
    iterations: int,
    burn_in: int,
    thin: int,
    seed: int,
    axis1: AxisSpec,
    axis2: AxisSpec,
) -> DensityGrid:
    """Penalty-accept chain with weights/variances/beta fixed, histogrammed.

    Only the allocation and mean-block updates run, exactly as in the full
    sampler; allocations stay sampled (the mean proposal needs them, and
    the grid target already marginalizes them through the mixture
    likelihood). Retained (mu_1, mu_2) draws are binned on the oracle
    grid and normalized.
    """
    w, v = _fixed_pair(weights, variances)
    if not (0 <= burn_in < iterations) or thin < 1:
        raise ValueError("need 0 <= burn_in < iterations and thin >= 1")
    rng = np.random.default_rng(seed)
    params = _admissible_means(data, w, v, penalty, rng)
    log_pen = eval_log_penalty(penalty, params)
    targeted = "means" in penalty_targets(penalty)
    n_records = (iterations - burn_in) // thin
    draws = np.zeros((n_records, 2))
    row = 0
    for t in range(1, iterations + 1):
        alloc = sample_allocations(data, params, rng)
        mu_new = sample_means_conditional(data, alloc, v, hyper, rng)
        cand = replace(params, means=mu_new)
        if targeted:
            log_pen_new = eval_log_penalty(penalty, cand)
            if rng.random() < log_ratio_accept_prob(log_pen_new, log_pen):
                params, log_pen = cand, log_pen_new
        else:
            params = cand
        if t > burn_in and (t - burn_in) % thin == 0:
            draws[row] = params.means
            row += 1
    return _histogram_pairs(draws, axis1, axis2)


def reference_rw_sampler(
    data: Dataset,
    weights,
    variances,
    beta: float,
    hyper: Hyperparams,
    penalty: PenaltySpec,
    steps: int,
    step_size: float,
    seed: int,
    axis1: AxisSpec,
    axis2: AxisSpec,
    burn_in: int | None = None,
) -> DensityGrid:
    """Plain random-walk Metropolis on (mu_1, mu_2), histogrammed.

    Targets the same likelihood x base prior x penalty density directly
    with Gaussian increments — no Gibbs steps, no allocation
    augmentation — so its agreement with the chain rules out bugs the two
    samplers might otherwise share. Discards ``burn_in`` steps (default
    steps // 10).
    """
    w, v = _fixed_pair(weights, variances)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if burn_in is None:
        burn_in = steps // 10
    rng = np.random.default_rng(seed)
    y = data.observations
    const_k = np.log(w) - 0.5 * np.log(2.0 * np.pi * v)

    def log_target(mu: np.ndarray) -> float:
        lpen = eval_log_penalty(penalty, {"means": mu, "variances": v, "weights": w})
        if lpen == -math.inf:
            return -math.inf
        t1 = const_k[0] - (y - mu[0]) ** 2 / (2.0 * v[0])
        t2 = const_k[1] - (y - mu[1]) ** 2 / (2.0 * v[1])
        loglik = float(np.logaddexp(t1, t2).sum())
        dev = mu - hyper.xi
        return loglik - 0.5 * hyper.kappa * float(dev @ dev) + lpen

    params = _admissible_means(data, w, v, penalty, rng)
    cur = params.means.copy()
    lt = log_target(cur)
    increments = rng.standard_normal((steps, 2)) * step_size
    log_u = np.log(rng.random(steps))
    kept = np.zeros((steps - burn_in, 2))
    row = 0
    for t in range(steps):
        cand = cur + increments[t]
        lt_cand = log_target(cand)
        if log_u[t] < lt_cand - lt:
            cur = cand
            lt = lt_cand
        if t >= burn_in:
            kept[row] = cur
            row += 1
    return _histogram_pairs(kept, axis1, axis2)


def _histogram_pairs(draws: np.ndarray, axis1: AxisSpec, axis2: AxisSpec) -> DensityGrid:
    hist, _, _ = np.histogram2d(draws[:, 0], draws[:, 1], bins=[axis1.edges, axis2.edges])
    total = hist.sum()
    if total <= 0.0:
        raise AllCellsZeroError("no draws landed on the oracle grid")
    return DensityGrid(axes=(axis1, axis2), masses=hist / total)


def tv_distance(a: DensityGrid, b: DensityGrid) -> float:
    """Total variation distance: half the summed absolute mass difference.

    Raises:
        GridMismatchError: the two grids do not share identical axes.
    """
    if a.axes != b.axes:
        raise GridMismatchError("grids differ in axes")
    return 0.5 * float(np.abs(a.masses - b.masses).sum())
