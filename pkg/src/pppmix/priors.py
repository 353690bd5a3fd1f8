"""Empirical Bayes base prior and its conjugate full-conditional samplers.

The base prior factorizes as a symmetric Dirichlet on the weights,
independent normals on the means, independent inverse-gammas on the
variances and a gamma hyperprior on the shared inverse-gamma rate beta.
Hyperparameter defaults come from the data range (midrange location,
1/R^2 mean precision, alpha = 2, g = 0.2, h = 10/R^2, unit Dirichlet).

Every sampler below is a deterministic function of its inputs and the rng
state, draws a fixed number of variates, and matches the closed-form
conditional it documents; the moment-matching tests pin that down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ZeroRangeError
from .model import Dataset, MixtureParams, log_component_matrix

_LOG_2PI = float(np.log(2.0 * np.pi))

HYPER_KEYS = ("xi", "kappa", "alpha", "g", "h", "dirichlet_delta")


@dataclass(frozen=True)
class Hyperparams:
    """Constants of the base prior.

    Attributes:
        xi: prior mean of each component mean (any finite real).
        kappa: prior precision of each component mean.
        alpha: shape of the inverse-gamma prior on each variance.
        g: shape of the gamma hyperprior on beta.
        h: rate of the gamma hyperprior on beta.
        dirichlet_delta: symmetric Dirichlet concentration on the weights.
    """

    xi: float
    kappa: float
    alpha: float
    g: float
    h: float
    dirichlet_delta: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.xi):
            raise ValueError("xi must be finite")
        for name in ("kappa", "alpha", "g", "h", "dirichlet_delta"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0.0):
                raise ValueError(f"{name} must be a positive finite real")

    def as_config(self) -> dict[str, float]:
        """key=value form used by the run config file."""
        return {key: float(getattr(self, key)) for key in HYPER_KEYS}


def default_hyperparams(data: Dataset) -> Hyperparams:
    """Empirical Bayes constants from the data range R.

    xi is the midrange, kappa = 1/R^2, alpha = 2, g = 0.2, h = 10/R^2 and
    dirichlet_delta = 1.

    Raises:
        ZeroRangeError: when R = 0 (all observations equal).
    """
    lo = float(np.min(data.observations))
    hi = float(np.max(data.observations))
    r = hi - lo
    if r <= 0.0:
        raise ZeroRangeError("data range is zero; empirical Bayes constants undefined")
    return Hyperparams(
        xi=(lo + hi) / 2.0,
        kappa=1.0 / r**2,
        alpha=2.0,
        g=0.2,
        h=10.0 / r**2,
        dirichlet_delta=1.0,
    )


@dataclass(frozen=True)
class LatentAllocations:
    """Component index per observation plus per-component tallies."""

    z: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if z.ndim != 1 or counts.ndim != 1:
            raise ValueError("z and counts must be 1-D")
        if int(counts.sum()) != z.size:
            raise ValueError("counts must sum to the number of observations")
        if np.any(np.bincount(z, minlength=counts.size) != counts):
            raise ValueError("counts inconsistent with z")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_z(cls, z, k: int) -> "LatentAllocations":
        z = np.asarray(z, dtype=np.int64)
        return cls(z=z, counts=np.bincount(z, minlength=k))

    @property
    def n(self) -> int:
        return int(self.z.size)


def log_p1(params: MixtureParams, beta: float, hyper: Hyperparams) -> float:
    """Log density of the base prior at (weights, means, variances, beta)."""
    if not (np.isfinite(beta) and beta > 0.0):
        raise ValueError("beta must be a positive finite real")
    k = params.k
    d = hyper.dirichlet_delta
    dirich = gammaln(k * d) - k * gammaln(d) + (d - 1.0) * float(np.log(params.weights).sum())
    dev = params.means - hyper.xi
    normal = 0.5 * k * (np.log(hyper.kappa) - _LOG_2PI) - 0.5 * hyper.kappa * float((dev * dev).sum())
    invgamma = (
        k * (hyper.alpha * np.log(beta) - gammaln(hyper.alpha))
        - (hyper.alpha + 1.0) * float(np.log(params.variances).sum())
        - beta * float((1.0 / params.variances).sum())
    )
    gamma = hyper.g * np.log(hyper.h) - gammaln(hyper.g) + (hyper.g - 1.0) * np.log(beta) - hyper.h * beta
    return float(dirich + normal + invgamma + gamma)


def sample_allocations(
    data: Dataset, params: MixtureParams, rng: np.random.Generator
) -> LatentAllocations:
    """Draw z_i with P(z_i = k) proportional to pi_k N(y_i; mu_k, sigma_k^2).

    Independent across observations; consumes one uniform per observation
    (a single ``rng.random((n, 1))`` call).
    """
    logw = log_component_matrix(data.observations, params)
    logw -= logw.max(axis=1, keepdims=True)
    probs = np.exp(logw)
    probs /= probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0  # guard the u ~ 1 edge against round-off in the last bin
    u = rng.random((data.n, 1))
    z = (cum > u).argmax(axis=1)
    return LatentAllocations.from_z(z, params.k)


def sample_weights(
    alloc: LatentAllocations, hyper: Hyperparams, rng: np.random.Generator
) -> np.ndarray:
    """Dirichlet(delta + n_1, ..., delta + n_K) draw (one rng call)."""
    return rng.dirichlet(hyper.dirichlet_delta + alloc.counts)


def sample_means_conditional(
    data: Dataset,
    alloc: LatentAllocations,
    variances: np.ndarray,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Joint draw of all K means from their conditional given everything else.

    Given the allocations the means are conditionally independent normals
    with variance v_k = 1/(kappa + n_k/sigma_k^2) and mean
    v_k (kappa xi + S_k/sigma_k^2), S_k the sum of points assigned to k;
    empty components fall back to the prior normal. The K draws form one
    exact joint draw from the conditional (one ``standard_normal(K)``
    call), which is what makes the penalty-ratio accept step on the whole
    block a valid Metropolis-Hastings update.
    """
    variances = np.asarray(variances, dtype=float)
    k = variances.size
    s = np.bincount(alloc.z, weights=data.observations, minlength=k)
    v = 1.0 / (hyper.kappa + alloc.counts / variances)
    m = v * (hyper.kappa * hyper.xi + s / variances)
    return m + np.sqrt(v) * rng.standard_normal(k)


def sample_variances(
    data: Dataset,
    alloc: LatentAllocations,
    means: np.ndarray,
    beta: float,
    hyper: Hyperparams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Inverse-gamma conditional draw of all K variances.

    1/sigma_k^2 ~ Gamma(alpha + n_k/2, rate = beta + SSR_k/2) with SSR_k
    the squared deviations of points assigned to k; empty components
    reduce to the InverseGamma(alpha, beta) prior. One rng call.
    """
    means = np.asarray(means, dtype=float)
    k = means.size
    dev = data.observations - means[alloc.z]
    ssr = np.bincount(alloc.z, weights=dev * dev, minlength=k)
    shape = hyper.alpha + 0.5 * alloc.counts
    rate = beta + 0.5 * ssr
    return 1.0 / rng.gamma(shape, 1.0 / rate)


def sample_beta(
    variances: np.ndarray, hyper: Hyperparams, rng: np.random.Generator
) -> float:
    """Gamma(g + K alpha, rate = h + sum_k 1/sigma_k^2) draw for beta."""
    variances = np.asarray(variances, dtype=float)
    shape = hyper.g + variances.size * hyper.alpha
    rate = hyper.h + float((1.0 / variances).sum())
    return float(rng.gamma(shape, 1.0 / rate))
