"""Normal mixture density, likelihood evaluation, and synthetic data.

All density work happens in log space with a log-sum-exp reduction across
components, so the likelihood stays finite for any finite observations and
sums in a fixed order (which the determinism contract relies on).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DegenerateDensityError

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Dataset:
    """Real-valued observations plus a provenance label.

    Attributes:
        observations: 1-D float array; every entry must be finite.
        label: free-text provenance (file stem, simulation seed, ...).
    """

    observations: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim != 1 or obs.size == 0:
            raise ValueError("observations must be a non-empty 1-D array")
        if not np.all(np.isfinite(obs)):
            raise ValueError("observations must all be finite")
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return int(self.observations.size)

    @property
    def span(self) -> float:
        """Observed range max - min (0.0 when all observations coincide)."""
        return float(np.max(self.observations) - np.min(self.observations))


@dataclass(frozen=True)
class MixtureParams:
    """Parameters of a K-component normal mixture.

    Attributes:
        weights: K strictly positive mixing weights summing to 1 (1e-12).
        means: K component means.
        variances: K strictly positive component variances.
        shared: parameters common to every component. Empty for the
            Gaussian model; the slot exists so component families with
            global parameters can reuse the same container.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    shared: tuple = ()

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.means, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if not (w.ndim == m.ndim == v.ndim == 1):
            raise ValueError("weights, means, variances must be 1-D")
        k = w.size
        if k < 1 or m.size != k or v.size != k:
            raise ValueError("weights, means, variances must share a length k >= 1")
        for arr, name in ((w, "weights"), (m, "means"), (v, "variances")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(w <= 0.0):
            raise ValueError("weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        if np.any(v <= 0.0):
            raise ValueError("variances must be strictly positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)

    @property
    def k(self) -> int:
        return int(self.weights.size)


def log_component_matrix(y: np.ndarray, params: MixtureParams) -> np.ndarray:
    """(n, K) matrix of log(pi_k) + log N(y_i; mu_k, sigma_k^2)."""
    y = np.asarray(y, dtype=float)
    d = y[:, None] - params.means[None, :]
    return (
        np.log(params.weights)[None, :]
        - 0.5 * d * d / params.variances[None, :]
        - 0.5 * np.log(params.variances)[None, :]
        - _HALF_LOG_2PI
    )


def log_mixture_pdf(y, params: MixtureParams) -> np.ndarray:
    """Log mixture density at each point of ``y`` (vectorized)."""
    logw = log_component_matrix(np.atleast_1d(np.asarray(y, dtype=float)), params)
    top = logw.max(axis=1)
    return top + np.log(np.exp(logw - top[:, None]).sum(axis=1))


def mixture_pdf(y: float, params: MixtureParams) -> float:
    """Mixture density sum_k pi_k N(y; mu_k, sigma_k^2) at one point.

    Strictly positive for any finite y.
    """
    return float(np.exp(log_mixture_pdf([y], params))[0])


def log_likelihood(data: Dataset, params: MixtureParams) -> float:
    """Sum of log mixture densities over the dataset.

    Raises:
        DegenerateDensityError: if any per-point density is not finite in
            log space (unreachable for finite inputs thanks to the
            log-sum-exp evaluation, but guarded anyway).
    """
    lp = log_mixture_pdf(data.observations, params)
    if not np.all(np.isfinite(lp)):
        raise DegenerateDensityError("mixture density underflowed to zero")
    return float(lp.sum())


def simulate_data(params: MixtureParams, n: int, seed: int) -> Dataset:
    """Draw n i.i.d. observations from the mixture; deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    comp = rng.choice(params.k, size=n, p=params.weights)
    y = rng.normal(params.means[comp], np.sqrt(params.variances[comp]))
    return Dataset(observations=y, label=f"simulated-seed-{seed}")


def write_dataset(data: Dataset, path) -> None:
    """Write the plain-text CSV form: header ``y``, one observation per row."""
    with open(path, "w", newline="") as fh:
        fh.write("y\n")
        for v in data.observations:
            fh.write(repr(float(v)) + "\n")


def read_dataset(path, label: str | None = None) -> Dataset:
    """Read a dataset CSV written by :func:`write_dataset` (header ``y``)."""
    path = Path(path)
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != "y":
            raise DataFormatError(f"expected header 'y', got {header!r} in {path}")
        try:
            values = [float(line) for line in fh if line.strip()]
        except ValueError as exc:
            raise DataFormatError(f"non-numeric observation in {path}: {exc}") from None
    if not values:
        raise DataFormatError(f"{path} contains no observations")
    return Dataset(
        observations=np.array(values, dtype=float),
        label=label if label is not None else path.stem,
    )
