"""Posterior post-processing: relabeling, pooling, KDE and grid summaries."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataFormatError, DegenerateSampleError, UnknownColumnError
from .sampler import SampleStore

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class AxisSpec:
    """Regular grid axis: [lo, hi) split into ``bins`` equal cells."""

    lo: float
    hi: float
    bins: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError("axis needs finite lo < hi")
        if self.bins < 1:
            raise ValueError("axis needs at least one bin")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.bins) + 0.5) * self.width

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)


@dataclass(frozen=True)
class DensityGrid:
    """Cell masses on a 1-D or 2-D regular grid, summing to 1."""

    axes: tuple
    masses: np.ndarray

    def __post_init__(self) -> None:
        axes = tuple(self.axes)
        masses = np.asarray(self.masses, dtype=float)
        if len(axes) not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if masses.shape != tuple(a.bins for a in axes):
            raise ValueError("masses shape does not match the axes")
        if np.any(masses < 0.0) or not np.all(np.isfinite(masses)):
            raise ValueError("masses must be finite and non-negative")
        if abs(float(masses.sum()) - 1.0) > _MASS_TOL:
            raise ValueError("masses must sum to 1 within 1e-12")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "masses", masses)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def to_csv(self, path) -> None:
        """Persist as ``x,mass`` (1-D) or ``x,y,mass`` (2-D, x outer)."""
        with open(path, "w", newline="") as fh:
            if self.dim == 1:
                fh.write("x,mass\n")
                for c, m in zip(self.axes[0].centers, self.masses):
                    fh.write(f"{float(c)!r},{float(m)!r}\n")
            else:
                fh.write("x,y,mass\n")
                cx = self.axes[0].centers
                cy = self.axes[1].centers
                for i in range(self.axes[0].bins):
                    for j in range(self.axes[1].bins):
                        fh.write(f"{float(cx[i])!r},{float(cy[j])!r},{float(self.masses[i, j])!r}\n")

    @classmethod
    def from_csv(cls, path) -> "DensityGrid":
        with open(path, "r", newline="") as fh:
            header = fh.readline().strip()
            rows = [line.strip().split(",") for line in fh if line.strip()]
        if header == "x,mass":
            xs = np.array([float(r[0]) for r in rows])
            masses = np.array([float(r[1]) for r in rows])
            return cls(axes=(_axis_from_centers(xs),), masses=masses)
        if header == "x,y,mass":
            xs = np.unique([float(r[0]) for r in rows])
            ys = np.unique([float(r[1]) for r in rows])
            masses = np.array([float(r[2]) for r in rows]).reshape(xs.size, ys.size)
            return cls(axes=(_axis_from_centers(xs), _axis_from_centers(ys)), masses=masses)
        raise DataFormatError(f"unexpected grid header in {path}: {header!r}")


def _axis_from_centers(centers: np.ndarray) -> AxisSpec:
    if centers.size == 1:
        return AxisSpec(float(centers[0]) - 0.5, float(centers[0]) + 0.5, 1)
    width = float(centers[1] - centers[0])
    return AxisSpec(float(centers[0]) - width / 2.0, float(centers[-1]) + width / 2.0, centers.size)


@dataclass(frozen=True)
class RelabeledSamples:
    """Sample columns after per-draw component reordering by mean.

    Within every draw mu_1 <= mu_2 <= ... <= mu_K; weights and variances
    carry the same permutation (stored in ``perms``).
    """

    k: int
    iters: np.ndarray
    accept_mu: np.ndarray
    beta: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    acceptance_rate: float
    perms: np.ndarray

    @property
    def records(self) -> int:
        return int(self.iters.size)


def relabel_ic(samples: SampleStore) -> RelabeledSamples:
    """Apply the ordered-means identifiability constraint per draw.

    Stable under ties: equal means keep their original relative order.
    """
    order = np.argsort(samples.means, axis=1, kind="stable")
    return RelabeledSamples(
        k=samples.k,
        iters=samples.iters,
        accept_mu=samples.accept_mu,
        beta=samples.beta,
        weights=np.take_along_axis(samples.weights, order, axis=1),
        means=np.take_along_axis(samples.means, order, axis=1),
        variances=np.take_along_axis(samples.variances, order, axis=1),
        acceptance_rate=samples.acceptance_rate,
        perms=order,
    )


_POOLABLE = ("means", "variances", "weights")


def pool_generic(samples, parameter: str) -> np.ndarray:
    """Concatenate the K per-component columns into one vector.

    Column-major: all of component 1's draws, then component 2's, and so
    on — length K x draws. Valid without relabeling because the posterior
    is invariant under component permutations.
    """
    if parameter not in _POOLABLE:
        raise ValueError(f"parameter must be one of {_POOLABLE}, got {parameter!r}")
    return np.ravel(getattr(samples, parameter), order="F")


def silverman_bandwidth(values) -> float:
    """0.9 min(sd, IQR/1.34) n^(-1/5); falls back to sd when IQR is 0.

    Raises:
        DegenerateSampleError: when the result is zero (constant sample).
    """
    v = np.asarray(values, dtype=float)
    sd = float(np.std(v))
    q75, q25 = np.percentile(v, [75, 25])
    iqr = float(q75 - q25)
    a = min(sd, iqr / 1.34) if iqr > 0.0 else sd
    bw = 0.9 * a * v.size ** (-0.2)
    if bw <= 0.0:
        raise DegenerateSampleError("all values equal; bandwidth is zero")
    return bw


def default_axis(values, bins: int, pad_sd: float = 3.0) -> AxisSpec:
    """Data-driven axis: [min - pad_sd*sd, max + pad_sd*sd] with ``bins`` cells."""
    v = np.asarray(values, dtype=float)
    sd = float(np.std(v))
    pad = pad_sd * sd if sd > 0.0 else 1.0
    return AxisSpec(float(v.min()) - pad, float(v.max()) + pad, bins)


def kde_1d(values, bandwidth, grid: AxisSpec) -> DensityGrid:
    """Gaussian-kernel density on the grid, renormalized to unit cell mass.

    ``bandwidth`` is a positive real or the string ``auto`` (Silverman's
    rule). Evaluation is exact (no binning) in chunks to bound memory.

    Raises:
        DegenerateSampleError: fewer than 2 values, all values equal, or
            no kernel mass lands on the grid.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DegenerateSampleError("kde needs at least 2 values")
    bw = silverman_bandwidth(v) if bandwidth == "auto" else float(bandwidth)
    if bw <= 0.0:
        raise ValueError("bandwidth must be positive")
    centers = grid.centers
    dens = np.zeros(grid.bins)
    for start in range(0, v.size, 8192):
        chunk = v[start : start + 8192]
        d = (centers[:, None] - chunk[None, :]) / bw
        dens += np.exp(-0.5 * d * d).sum(axis=1)
    total = dens.sum()
    if total <= 0.0:
        raise DegenerateSampleError("no kernel mass on the requested grid")
    return DensityGrid(axes=(grid,), masses=dens / total)


def grid_2d(
    x_values,
    y_values,
    x_axis: AxisSpec,
    y_axis: AxisSpec,
    smooth: bool = False,
    bandwidths: tuple | None = None,
) -> DensityGrid:
    """Normalized 2-D histogram, optionally Gaussian-smoothed.

    With ``smooth`` the per-axis bandwidth defaults to Silverman's rule on
    each coordinate (override via ``bandwidths`` in data units).

    Raises:
        ValueError: length mismatch between the coordinate vectors.
    """
    x = np.asarray(x_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y must have equal lengths")
    hist, _, _ = np.histogram2d(x, y, bins=[x_axis.edges, y_axis.edges])
    if smooth:
        if bandwidths is None:
            bandwidths = (silverman_bandwidth(x), silverman_bandwidth(y))
        sigma = (bandwidths[0] / x_axis.width, bandwidths[1] / y_axis.width)
        hist = gaussian_filter(hist, sigma=sigma, mode="constant")
    total = hist.sum()
    if total <= 0.0:
        raise DegenerateSampleError("no mass on the requested 2-D grid")
    return DensityGrid(axes=(x_axis, y_axis), masses=hist / total)


def derived_columns(samples) -> dict[str, np.ndarray]:
    """Per-draw scalar columns used by the figure-level summaries.

    Always includes ``max_sigma2``; two-component runs add ``absdiff_mu``;
    successive mean gaps appear as ``gap_mu_<j+1>_<j>``. Gap columns are
    meaningful after :func:`relabel_ic` (they are non-negative then); on
    raw samples they are the raw label-order differences.
    """
    out = {"max_sigma2": samples.variances.max(axis=1)}
    if samples.k == 2:
        out["absdiff_mu"] = np.abs(samples.means[:, 0] - samples.means[:, 1])
    for j in range(samples.k - 1):
        out[f"gap_mu_{j + 2}_{j + 1}"] = samples.means[:, j + 1] - samples.means[:, j]
    return out


_COMPONENT_COLUMN = re.compile(r"(pi|mu|sigma2)_(\d+)$")
_COLUMN_ATTR = {"pi": "weights", "mu": "means", "sigma2": "variances"}
_POOLED_COLUMN = {"mu_pooled": "means", "sigma2_pooled": "variances", "pi_pooled": "weights"}


def resolve_column(samples, name: str) -> np.ndarray:
    """Values for a named column: header, pooled, or derived.

    Every name in the samples CSV header is addressable, plus
    ``mu_pooled`` / ``sigma2_pooled`` / ``pi_pooled`` and the outputs of
    :func:`derived_columns`.
    """
    if name == "iter":
        return samples.iters.astype(float)
    if name == "accept_mu":
        return samples.accept_mu.astype(float)
    if name == "beta":
        return samples.beta
    if name in _POOLED_COLUMN:
        return pool_generic(samples, _POOLED_COLUMN[name])
    match = _COMPONENT_COLUMN.fullmatch(name)
    if match:
        idx = int(match.group(2))
        if 1 <= idx <= samples.k:
            return getattr(samples, _COLUMN_ATTR[match.group(1)])[:, idx - 1]
        raise UnknownColumnError(f"component index out of range in {name!r} (k={samples.k})")
    derived = derived_columns(samples)
    if name in derived:
        return derived[name]
    raise UnknownColumnError(f"unknown column {name!r}")


def tail_probability(values, op: str, threshold: float) -> float:
    """Fraction of values strictly below (``<``) or above (``>``) the threshold."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("tail probability of an empty sample")
    if op == "<":
        return float(np.mean(v < threshold))
    if op == ">":
        return float(np.mean(v > threshold))
    raise ValueError(f"op must be '<' or '>', got {op!r}")


def find_modes(grid: DensityGrid, min_rel_height: float = 0.05) -> list[tuple[float, float]]:
    """Interior strict local maxima of a 1-D grid as (location, mass) pairs.

    Maxima below ``min_rel_height`` of the global maximum are ignored so
    that mass-starved wiggles in the tails do not count as distinct peaks.
    """
    if grid.dim != 1:
        raise ValueError("find_modes expects a 1-D grid")
    m = grid.masses
    centers = grid.axes[0].centers
    floor = float(m.max()) * min_rel_height
    out = []
    for i in range(1, m.size - 1):
        if m[i] > m[i - 1] and m[i] > m[i + 1] and m[i] >= floor:
            out.append((float(centers[i]), float(m[i])))
    return out
