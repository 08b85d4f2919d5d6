"""Datasets, distortion metrics, Gaussian matrix sampling, and the random baseline.

All distortion figures in this module use the 1/k-normalized convention: a
k x d matrix A distorts a unit-norm point x by |(1/k) ||Ax||^2 - 1|.  The
hard-instance module documents its own unnormalized convention separately.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

_UNIT_NORM_TOL = 1e-12


def _rng(*seed_parts: int) -> np.random.Generator:
    """Explicitly-seeded generator; a fixed seed tuple replays any stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(seed_parts))))


@dataclass(frozen=True)
class Dataset:
    """n unit-norm points in d dimensions, stored as the rows of ``points``.

    Points are normalized on ingest; a zero row is rejected rather than
    silently kept.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 2:
            raise ParameterError(
                f"dataset must be an (n >= 1) x (d >= 2) array, got shape {pts.shape}"
            )
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
            raise ParameterError("dataset points must be finite and nonzero")
        # rows already unit to 1e-12 are kept bitwise so files round-trip
        off = np.abs(norms - 1.0) > _UNIT_NORM_TOL
        if off.any():
            pts = pts.copy()
            pts[off] /= norms[off, None]
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SamplerParams:
    """Gaussian solution sampler: a k x d mean matrix and one shared variance."""

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        if mean.ndim != 2 or mean.shape[0] < 1:
            raise ParameterError(f"mean must be a (k >= 1) x d matrix, got shape {mean.shape}")
        if not (self.variance >= 0.0) or not math.isfinite(self.variance):
            raise ParameterError(f"variance must be finite and >= 0, got {self.variance}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", float(self.variance))

    @property
    def k(self) -> int:
        return self.mean.shape[0]

    @property
    def d(self) -> int:
        return self.mean.shape[1]


@dataclass(frozen=True)
class DistortionReport:
    """Per-point and aggregate distortion of one fixed matrix on one dataset."""

    per_point: np.ndarray
    max: float
    mean: float


@dataclass(frozen=True)
class BaselineSummary:
    """Aggregates over repeated standard-Gaussian draws."""

    trials: int
    avg_max_distortion: float
    min_max_distortion: float
    max_distortions: np.ndarray = field(repr=False)


def make_unit_dataset(n: int, d: int, seed: int) -> Dataset:
    """n i.i.d. points drawn spherically symmetric and normalized to unit norm."""
    if n < 1 or d < 2:
        raise ParameterError(f"need n >= 1 and d >= 2, got n={n}, d={d}")
    rng = _rng(seed)
    pts = rng.standard_normal((n, d))
    return Dataset(pts)


def max_distortion(matrix: np.ndarray, data: Dataset) -> DistortionReport:
    """Distortion report for a fixed k x d matrix under the 1/k convention."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != data.d:
        raise ParameterError(
            f"matrix shape {matrix.shape} does not match dataset dimension d={data.d}"
        )
    k = matrix.shape[0]
    proj = data.points @ matrix.T
    per_point = np.abs(np.einsum("ij,ij->i", proj, proj) / k - 1.0)
    return DistortionReport(
        per_point=per_point, max=float(per_point.max()), mean=float(per_point.mean())
    )


def jl_epsilon(n, k: int, c: float) -> float:
    """Distortion threshold C * sqrt(ln(n) / k)."""
    if not (n > 1):
        raise ParameterError(f"need n > 1, got {n}")
    if k < 1:
        raise ParameterError(f"need k >= 1, got {k}")
    if not (c > 0.0):
        raise ParameterError(f"need C > 0, got {c}")
    return c * math.sqrt(math.log(n) / k)


def sample_gaussian_matrix(params: SamplerParams, d: int, seed: int) -> np.ndarray:
    """One draw from the sampler: entry (i, j) ~ N(mean[i, j], variance).

    Zero variance returns the mean bitwise; a fixed seed replays the draw.
    """
    if params.d != d:
        raise ParameterError(f"params have d={params.d}, requested d={d}")
    if params.variance == 0.0:
        return params.mean.copy()
    rng = _rng(seed)
    sigma = math.sqrt(params.variance)
    return params.mean + sigma * rng.standard_normal(params.mean.shape)


def _baseline_chunk(data: Dataset, k: int, seed: int, trials: range) -> np.ndarray:
    out = np.empty(len(trials), dtype=np.float64)
    for idx, t in enumerate(trials):
        z = _rng(seed, t).standard_normal((k, data.d))
        out[idx] = max_distortion(z, data).max
    return out


def baseline_gaussian_trials(
    data: Dataset, k: int, trials: int, seed: int, workers: int = 1
) -> BaselineSummary:
    """Average and minimum max-distortion over repeated N(0, 1) draws.

    Each trial is seeded by its own index, so the result is identical for any
    worker count; ``workers`` only partitions the trial loop.
    """
    if trials < 1:
        raise ParameterError(f"need trials >= 1, got {trials}")
    if k < 1:
        raise ParameterError(f"need k >= 1, got {k}")
    workers = max(1, int(workers))
    if workers == 1:
        values = _baseline_chunk(data, k, seed, range(trials))
    else:
        chunks = [range(start, trials, workers) for start in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _baseline_chunk(data, k, seed, c), chunks))
        values = np.empty(trials, dtype=np.float64)
        for chunk, part in zip(chunks, parts):
            values[list(chunk)] = part
    return BaselineSummary(
        trials=trials,
        avg_max_distortion=float(values.mean()),
        min_max_distortion=float(values.min()),
        max_distortions=values,
    )
