"""Exact per-trial cell geometry and Monte Carlo coverage estimation.

A trial draws m unit cells around the origin (center offsets uniform on
[-1/2, 1/2] per dimension) and measures, exactly, how much of the query cube
[-1/2, 1/2]^d is covered by at least ell of them. Only the cell positions
are random: each trial's coverage is evaluated in closed form by
inclusion-exclusion over the 2^m - 1 nonempty cell subsets, so estimator
noise comes from cell sampling alone, never from point sampling inside a
trial.

Reproducibility contract: trial i reads fixed positions of a counter-based
stream (:mod:`gridlsh.rng`), chunk boundaries are a fixed function of the
inputs, and partial sums are combined in chunk order. The same
(seed, samples) therefore produce bit-identical estimates for any worker
count and across repeated runs.

:func:`raster_oracle` is the deliberately dumb cross-check: it rasterizes
the query cube and counts midpoints, sharing no code with the subset
enumeration.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb, fsum, sqrt

import numpy as np

from .rng import stream_key, uniform_block

__all__ = [
    "MAX_CELLS",
    "CellSample",
    "McEstimate",
    "sample_cells",
    "trial_offsets",
    "intersection_volume",
    "union_volume",
    "coverage_at_least",
    "raster_oracle",
    "mc_estimate_p",
]

# Exact coverage enumerates every nonempty cell subset, so 2^m boxes.
MAX_CELLS = 20

# Trials per work unit. Chunk boundaries are part of the determinism
# contract: they must depend only on the sample count, never on workers.
_CHUNK = 4096

_RASTER_POINT_CAP = 2**28


@dataclass(frozen=True)
class CellSample:
    """Center offsets of m cells, one row per cell, shape (m, d).

    Row i parameterizes the cell [offset - 1/2, offset + 1/2] per dimension;
    every component lies in [-1/2, 1/2], so every cell contains the origin.
    """

    cells: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.cells, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"cells must be a 2-d array (m, d), got shape {arr.shape}")
        m, d = arr.shape
        if not 1 <= m <= MAX_CELLS:
            raise ValueError(f"m must be in 1..{MAX_CELLS} (subset enumeration is 2^m), got {m}")
        if d < 1:
            raise ValueError(f"d must be >= 1, got {d}")
        if not np.all(np.abs(arr) <= 0.5):
            raise ValueError("every offset component must lie in [-1/2, 1/2]")
        object.__setattr__(self, "cells", arr)

    @property
    def m(self) -> int:
        return self.cells.shape[0]

    @property
    def d(self) -> int:
        return self.cells.shape[1]


@dataclass(frozen=True)
class McEstimate:
    """Mean coverage with its standard error and full provenance."""

    mean: float
    stderr: float
    samples: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"mean must be in [0, 1], got {self.mean}")
        if self.stderr < 0.0:
            raise ValueError(f"stderr must be >= 0, got {self.stderr}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")


def sample_cells(m: int, d: int, rng: np.random.Generator) -> CellSample:
    """Draw one trial: m cells with offsets uniform on [-1/2, 1/2]^d."""
    if not 1 <= m <= MAX_CELLS:
        raise ValueError(f"m must be in 1..{MAX_CELLS}, got {m}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return CellSample(rng.random((m, d)) - 0.5)


def trial_offsets(seed: int, m: int, d: int, start: int, count: int) -> np.ndarray:
    """Offsets used by trials ``start .. start+count-1`` of an estimation run.

    Shape (count, m, d). This is exactly what :func:`mc_estimate_p` consumes
    for the same seed, exposed so tests can replay any trial through the
    scalar geometry functions.
    """
    if not 1 <= m <= MAX_CELLS:
        raise ValueError(f"m must be in 1..{MAX_CELLS}, got {m}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    block = uniform_block(stream_key(seed), start, count, m * d)
    return block.reshape(count, m, d) - 0.5


def intersection_volume(sample: CellSample, subset) -> float:
    """Exact volume of (the chosen cells' intersection) within the query cube.

    Per dimension the covered interval is
    ``[max(offsets) - 1/2, min(offsets) + 1/2]`` clipped to [-1/2, 1/2];
    the volume is the product of the clamped lengths.
    """
    idx = sorted(set(int(i) for i in subset))
    if not idx:
        raise ValueError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= sample.m:
        raise ValueError(f"subset indices must be in 0..{sample.m - 1}, got {idx}")
    chosen = sample.cells[idx]
    lower = np.maximum(chosen.max(axis=0) - 0.5, -0.5)
    upper = np.minimum(chosen.min(axis=0) + 0.5, 0.5)
    return float(np.prod(np.maximum(upper - lower, 0.0)))


def _volumes_by_size(sample: CellSample) -> list[list[float]]:
    """Intersection volumes of every nonempty subset, grouped by subset size.

    Depth-first over cells so each subset reuses its parent's box; an empty
    box prunes its supersets, which is exact because their volumes are 0 and
    contribute nothing to the sums.
    """
    m = sample.m
    lower0 = np.maximum(sample.cells - 0.5, -0.5)
    upper0 = np.minimum(sample.cells + 0.5, 0.5)
    out: list[list[float]] = [[] for _ in range(m + 1)]

    def extend(first: int, lower: np.ndarray, upper: np.ndarray, size: int) -> None:
        for i in range(first, m):
            nlo = np.maximum(lower, lower0[i])
            nup = np.minimum(upper, upper0[i])
            lengths = nup - nlo
            if np.all(lengths > 0.0):
                out[size + 1].append(float(np.prod(lengths)))
                extend(i + 1, nlo, nup, size + 1)
            else:
                out[size + 1].append(0.0)

    for i in range(m):
        out[1].append(float(np.prod(upper0[i] - lower0[i])))
        extend(i + 1, lower0[i], upper0[i], 1)
    return out


def union_volume(sample: CellSample) -> float:
    """Exact volume of (union of all cells) within the query cube.

    Inclusion-exclusion over all nonempty subsets; fsum keeps the heavily
    cancelling alternating sum exactly rounded.
    """
    vols = _volumes_by_size(sample)
    sums = [fsum(vols[j]) for j in range(1, sample.m + 1)]
    return fsum(s if j % 2 == 0 else -s for j, s in enumerate(sums))


def coverage_at_least(sample: CellSample, ell: int) -> float:
    """Exact volume of the query-cube region covered by >= ell cells.

    Uses the subset sums S_j = sum of j-fold intersection volumes::

        sum_{j=ell..m} (-1)^(j-ell) C(j-1, ell-1) S_j
    """
    if not 1 <= ell <= sample.m:
        raise ValueError(f"ell must satisfy 1 <= ell <= m, got ell={ell}, m={sample.m}")
    vols = _volumes_by_size(sample)
    terms = []
    for j in range(ell, sample.m + 1):
        coef = comb(j - 1, ell - 1) * (1 if (j - ell) % 2 == 0 else -1)
        terms.append(coef * fsum(vols[j]))
    return fsum(terms)


def raster_oracle(sample: CellSample, ell: int, resolution: int) -> float:
    """Brute-force coverage fraction on a midpoint grid.

    Rasterizes the query cube at ``resolution`` midpoints per axis, counts
    points covered by at least ell cells, and returns the fraction. The
    discretization error is bounded by m * d / resolution (each cell face
    can misclassify a slab of thickness at most half a pixel).

    Limited to d <= 3 and resolution^d <= 2^28 grid points.
    """
    if not 1 <= ell <= sample.m:
        raise ValueError(f"ell must satisfy 1 <= ell <= m, got ell={ell}, m={sample.m}")
    if sample.d > 3:
        raise ValueError(f"raster oracle supports d <= 3, got d={sample.d}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    if resolution**sample.d > _RASTER_POINT_CAP:
        raise ValueError(
            f"resolution^d = {resolution**sample.d} exceeds the {_RASTER_POINT_CAP} point cap"
        )
    d = sample.d
    mids = (np.arange(resolution) + 0.5) / resolution - 0.5
    counts = np.zeros((resolution,) * d, dtype=np.uint8)
    for cell in sample.cells:
        mask = np.ones((), dtype=bool)
        for axis in range(d):
            shape = [1] * d
            shape[axis] = resolution
            hits = np.abs(mids - cell[axis]) <= 0.5
            mask = mask & hits.reshape(shape)
        counts += mask
    return float(np.count_nonzero(counts >= ell)) / resolution**d


class _KahanAccumulator:
    """Vector Kahan summation; order of adds is fixed by the caller."""

    __slots__ = ("total", "_comp")

    def __init__(self, n: int) -> None:
        self.total = np.zeros(n)
        self._comp = np.zeros(n)

    def add(self, values: np.ndarray) -> None:
        y = values - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t


def _batch_coverage(offsets: np.ndarray, ell: int) -> np.ndarray:
    """Per-trial coverage_at_least for a (n, m, d) block of offsets.

    Same subset recursion as the scalar path, vectorized across trials, with
    compensated accumulation of the per-size subset sums.
    """
    n, m, _ = offsets.shape
    lower0 = np.maximum(offsets - 0.5, -0.5)
    upper0 = np.minimum(offsets + 0.5, 0.5)
    sums = [_KahanAccumulator(n) for _ in range(m + 1)]

    def extend(first: int, lower: np.ndarray, upper: np.ndarray, size: int) -> None:
        for i in range(first, m):
            nlo = np.maximum(lower, lower0[:, i, :])
            nup = np.minimum(upper, upper0[:, i, :])
            sums[size + 1].add(np.prod(np.maximum(nup - nlo, 0.0), axis=1))
            if i + 1 < m:
                extend(i + 1, nlo, nup, size + 1)

    for i in range(m):
        sums[1].add(np.prod(upper0[:, i, :] - lower0[:, i, :], axis=1))
        if i + 1 < m:
            extend(i + 1, lower0[:, i, :], upper0[:, i, :], 1)

    coverage = _KahanAccumulator(n)
    for j in range(ell, m + 1):
        coef = comb(j - 1, ell - 1) * (1 if (j - ell) % 2 == 0 else -1)
        coverage.add(coef * sums[j].total)
    # True coverage lies in [0, 1]; clip only the float noise at the edges.
    return np.clip(coverage.total, 0.0, 1.0)


def _chunk_moments(seed: int, m: int, d: int, ell: int, start: int, count: int) -> tuple[float, float]:
    covered = _batch_coverage(trial_offsets(seed, m, d, start, count), ell)
    return float(np.sum(covered)), float(np.sum(covered * covered))


def mc_estimate_p(
    m: int,
    ell: int,
    d: int,
    samples: int,
    seed: int,
    workers: int = 1,
) -> McEstimate:
    """Monte Carlo estimate of p(m, ell, d) from exact per-trial geometry.

    Fully reproducible from (seed, samples, m, ell, d): trial i always uses
    the same cells and chunk partial sums are merged in fixed order, so the
    result is bit-identical for any ``workers`` value.
    """
    if not 1 <= ell <= m:
        raise ValueError(f"ell must satisfy 1 <= ell <= m, got ell={ell}, m={m}")
    if m > MAX_CELLS:
        raise ValueError(f"m must be <= {MAX_CELLS}, got {m}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    stream_key(seed)  # validates the 64-bit range

    jobs = [(start, min(_CHUNK, samples - start)) for start in range(0, samples, _CHUNK)]
    if workers == 1:
        moments = [_chunk_moments(seed, m, d, ell, start, count) for start, count in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            moments = list(
                pool.map(lambda job: _chunk_moments(seed, m, d, ell, job[0], job[1]), jobs)
            )

    total = fsum(first for first, _ in moments)
    total_sq = fsum(second for _, second in moments)
    mean = total / samples
    if samples > 1:
        variance = max(total_sq - total * total / samples, 0.0) / (samples - 1)
        stderr = sqrt(variance / samples)
    else:
        stderr = 0.0
    return McEstimate(mean=mean, stderr=stderr, samples=samples, seed=seed)
