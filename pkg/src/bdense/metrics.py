"""Sample-quality and trajectory-fidelity metrics for low-dimensional data.

Kernel MMD and sliced Wasserstein distance stand in for embedding-based
image metrics; both are deterministic given their inputs and seed, and
symmetric in their two sample sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, DimensionError
from .seeding import seed_stream
from .solvers import TimeGrid, TrajectoryRecord, solve


@dataclass(frozen=True)
class MetricReport:
    """One metric evaluation: name, value, and sampling metadata."""

    metric: str
    value: float
    n: int
    seed: Optional[int] = None
    half_width: Optional[float] = None
    raw_value: Optional[float] = None
    extra: Optional[dict] = None


def _validate_samples(x, name: str, min_rows: int = 2) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D (n, dim) array, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise ContractError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


def _sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xx = np.sum(x * x, axis=1)[:, None]
    yy = np.sum(y * y, axis=1)[None, :]
    return np.maximum(xx + yy - 2.0 * (x @ y.T), 0.0)


def mmd_rbf(a, b, bandwidth="median") -> MetricReport:
    """Unbiased squared maximum mean discrepancy with an RBF kernel.

    The unbiased estimator can dip below zero on near-identical sets; the
    reported value is clamped at zero with the raw estimate retained.
    """
    a = _validate_samples(a, "a")
    b = _validate_samples(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ContractError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    d_aa = _sq_dists(a, a)
    d_bb = _sq_dists(b, b)
    d_ab = _sq_dists(a, b)
    if bandwidth == "median":
        pooled = np.concatenate([np.sqrt(d_ab).reshape(-1),
                                 np.sqrt(d_aa).reshape(-1),
                                 np.sqrt(d_bb).reshape(-1)])
        pooled = pooled[pooled > 0]
        h = float(np.median(pooled)) if pooled.size else 1.0
    else:
        h = float(bandwidth)
        if h <= 0:
            raise ContractError(f"bandwidth must be positive, got {h}")
    gamma = 1.0 / (2.0 * h * h)
    m, n = len(a), len(b)
    k_aa = np.exp(-gamma * d_aa)
    k_bb = np.exp(-gamma * d_bb)
    k_ab = np.exp(-gamma * d_ab)
    term_a = (k_aa.sum() - np.trace(k_aa)) / (m * (m - 1))
    term_b = (k_bb.sum() - np.trace(k_bb)) / (n * (n - 1))
    # Summing the cross matrix and its transpose keeps the estimate bitwise
    # symmetric under swapping the two sample sets.
    cross = (k_ab.sum() + k_ab.T.sum()) / (2.0 * m * n)
    raw = float(term_a + term_b - 2.0 * cross)
    return MetricReport(metric="mmd", value=max(raw, 0.0), n=min(m, n),
                        raw_value=raw, extra={"bandwidth": h})


def _w1_1d(u: np.ndarray, v: np.ndarray) -> float:
    u = np.sort(u)
    v = np.sort(v)
    if len(u) == len(v):
        return float(np.mean(np.abs(u - v)))
    qs = (np.arange(max(len(u), len(v))) + 0.5) / max(len(u), len(v))
    qu = np.quantile(u, qs)
    qv = np.quantile(v, qs)
    return float(np.mean(np.abs(qu - qv)))


def sliced_wasserstein(a, b, n_projections: int = 64, seed: int = 0) -> MetricReport:
    """Mean 1-D Wasserstein-1 distance over seeded random unit projections."""
    a = _validate_samples(a, "a", min_rows=1)
    b = _validate_samples(b, "b", min_rows=1)
    if a.shape[1] != b.shape[1]:
        raise ContractError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if n_projections < 1:
        raise ContractError(f"n_projections must be >= 1, got {n_projections}")
    rng = seed_stream(seed, "swd-projections")
    dirs = rng.standard_normal((n_projections, a.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pa = a @ dirs.T
    pb = b @ dirs.T
    per_proj = np.array([_w1_1d(pa[:, j], pb[:, j]) for j in range(n_projections)])
    return MetricReport(metric="swd", value=float(per_proj.mean()), n=min(len(a), len(b)),
                        seed=seed, half_width=float(1.96 * per_proj.std(ddof=1) /
                                                    np.sqrt(n_projections))
                        if n_projections > 1 else None)


def trajectory_endpoint_error(student, teacher_ref: TrajectoryRecord, noise,
                              grid: TimeGrid, method: str = "euler") -> MetricReport:
    """Mean squared endpoint gap between a student solve and a fine teacher
    reference, over a shared set of initial noise states.

    The paired design is enforced: the reference must have been produced
    from exactly the given initial states, on a grid at least 16x finer.
    """
    noise = np.asarray(noise, dtype=np.float32)
    ref_init = np.asarray(teacher_ref.states[0], dtype=np.float32)
    if ref_init.shape != noise.shape or not np.array_equal(ref_init, noise):
        raise ContractError("teacher reference was not computed from the given noise set")
    same_grid = tuple(teacher_ref.times) == tuple(grid.times)
    if not same_grid and teacher_ref.intervals < 16 * grid.intervals:
        raise ContractError(
            f"reference grid ({teacher_ref.intervals} intervals) must be at least "
            f"16x finer than the student grid ({grid.intervals} intervals)")
    student_traj = solve(student, noise, grid, method)
    diff = student_traj.endpoint().astype(np.float64) - \
        np.asarray(teacher_ref.endpoint(), dtype=np.float64)
    per_sample = np.sum(diff * diff, axis=1)
    return MetricReport(metric="endpoint_mse", value=float(per_sample.mean()), n=len(noise))


def mode_coverage(samples, centers, radius: float) -> MetricReport:
    """Fraction of centers with at least one sample within ``radius``."""
    samples = np.asarray(samples, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or len(centers) == 0:
        raise ContractError("centers must be a nonempty (m, dim) array")
    if radius <= 0:
        raise ContractError(f"radius must be positive, got {radius}")
    if samples.size == 0:
        counts = np.zeros(len(centers), dtype=int)
    else:
        if samples.ndim != 2 or samples.shape[1] != centers.shape[1]:
            raise DimensionError(f"samples shape {samples.shape} incompatible with "
                                 f"centers shape {centers.shape}")
        d2 = _sq_dists(centers, samples)
        counts = np.sum(d2 <= radius * radius, axis=1)
    covered = counts > 0
    return MetricReport(metric="mode_coverage", value=float(np.mean(covered)),
                        n=int(len(samples) if samples.size else 0),
                        extra={"per_mode_counts": counts.tolist()})
