"""Synthetic 2-D datasets and CSV sample I/O."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ContractError
from .seeding import seed_stream

DATASET_KINDS = ("gmm_ring", "checkerboard", "swiss_roll", "csv_file")


def ring_centers(modes: int, radius: float) -> np.ndarray:
    """Component means placed uniformly on a circle."""
    angles = 2.0 * np.pi * np.arange(modes) / modes
    return np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=1)


def gmm_ring(n: int, modes: int = 8, radius: float = 4.0, noise: float = 0.1,
             seed: int = 0) -> np.ndarray:
    """Equal-weight isotropic Gaussians on a circle."""
    if modes < 1 or radius <= 0 or noise <= 0:
        raise ConfigError("gmm_ring needs modes >= 1, radius > 0, noise > 0")
    rng = seed_stream(seed, "gmm_ring")
    centers = ring_centers(modes, radius)
    comp = rng.integers(0, modes, size=n)
    return (centers[comp] + noise * rng.standard_normal((n, 2))).astype(np.float32)


def checkerboard(n: int, extent: float = 4.0, squares: int = 4, seed: int = 0) -> np.ndarray:
    """Points on the dark squares of a checkerboard over [-extent, extent]^2."""
    if squares < 2 or extent <= 0:
        raise ConfigError("checkerboard needs squares >= 2 and extent > 0")
    rng = seed_stream(seed, "checkerboard")
    cell = 2.0 * extent / squares
    points = np.empty((0, 2))
    while len(points) < n:
        cand = rng.uniform(-extent, extent, size=(2 * max(n, 64), 2))
        ix = np.floor((cand[:, 0] + extent) / cell).astype(int)
        iy = np.floor((cand[:, 1] + extent) / cell).astype(int)
        points = np.concatenate([points, cand[(ix + iy) % 2 == 0]])
    return points[:n].astype(np.float32)


def swiss_roll(n: int, noise: float = 0.2, seed: int = 0) -> np.ndarray:
    """2-D spiral with Gaussian jitter, scaled to roughly [-4, 4]^2."""
    rng = seed_stream(seed, "swiss_roll")
    t = 1.5 * np.pi * (1.0 + 2.0 * rng.uniform(0.0, 1.0, size=n))
    pts = np.stack([t * np.cos(t), t * np.sin(t)], axis=1) / 3.5
    return (pts + noise * rng.standard_normal((n, 2))).astype(np.float32)


def generate_dataset(kind: str, n: int, seed: int = 0, **params) -> np.ndarray:
    if kind == "gmm_ring":
        return gmm_ring(n, modes=params.get("modes", 8), radius=params.get("radius", 4.0),
                        noise=params.get("noise", 0.1), seed=seed)
    if kind == "checkerboard":
        return checkerboard(n, extent=params.get("extent", 4.0),
                            squares=params.get("squares", 4), seed=seed)
    if kind == "swiss_roll":
        return swiss_roll(n, noise=params.get("noise", 0.2), seed=seed)
    if kind == "csv_file":
        path = params.get("path")
        if not path:
            raise ConfigError("csv_file dataset needs a 'path'")
        return read_samples_csv(path)
    raise ConfigError(f"unknown dataset kind {kind!r} (expected one of {DATASET_KINDS})")


def write_samples_csv(path, samples: np.ndarray) -> None:
    """Write an (n, C) array with header x0..x{C-1}; deterministic bytes."""
    samples = np.asarray(samples, dtype=np.float32)
    if samples.ndim != 2:
        raise ContractError(f"samples must be 2-D, got shape {samples.shape}")
    cols = samples.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"x{i}" for i in range(cols)) + "\n")
        for row in samples:
            fh.write(",".join(f"{v:.8g}" for v in row) + "\n")


def read_samples_csv(path) -> np.ndarray:
    with open(path, "r") as fh:
        header = fh.readline().strip()
        if not header:
            raise ContractError(f"{path} is empty")
        names = header.split(",")
        if any(name != f"x{i}" for i, name in enumerate(names)):
            raise ContractError(f"{path} has unexpected header {header!r}")
        rows = [line.strip() for line in fh if line.strip()]
    if not rows:
        return np.empty((0, len(names)), dtype=np.float32)
    data = np.array([[float(v) for v in row.split(",")] for row in rows], dtype=np.float32)
    if data.shape[1] != len(names):
        raise ContractError(f"{path}: row width does not match header")
    return data
