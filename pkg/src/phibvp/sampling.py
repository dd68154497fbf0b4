"""Deterministic sample grids: directions on spheres, time grids, lambda grids."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def unit_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform unit vectors in R^n, shape (count', n).

    n=1 gives the two directions +1, -1; n=2 equally spaced angles; n=3 a
    Fibonacci lattice; higher n normalized Gaussian draws from ``seed``.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        r = np.sqrt(1.0 - z * z)
        ang = GOLDEN_ANGLE * k
        return np.column_stack([r * np.cos(ang), r * np.sin(ang), z])
    g = np.random.default_rng(seed).standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def time_grid(T: float, count: int) -> np.ndarray:
    """Periodic grid without the duplicate endpoint."""
    return T * np.arange(count) / count


def lambda_grid(count: int, top: float = 0.999) -> np.ndarray:
    """Points of [0, 1) including one close to 1, where homotopy margins are tightest."""
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, count, endpoint=False), [top]]))


def default_boundary_dirs(n: int) -> int:
    return {1: 2, 2: 256, 3: 1024}.get(n, 2048)


@dataclass
class SamplingConfig:
    n_time: int = 64
    n_lambda: int = 10
    n_boundary: int = 0
    n_tangent_radii: int = 9
    n_tangent_dirs: int = 8
    eps_strict: float = 1e-9
    root_tol: float = 1e-10
    face_samples: int = 17
    seed: int = 0

    def boundary_dirs(self, n: int) -> int:
        return self.n_boundary or default_boundary_dirs(n)

    @classmethod
    def from_dict(cls, cfg: dict | None) -> "SamplingConfig":
        cfg = dict(cfg or {})
        names = {f.name for f in fields(cls)}
        unknown = set(cfg) - names
        if unknown:
            raise ValueError(f"unknown sampling keys: {sorted(unknown)}")
        return cls(**cfg)
