"""Deterministic control case: ``dx = (x - x**3) dt`` on [0, 1].

Its point attractor ``{0, 1}`` is disconnected while its set attractor is
the whole (connected) interval.  Wrapped as a trivial random system so the
attractor experiments run on it unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoisePath

# max of x - x**3 on [0, 1], attained at 1/sqrt(3)
MAX_SPEED = 2.0 / (3.0 * np.sqrt(3.0))


def doublewell_flow(t: float, x):
    """Closed-form flow ``x e^t / sqrt(1 - x^2 + x^2 e^{2t})``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("points must lie in [0, 1]")
    # divide through by e^t to stay finite for large t
    out = x / np.sqrt((1.0 - x * x) * np.exp(-2.0 * t) + x * x)
    out = np.where(x == 0.0, 0.0, out)
    out = np.minimum(out, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class IntervalCloud:
    """Finite subset of [0, 1]; embeds on the x-axis."""

    x: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).ravel()

    def __len__(self) -> int:
        return len(self.x)

    def embed(self) -> np.ndarray:
        return np.column_stack([self.x, np.zeros_like(self.x)])


def unit_grid(points: int) -> IntervalCloud:
    return IntervalCloud(np.linspace(0.0, 1.0, points), f"[0,1] grid n={points}")


def doublewell_point_attractor(grid, horizon: float = 20.0) -> IntervalCloud:
    """Grid points flowed for ``horizon``; they cluster at 0 and 1."""
    x = grid.x if isinstance(grid, IntervalCloud) else np.asarray(grid, dtype=np.float64)
    return IntervalCloud(doublewell_flow(horizon, x), f"point attractor horizon={horizon}")


def doublewell_set_attractor(points: int = 1001) -> IntervalCloud:
    """Grid of the whole interval, which the flow maps onto itself."""
    out = unit_grid(points)
    out.label = "set attractor [0,1]"
    return out


@dataclass(frozen=True)
class DoubleWellSystem:
    """The double well as a random system that ignores its noise."""

    points: int = 1001

    name = "doublewell"

    @property
    def grid_step(self) -> float:
        return 1.0 / (self.points - 1)

    def sample_path(self, seed: int) -> NoisePath:
        return NoisePath(int(seed), 0.0)

    def phi(self, path, duration: float, cloud):
        if isinstance(cloud, IntervalCloud):
            return IntervalCloud(doublewell_flow(duration, cloud.x), cloud.label)
        return doublewell_flow(duration, cloud)

    def pullback(self, path, duration: float, cloud):
        return self.phi(path, duration, cloud)

    def attractor(self, path=None, n=None) -> IntervalCloud:
        return doublewell_set_attractor(self.points)

    def bounded_set(self, r: int, resolution: int, z_window=None) -> IntervalCloud:
        # every bounded set of the state space is inside [0, 1]
        return unit_grid(max(2, resolution * 8 + 1))

    def random_points(self, rng, n: int, r: int = 2) -> IntervalCloud:
        return IntervalCloud(rng.random(n), "random [0,1]")
