"""Numerical checks of the defining laws of a random dynamical system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import shift
from .space import as_coords


@dataclass(frozen=True)
class CocycleLawReport:
    max_identity_error: float
    max_composition_error: float
    samples: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.max_identity_error, self.max_composition_error) <= self.tol


@dataclass(frozen=True)
class ContinuityReport:
    modulus: float
    worst_time: float
    steps: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.modulus <= self.tol


def _rowwise(a, b) -> np.ndarray:
    return np.linalg.norm(as_coords(a) - as_coords(b), axis=1)


def check_cocycle(system, path, s: float, t: float, x, tol: float = 1e-9) -> CocycleLawReport:
    """Compare ``phi_{s+t}(w, x)`` with ``phi_t(theta_s w, phi_s(w, x))``.

    ``x`` may be a single point or a whole cloud; the errors are maxima over
    its points.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ident = _rowwise(system.phi(path, 0.0, x), x)
    direct = system.phi(path, s + t, x)
    stepped = system.phi(shift(path, s), t, system.phi(path, s, x))
    comp = _rowwise(direct, stepped)
    n = len(ident)
    return CocycleLawReport(float(ident.max(initial=0.0)), float(comp.max(initial=0.0)), n, tol)


def cocycle_sweep(system, seed: int, samples: int = 1000, tol: float = 1e-9,
                  max_time: float = 3.0, r: int = 2) -> CocycleLawReport:
    """``check_cocycle`` over random ``(omega, s, t, x)`` triples."""
    rng = np.random.default_rng(seed)
    discrete = getattr(system, "discrete", False)
    worst_i = worst_c = 0.0
    for i in range(samples):
        path = system.sample_path(int(rng.integers(0, 2**63)))
        if discrete:
            s, t = (float(v) for v in rng.integers(0, int(max_time) + 1, 2))
        else:
            s, t = (float(v) for v in rng.random(2) * max_time)
        rep = check_cocycle(system, path, s, t, system.random_points(rng, 1, r), tol)
        worst_i = max(worst_i, rep.max_identity_error)
        worst_c = max(worst_c, rep.max_composition_error)
    return CocycleLawReport(worst_i, worst_c, samples, tol)


def pullback_trajectory(system, path, x, time_grid) -> np.ndarray:
    """Plane coordinates of ``phi_t(theta_-t w, x)`` along ``time_grid``.

    ``x`` is a single point; the result has one row per grid time.
    """
    rows = [as_coords(system.pullback(path, float(t), x))[0] for t in time_grid]
    return np.array(rows)


def check_pullback_continuity(system, path, x, time_grid, tol: float = np.inf) -> ContinuityReport:
    """Largest move of the pullback trajectory between consecutive grid times."""
    grid = np.asarray(time_grid, dtype=np.float64)
    if np.any(np.diff(grid) < 0) or np.any(grid < 0):
        raise ValueError("time grid must be sorted and nonnegative")
    traj = pullback_trajectory(system, path, x, grid)
    jumps = np.linalg.norm(np.diff(traj, axis=0), axis=1)
    if len(jumps) == 0:
        return ContinuityReport(0.0, float(grid[0]) if len(grid) else 0.0, 0, tol)
    i = int(np.argmax(jumps))
    return ContinuityReport(float(jumps[i]), float(grid[i]), len(jumps), tol)


@dataclass(frozen=True)
class RefinementReport:
    """Modulus at a coarse step versus a ``refine``-times finer step.

    Along a Lipschitz trajectory the modulus shrinks with the step; a jump
    keeps its size.  ``passed`` asks for at least a halving.
    """

    coarse: float
    fine: float
    step: float
    refine: int

    @property
    def ratio(self) -> float:
        return self.fine / self.coarse if self.coarse > 0 else 0.0

    @property
    def lipschitz_estimate(self) -> float:
        return self.fine * self.refine / self.step

    @property
    def passed(self) -> bool:
        return self.coarse == 0.0 or self.ratio <= 0.5


def continuity_refinement(system, path, x, t_lo: float, t_hi: float, step: float = 1e-3,
                          refine: int = 10) -> RefinementReport:
    n = int(round((t_hi - t_lo) / step))
    coarse = check_pullback_continuity(system, path, x, t_lo + step * np.arange(n + 1))
    fine_step = step / refine
    fine = check_pullback_continuity(system, path, x, t_lo + fine_step * np.arange(n * refine + 1))
    return RefinementReport(coarse.modulus, fine.modulus, step, refine)
