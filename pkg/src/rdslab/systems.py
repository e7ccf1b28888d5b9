"""The random triangle system packaged for the generic attractor experiments.

A *system* is any object offering ``sample_path``, ``phi``, ``pullback``,
``attractor`` and ``bounded_set``; the double-well control in
:mod:`rdslab.doublewell` offers the same surface.
"""
from __future__ import annotations

from dataclasses import dataclass

from .noise import NoisePath, shift, xi_window
from .phase import (continuous_attractor_extension, discrete_attractor_estimate, image_intervals,
                    phi, window_base_points)
from .space import PointCloud, grid_sample, random_bounded_points


@dataclass(frozen=True)
class TriangleSystem:
    """Triangle-chain RDS in continuous time, or its phase-boundary skeleton.

    With ``discrete=True`` paths carry no intra-phase offset and times must
    be whole phases, which is the iterated-map system ``f_{0,1}(xi_m, .)``.
    """

    discrete: bool = False
    n_pullback: int = 200
    z_window: int = 64
    arc_resolution: int = 64

    @property
    def name(self) -> str:
        return "triangle-discrete" if self.discrete else "triangle-continuous"

    def sample_path(self, seed: int) -> NoisePath:
        path = NoisePath.from_seed(int(seed))
        return path.at_boundary() if self.discrete else path

    def _check_time(self, path: NoisePath, duration: float):
        if self.discrete:
            if path.phase_offset != 0.0:
                raise ValueError("discrete system needs paths at a phase boundary")
            if duration != int(duration):
                raise ValueError(f"discrete system runs whole phases, got {duration}")

    def phi(self, path: NoisePath, duration: float, cloud):
        self._check_time(path, duration)
        return phi(path, duration, cloud)

    def pullback(self, path: NoisePath, duration: float, cloud):
        """``phi_t(theta_-t omega, x)``."""
        self._check_time(path, duration)
        return phi(shift(path, -duration), duration, cloud)

    def pullback_bounded(self, path: NoisePath, duration: float, grid: PointCloud) -> PointCloud:
        """Pullback image of a bounded set given by ``grid`` plus every base point.

        Sets of bounded height contain all of ``P_z``, far more than any
        window holds.  In discrete time their images are exact index sets, so
        the ones inside the window are added to the evolved grid; the rest
        lie within ``2**-z_window`` of an arc end point.
        """
        img = self.pullback(path, duration, grid)
        if not self.discrete or duration == 0:
            return img
        n = int(duration)
        bases = window_base_points(image_intervals(xi_window(path, -n, 0)), self.z_window)
        out = PointCloud.concat([img, bases]).unique()
        out.label = img.label
        return out

    def attractor(self, path: NoisePath, n: int | None = None) -> PointCloud:
        n = self.n_pullback if n is None else n
        est = discrete_attractor_estimate(path, n, self.z_window, self.arc_resolution)
        if self.discrete:
            return est
        return continuous_attractor_extension(path, est)

    def bounded_set(self, r: int, resolution: int, z_window: int | None = None) -> PointCloud:
        return grid_sample(r, resolution, 16 if z_window is None else z_window, self.arc_resolution)

    def random_points(self, rng, n: int, r: int = 2) -> PointCloud:
        return random_bounded_points(rng, n, r)
