from dataclasses import dataclass

import numpy as np
import pytest

from rdslab.doublewell import DoubleWellSystem, IntervalCloud
from rdslab.laws import (check_cocycle, check_pullback_continuity, cocycle_sweep, continuity_refinement,
                         pullback_trajectory)
from rdslab.noise import NoisePath
from rdslab.space import Triangle, grid_sample
from rdslab.systems import TriangleSystem


def test_cocycle_on_a_cloud():
    sysc = TriangleSystem()
    path = sysc.sample_path(3)
    rep = check_cocycle(sysc, path, 0.7, 1.9, grid_sample(2, 4, 10))
    assert rep.passed and rep.max_identity_error == 0.0


def test_cocycle_sweeps():
    assert cocycle_sweep(TriangleSystem(), 1, samples=100).passed
    assert cocycle_sweep(TriangleSystem(discrete=True), 1, samples=100).passed
    assert cocycle_sweep(DoubleWellSystem(), 1, samples=100).passed


def test_cocycle_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        check_cocycle(DoubleWellSystem(), None, 0.1, 0.1, IntervalCloud([0.5]), tol=0.0)


def test_discrete_system_rejects_fractional_times():
    sysd = TriangleSystem(discrete=True)
    with pytest.raises(ValueError):
        sysd.phi(sysd.sample_path(1), 0.5, Triangle(0, "L", 0.5))
    with pytest.raises(ValueError):
        sysd.phi(NoisePath(1, 0.3), 1.0, Triangle(0, "L", 0.5))


def test_trajectory_shape_and_grid_validation():
    sysc = TriangleSystem()
    path = sysc.sample_path(2)
    x = grid_sample(0, 1, 1).subset(np.array([3]))
    traj = pullback_trajectory(sysc, path, x, [0.0, 0.5, 1.0])
    assert traj.shape == (3, 2)
    with pytest.raises(ValueError):
        check_pullback_continuity(sysc, path, x, [1.0, 0.5])


def test_pullback_is_lipschitz_across_phase_boundaries():
    sysc = TriangleSystem()
    rng = np.random.default_rng(5)
    for seed in range(3):
        path = sysc.sample_path(seed)
        x = sysc.random_points(rng, 1, 2)
        for m in (1, 2):
            c = path.phase_offset + m
            rep = continuity_refinement(sysc, path, x, c - 0.02, c + 0.02)
            assert rep.passed, rep


@dataclass(frozen=True)
class JumpSystem:
    """Negative control: the pullback jumps by 1 at t = 0.5."""

    def pullback(self, path, t, x):
        return np.array([[0.0 if t < 0.5 else 1.0, 0.0]])


def test_refinement_detects_a_jump():
    rep = continuity_refinement(JumpSystem(), None, None, 0.4, 0.6)
    assert rep.coarse == rep.fine == 1.0
    assert not rep.passed
