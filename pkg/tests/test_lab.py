import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdslab.doublewell import DoubleWellSystem, IntervalCloud, unit_grid
from rdslab.errors import SearchExhausted
from rdslab.noise import shift
from rdslab.lab import (EstimateWithCI, absorption_search, connectivity_report, epsilon_components,
                        geometric_checkpoints, hausdorff_semidist, membership_probability,
                        pullback_orbit, uniform_attraction_check, weak_attraction_probability)
from rdslab.space import Arc, PointCloud, base_point, grid_sample
from rdslab.systems import TriangleSystem


def bfs_components(pts, eps):
    """Plain breadth-first search over the epsilon graph; labels by first appearance."""
    n = len(pts)
    labels = [-1] * n
    count = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = count
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in range(n):
                if labels[j] < 0 and math.dist(pts[i], pts[j]) < eps:
                    labels[j] = count
                    queue.append(j)
        count += 1
    return count, labels


def test_semidist_examples():
    p0 = PointCloud.from_points([base_point(0)])
    p01 = PointCloud.from_points([base_point(0), base_point(1)])
    assert hausdorff_semidist(p0, p01) == 0.0
    assert hausdorff_semidist(p01, p0) == 1.0
    g = grid_sample(0, 4, 8)
    assert hausdorff_semidist(g, g) == 0.0
    with pytest.raises(ValueError):
        hausdorff_semidist(np.empty((0, 2)), g)


def test_component_examples():
    p01 = PointCloud.from_points([base_point(0), base_point(1)])
    assert epsilon_components(p01, 0.5)[0] == 2
    assert epsilon_components(p01, 1.5)[0] == 1
    assert epsilon_components(np.array([[0.0, 0.0], [0.05, 0.0], [1.0, 0.0]]), 0.1)[0] == 2
    # strict inequality: points exactly epsilon apart are not joined
    assert epsilon_components(np.array([[0.0, 0.0], [1.0, 0.0]]), 1.0)[0] == 2


def test_components_match_bfs_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        pts = rng.random((n, 2)) * rng.uniform(0.5, 3.0)
        eps = float(rng.uniform(0.05, 0.6))
        count, labels = epsilon_components(pts, eps)
        want_count, want_labels = bfs_components(pts.tolist(), eps)
        assert count == want_count
        assert labels.tolist() == want_labels


def test_component_cap():
    with pytest.raises(ValueError):
        epsilon_components(np.zeros((20_001, 2)), 0.1)


def test_connectivity_report():
    est = PointCloud.from_points([base_point(0), base_point(-1), base_point(1), Arc(math.pi), Arc(2 * math.pi)])
    rep = connectivity_report(est, [0.4, 0.6, 1.1])
    assert rep.component_counts[0] >= 2
    assert rep.component_counts == sorted(rep.component_counts, reverse=True)
    with pytest.raises(ValueError):
        connectivity_report(est, [0.5, 0.1])
    assert connectivity_report(PointCloud.from_points([base_point(3)]), [0.1]).component_counts == [1]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=30),
       st.floats(0.01, 1.0))
def test_counts_never_increase_with_epsilon(points, eps):
    pts = np.array(points)
    assert epsilon_components(pts, 2 * eps)[0] <= epsilon_components(pts, eps)[0]


def test_estimate_half_width():
    e = EstimateWithCI.from_successes([1, 0, 1, 1])
    assert e.mean == 0.75
    assert e.half_width == pytest.approx(3 * math.sqrt(0.75 * 0.25 / 4))
    assert e.lower < e.mean < e.upper


def test_membership_is_reproducible_and_bounded():
    a = membership_probability(30, 2000, seed=4)
    assert a == membership_probability(30, 2000, seed=4)
    assert a != membership_probability(30, 2000, seed=5)
    assert 0.5 <= a.mean <= 1.0
    with pytest.raises(ValueError):
        membership_probability(10, 50, 1)


def test_membership_conditional_probability():
    # P(xi = k | xi >= k) = 2**-k / 2**-(k-1) = 1/2 and the bound sums to 1/2
    assert all(2.0**-k / 2.0 ** -(k - 1) == 0.5 for k in range(1, 30))
    assert 1 - sum(0.5 ** (k + 1) for k in range(1, 60)) == pytest.approx(0.5)


def test_orbit_starts_at_K():
    sysd = TriangleSystem(discrete=True, z_window=16)
    path = sysd.sample_path(2)
    K = grid_sample(2, 4, 8)
    steps = pullback_orbit(sysd, path, K, 5, [0, 5])
    assert steps[0].semidist == hausdorff_semidist(K, sysd.attractor(path))
    with pytest.raises(ValueError):
        pullback_orbit(sysd, path, K, 5, [6])


def test_orbit_of_typical_omega_converges():
    sysd = TriangleSystem(discrete=True, z_window=16)
    K = grid_sample(2, 8, 16)
    final = [pullback_orbit(sysd, sysd.sample_path(s), K, 50, [50])[0].semidist for s in range(20)]
    assert np.median(final) <= 0.05


def test_doublewell_orbit_is_invariant():
    dw = DoubleWellSystem()
    steps = pullback_orbit(dw, dw.sample_path(0), unit_grid(1001), 5, [0, 1, 5])
    # the flowed grid stays in [0, 1]; off-grid points sit within half a step
    assert steps[0].semidist == 0.0
    assert all(s.semidist <= dw.grid_step / 2 for s in steps)


def test_attractor_estimate_is_invariant():
    # phi_t(theta_-t w, F_n(theta_-t w)) = F_{n+t}(w), a subset of F_n(w)
    sysd = TriangleSystem(discrete=True, z_window=16)
    path = sysd.sample_path(8)
    for t in (1, 3, 10):
        earlier = sysd.attractor(shift(path, -t), n=40)
        img = sysd.pullback(path, t, earlier)
        img = img.subset(img.z <= 16)  # pushed past the window edge
        assert hausdorff_semidist(img, sysd.attractor(path, n=40)) == 0.0


def test_uniform_attraction_family_of_the_attractor():
    sysd = TriangleSystem(discrete=True, z_window=16)
    path = sysd.sample_path(8)
    rep = uniform_attraction_check(sysd, path, [sysd.attractor(path)], 0, 1e-12, checkpoints=[0])
    assert rep.passed and rep.common_time == 0.0


def test_uniform_attraction_doublewell():
    dw = DoubleWellSystem()
    rng = np.random.default_rng(1)
    family = [IntervalCloud(rng.random(50)) for _ in range(20)]
    rep = uniform_attraction_check(dw, dw.sample_path(0), family, 10, dw.grid_step / 2)
    assert rep.passed and rep.common_time == 0.0


def test_geometric_checkpoints():
    cps = geometric_checkpoints(200)
    assert cps[0] == 0 and cps[-1] == 200 and np.all(np.diff(cps) > 0)
    assert len(cps) < 30


def test_absorption_doublewell():
    plan = absorption_search(DoubleWellSystem(), 0.5, 0, 4, 100)
    assert [e.t_n for e in plan.entries] == [0.0, 0.0]
    assert all(e.success_rate == 1.0 for e in plan.entries)


def test_absorption_exhausted():
    with pytest.raises(SearchExhausted):
        absorption_search(TriangleSystem(discrete=True), 0.1, 0, 0, 20)
    with pytest.raises(ValueError):
        absorption_search(DoubleWellSystem(), 0.0, 0, 1, 10)


def test_weak_attraction_with_infinite_radius():
    # short continuous pullbacks can lift points high into tall triangles,
    # so only an infinite radius is safe at every horizon
    e = weak_attraction_probability(TriangleSystem(), 1, 3.0, math.inf, 20, seed=0)
    assert e.mean == 1.0
    with pytest.raises(ValueError):
        weak_attraction_probability(TriangleSystem(), 1, 3.0, 0.0, 20, seed=0)
