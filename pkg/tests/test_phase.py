import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdslab.errors import IndexOverflow, SetBlowup
from rdslab.noise import NoisePath, shift
from rdslab.phase import (base_index_map, discrete_attractor_estimate, f01, f0t, f0t_inv, fst,
                          image_intervals, p0_in_Fn, p0_in_Fn_batch, p0_in_Fn_oracle, phi, thresholds)
from rdslab.properties import phase_suite, random_windows
from rdslab.space import (KIND_TRI, Arc, LeftRay, PointCloud, Triangle, base_point, embed,
                          from_polyline, polyline_coord)


def close(p, q, tol=1e-12):
    (x1, y1), (x2, y2) = embed(p), embed(q)
    return math.hypot(x1 - x2, y1 - y2) <= tol


def test_thresholds():
    th = thresholds(3)
    assert (th.k_fact, th.zR, th.zL) == (6, -24, -23)
    with pytest.raises(ValueError):
        thresholds(0)
    with pytest.raises(ValueError):
        thresholds(34)


def test_full_phase_pushes_base_points():
    assert f01(1, base_point(0)) == base_point(1)
    assert f01(3, base_point(-23)) == base_point(-17)
    # below the push region base points stay
    assert f01(3, base_point(-24)) == base_point(-24)


def test_base_index_map():
    assert base_index_map(1, 0) == 1
    assert base_index_map(2, -5) == -3
    assert base_index_map(2, -6) == -6
    assert base_index_map(3, 10) == 16


def test_half_phase_moves_along_the_chain():
    # u = 0.25 moves by 2 t k! = 1 to u = 1.25
    assert f0t(1, 0.5, Triangle(0, "L", 0.25)) == from_polyline(1.25) == Triangle(0, "R", 0.75)


def test_shrink_and_blend():
    assert f01(1, Triangle(-3, "L", 0.5)) == Triangle(-3, "L", 0.25)
    assert f0t(1, 0.5, Triangle(-3, "R", 0.4)).lam == pytest.approx(0.4 * 2**-0.5, abs=1e-15)
    # blend fixes the apex and is continuous with shrink at lam = 1/2
    assert f01(2, Triangle(-7, "L", 1.0)) == Triangle(-7, "L", 1.0)
    assert f01(2, Triangle(-7, "R", 0.75)).lam == pytest.approx(0.25 + 1.5 * 0.25)


def test_stretch_sweeps_the_gap():
    th = thresholds(2)
    top = f01(2, Triangle(th.zR, "L", 1.0))
    assert polyline_coord(top) == pytest.approx(2 * th.zR + 1 + 2 * th.k_fact)
    low = f01(2, Triangle(th.zR, "L", 0.5 + 1e-12))
    assert polyline_coord(low) == pytest.approx(2 * th.zR + 0.25, abs=1e-9)


def test_ray_and_arc():
    assert f01(3, LeftRay(4.0)) == LeftRay(2.0)
    assert f0t(2, 0.3, Arc(4.0)) == Arc(4.0)


def test_time_endpoints():
    p = Triangle(-4, "R", 0.3)
    assert f0t(2, 0.0, p) == p
    assert f0t(2, 1.0, p) == f01(2, p)
    assert fst(2, 0.4, 0.4, p) == p
    with pytest.raises(ValueError):
        f0t(1, 1.5, p)
    with pytest.raises(ValueError):
        fst(1, 0.6, 0.4, p)


point_strategy = st.builds(
    lambda z, side, frac: Triangle(z, side, frac * min(1.0, 2.0 ** (4 + z))),
    st.integers(-30, 12), st.sampled_from("LR"), st.floats(0, 1))


@settings(max_examples=400, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(0, 1), point_strategy)
def test_inverse_roundtrip(k, t, p):
    back = f0t_inv(k, t, f0t(k, t, p))
    if p.z < -6:
        assert abs(polyline_coord(back) - polyline_coord(p)) <= 1e-12
    else:
        assert close(back, p)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), point_strategy)
def test_intra_phase_composition(k, a, b, c, p):
    r, s, t = sorted((a, b, c))
    direct = fst(k, r, t, p)
    stepped = fst(k, s, t, fst(k, r, s, p))
    if p.z < -6:
        assert abs(polyline_coord(direct) - polyline_coord(stepped)) <= 1e-9
    else:
        assert close(direct, stepped, 1e-11)


def test_forward_is_monotone_in_the_chart():
    for k in (1, 2, 3):
        th = thresholds(k)
        u = np.linspace(2 * th.zR - 6, 2 * th.zR + 6, 4001) + 1e-7
        img = [polyline_coord(f0t(k, 0.6, from_polyline(float(v)))) for v in u]
        assert np.all(np.diff(img) > 0)


def test_wide_indices():
    z = 2**62 - 3
    assert f01(3, base_point(z)) == base_point(z + 6)
    big = 2**126 - 2**120
    with pytest.raises(IndexOverflow):
        f01(33, base_point(big))


def test_exact_stretch_for_huge_factorials():
    # 33! exceeds 2**50, so the stretch piece runs in exact rationals
    th = thresholds(32)
    p = Triangle(th.zR, "L", 0.75)
    q = f0t(32, 0.5, p)
    assert q.z > th.zR
    back = f0t_inv(32, 0.5, q)
    assert back.z == th.zR and abs(back.lam - 0.75) < 1e-9


def test_cloud_and_point_agree():
    pts = [Triangle(z, s, lam) for z in (-8, -3, 0, 2) for s in "LR" for lam in (0.1, 0.5, 0.9)]
    cloud = f0t(2, 0.7, PointCloud.from_points(pts))
    assert cloud.points() == [f0t(2, 0.7, p) for p in pts]


def test_phi_runs_whole_and_partial_phases():
    path = NoisePath(5, 0.25)
    p = Triangle(1, "L", 0.5)
    assert phi(path, 0.0, p) == p
    direct = phi(path, 2.5, p)
    stepped = phi(shift(path, 1.0), 1.5, phi(path, 1.0, p))
    assert close(direct, stepped)


@pytest.mark.parametrize("window,expected", [
    ([1, 1], False),
    ([3], True),
    ([1, 1, 2], True),
    ([2, 2, 2], False),
    ([2, 1, 2, 2], False),
    ([2, 3, 2, 2], True),
])
def test_membership_predicate_examples(window, expected):
    assert p0_in_Fn(window) is expected
    assert p0_in_Fn_oracle(window) is expected


def test_predicate_matches_oracle_and_batch():
    wins = random_windows(2, 3000)
    assert all(p0_in_Fn(w) == p0_in_Fn_oracle(w) for w in wins)
    same = [w for w in wins if len(w) == 20]
    assert np.array_equal(p0_in_Fn_batch(np.array(same)), [p0_in_Fn(w) for w in same])


def test_oracle_guards():
    with pytest.raises(ValueError):
        p0_in_Fn([])
    with pytest.raises(SetBlowup):
        p0_in_Fn_oracle([1] * 5, cap=0)


def test_image_intervals():
    # with k = 1 the index -1 is pushed onto 0, leaving a gap at -1
    assert image_intervals([1]) == [(-math.inf, -2), (0, math.inf)]
    assert image_intervals([1, 1]) == [(-math.inf, -2), (1, math.inf)]
    assert image_intervals([2], [(0, 3)]) == [(2, 5)]


def test_attractor_estimate_is_nested_and_contains_the_arc_ends():
    path = NoisePath(21)
    prev = None
    for n in (1, 5, 20, 80):
        est = discrete_attractor_estimate(path, n, 32, 16)
        keys = set(est.keys())
        assert Arc(math.pi) in est.points() and Arc(2 * math.pi) in est.points()
        assert np.all(est.coord[est.kind == KIND_TRI] == 0.0)
        if prev is not None:
            assert keys <= prev
        prev = keys


def test_phase_suite_small_sample():
    results = phase_suite(samples=500, seed=3)
    assert all(r.passed for r in results), [r.row() for r in results if not r.passed]
