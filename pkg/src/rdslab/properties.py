"""Sampled property suites behind ``rdslab verify``.

Each check returns a :class:`PropertyResult`; a suite is a list of them.
Absolute tolerances of ``1e-12`` only make sense where plane coordinates are
of order one, so triangle samples are capped at height ``2**HEIGHT_CAP_LOG2``
unless a region is taller than that by construction.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import chisquare

from .noise import MAX_PHASE, NoisePath, derive_seed, shift, xi_matrix, xi_window
from .phase import f0t, f0t_inv, fst, p0_in_Fn, p0_in_Fn_batch, p0_in_Fn_oracle, thresholds
from .space import KIND_TRI, SIDE_L, SIDE_R, PointCloud, side_length

HEIGHT_CAP_LOG2 = 6
TIMES = (0.0, 0.25, 0.5, 0.75, 1.0)
KS = (1, 2, 3)


@dataclass(frozen=True)
class PropertyResult:
    suite: str
    name: str
    passed: bool
    worst: float
    tol: float
    samples: int
    seconds: float = 0.0

    def row(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.suite:<6} {self.name:<28} worst={self.worst:.3e} tol={self.tol:.1e} n={self.samples}"


def _timed(suite, name, fn):
    t0 = time.perf_counter()
    passed, worst, tol, n = fn()
    return PropertyResult(suite, name, bool(passed), float(worst), float(tol), int(n), time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# sampling

def _tri_cloud(z, side, lam) -> PointCloud:
    z = np.asarray(z, dtype=np.int64)
    return PointCloud(np.full(len(z), KIND_TRI), z, np.asarray(side), np.asarray(lam, dtype=np.float64))


def _lam_cap(z: np.ndarray) -> np.ndarray:
    return np.minimum(1.0, np.ldexp(1.0, np.clip(HEIGHT_CAP_LOG2 + z, -1000, 1000)))


def _u(cloud: PointCloud) -> np.ndarray:
    """Polyline chart ``2 z + w`` as floats (triangle points only)."""
    w = np.where(cloud.side == SIDE_L, cloud.coord, 2.0 - cloud.coord)
    return 2.0 * cloud.z.astype(np.float64) + w


def push_samples(rng, k: int, n: int) -> PointCloud:
    th = thresholds(k)
    z = rng.integers(th.zR, 9, n)
    side = np.where(z == th.zR, SIDE_R, rng.integers(0, 2, n))
    return _tri_cloud(z, side, rng.random(n) * _lam_cap(z))


def shrink_samples(rng, k: int, n: int) -> PointCloud:
    th = thresholds(k)
    side = rng.integers(0, 2, n)
    z = th.zR - rng.integers(0, 9, n) - (side == SIDE_R)
    return _tri_cloud(z, side, rng.random(n) * np.minimum(0.5, _lam_cap(z)))


def base_neighbour_samples(rng, k: int, n: int):
    """``p`` on ``X_{z-1}^R`` or ``X_z^L`` with ``z >= zL``, paired with ``P_z``."""
    th = thresholds(k)
    z = rng.integers(th.zL, 9, n)
    right = rng.integers(0, 2, n).astype(bool)
    pz = np.where(right, z - 1, z)
    p = _tri_cloud(pz, np.where(right, SIDE_R, SIDE_L), rng.random(n) * _lam_cap(pz))
    return p, _tri_cloud(z, np.zeros(n, dtype=np.int8), np.zeros(n))


def same_side_pairs(rng, k: int, n: int):
    """Pairs on one side of one triangle, across every region of the map."""
    th = thresholds(k)
    z = rng.integers(th.zR - 4, 9, n)
    side = rng.integers(0, 2, n)
    cap = _lam_cap(z)
    # the stretch side of X_zR is tall by construction; sample it whole
    stretch = (z == th.zR) & (side == SIDE_L)
    cap = np.where(stretch, 1.0, cap)
    return _tri_cloud(z, side, rng.random(n) * cap), _tri_cloud(z, side, rng.random(n) * cap)


def _dist(a: PointCloud, b: PointCloud) -> np.ndarray:
    return np.linalg.norm(a.embed() - b.embed(), axis=1)


def _heights(c: PointCloud) -> np.ndarray:
    return c.coord * np.ldexp(1.0, -c.z.astype(np.int64))


def _split(n: int, parts: int) -> list[int]:
    return [n // parts + (i < n % parts) for i in range(parts)]


# ---------------------------------------------------------------------------
# phase-map properties

def check_push_height(rng, k: int, samples: int, tol: float = 1e-12):
    th = thresholds(k)
    p = push_samples(rng, k, samples)
    err = np.abs(_heights(f0t(k, 1.0, p)) - math.ldexp(1.0, -th.k_fact) * _heights(p))
    return err.max() <= tol, err.max(), tol, samples


def check_shrink(rng, k: int, samples: int, tol: float = 1e-12):
    worst = 0.0
    for t, m in zip(TIMES, _split(samples, len(TIMES))):
        p = shrink_samples(rng, k, m)
        err = np.abs(_heights(f0t(k, t, p)) - 2.0**-t * _heights(p))
        worst = max(worst, float(err.max()))
    return worst <= tol, worst, tol, samples


def check_base_contraction(rng, k: int, samples: int, tol: float = 1e-12):
    worst = -np.inf
    for t, m in zip(TIMES, _split(samples, len(TIMES))):
        p, base = base_neighbour_samples(rng, k, m)
        excess = _dist(f0t(k, t, p), f0t(k, t, base)) - _dist(p, base)
        worst = max(worst, float(excess.max()))
    return worst <= tol, worst, tol, samples


def check_side_lipschitz(rng, k: int, samples: int, tol: float = 1e-12):
    """Worst ``d(f p, f q) - 4 (k! + 1) d(p, q)`` over ``f = f_{s,t}``."""
    bound = 4.0 * (thresholds(k).k_fact + 1)
    pairs = [(s, t) for s in TIMES for t in TIMES if s <= t]
    worst = -np.inf
    for (s, t), m in zip(pairs, _split(samples, len(pairs))):
        p, q = same_side_pairs(rng, k, m)
        excess = _dist(fst(k, s, t, p), fst(k, s, t, q)) - bound * _dist(p, q)
        worst = max(worst, float(excess.max()))
    return worst <= tol, worst, tol, samples


def check_inverse(rng, k: int, samples: int, tol: float = 1e-12):
    worst = 0.0
    for t, m in zip(TIMES, _split(samples, len(TIMES))):
        p, _ = same_side_pairs(rng, k, m)
        p = PointCloud.concat([p, push_samples(rng, k, m // 2), shrink_samples(rng, k, m // 2)])
        # lam is exact only to absolute rounding, so points of tall triangles
        # are compared in the chart and everything else in the plane
        back = f0t_inv(k, t, f0t(k, t, p))
        tall = p.z.astype(np.int64) < -HEIGHT_CAP_LOG2
        err = np.where(tall, np.abs(_u(back) - _u(p)), _dist(back, p))
        worst = max(worst, float(err.max()))
    return worst <= tol, worst, tol, samples


def check_tiling(k: int, samples: int, tol: float = 1e-12):
    """Preimages of a sorted chart grid are sorted and map back onto the grid.

    An order-preserving two-sided inverse on a dense grid means the region
    images cover the chart without overlaps.
    """
    th = thresholds(k)
    lo, hi = 2 * th.zR - 8, 2 * th.zR + 4 * th.k_fact + 10
    worst, ok = 0.0, True
    for t, m in zip(TIMES, _split(samples, len(TIMES))):
        u = np.linspace(lo, hi, m)
        u = u[np.abs(u - np.round(u)) > 1e-9]  # skip exact vertices: their chart value is ambiguous
        z = np.floor(u / 2.0).astype(np.int64)
        w = u - 2.0 * z
        grid = _tri_cloud(z, np.where(w <= 1.0, SIDE_L, SIDE_R), np.where(w <= 1.0, w, 2.0 - w))
        pre = f0t_inv(k, t, grid)
        ok &= bool(np.all(np.diff(_u(pre)) > 0))
        err = np.abs(_u(f0t(k, t, pre)) - _u(grid))
        worst = max(worst, float(err.max()))
    return ok and worst <= tol, worst, tol, samples


def _boundaries(k: int) -> PointCloud:
    th = thresholds(k)
    z = [th.zR - 1, th.zR - 1, th.zR, th.zR, th.zR, th.zL, th.zL, th.zL + 1]
    side = [SIDE_L, SIDE_R, SIDE_L, SIDE_L, SIDE_L, SIDE_L, SIDE_L, SIDE_L]
    lam = [0.5, 0.5, 0.5, 0.0, 1.0, 0.0, 1.0, 0.0]
    return _tri_cloud(z, side, lam)


def check_continuity(rng, k: int, samples: int, step: float = 1e-9):
    """Jumps of ``(t, p) -> f_{0,t}(p)`` at region boundaries against a local bound.

    The bound is ``2 (4 (k!+1) |p - b| + (2 k! S + H) |dt|)`` with ``S`` and ``H``
    the largest side length and height near the boundary: the chart moves at
    speed ``2 k!``, heights decay at rate at most ``ln 2 < 1``.
    """
    th = thresholds(k)
    lip = 4.0 * (th.k_fact + 1)
    b = _boundaries(k)
    nb = len(b)
    reps = max(1, samples // nb)
    idx = np.repeat(np.arange(nb), reps)
    base = b.subset(idx)
    du = rng.uniform(-step, step, len(idx))
    # few distinct times keep the evaluation vectorized
    dt = step * rng.integers(-1, 2, len(idx))
    u = _u(base) + du
    z = np.floor(u / 2.0).astype(np.int64)
    w = u - 2.0 * z
    moved = _tri_cloud(z, np.where(w <= 1.0, SIDE_L, SIDE_R), np.clip(np.where(w <= 1.0, w, 2.0 - w), 0, 1))
    S = float(side_length(np.array([th.zR - 1])).max())
    H = 2.0 ** (-(th.zR - 1))
    worst = -np.inf
    for t in TIMES:
        t2 = np.clip(t + dt, 0.0, 1.0)
        ref = f0t(k, t, base).embed()
        got = np.empty_like(ref)
        for tt in np.unique(t2):
            sel = t2 == tt
            got[sel] = f0t(k, float(tt), moved.subset(sel)).embed()
        jump = np.linalg.norm(got - ref, axis=1)
        allowed = 2.0 * (lip * _dist(moved, base) + (2.0 * th.k_fact * S + H) * np.abs(t2 - t)) + 1e-12
        worst = max(worst, float((jump / allowed).max()))
    return worst <= 1.0, worst, 1.0, len(idx) * len(TIMES)


def random_windows(seed: int, count: int, max_len: int = 50) -> list[np.ndarray]:
    """``count`` noise windows with lengths uniform in ``1 .. max_len``."""
    rng = np.random.default_rng(seed)
    lengths = rng.integers(1, max_len + 1, count)
    rows = xi_matrix(derive_seed(seed, np.arange(count, dtype=np.int64)), -max_len, 0)
    return [rows[i, max_len - n:] for i, n in enumerate(lengths)]


def check_oracle(seed: int, samples: int):
    wins = random_windows(seed, samples)
    mismatch = sum(p0_in_Fn(w) != p0_in_Fn_oracle(w) for w in wins)
    return mismatch == 0, mismatch, 0, samples


def check_nested(seed: int, paths: int = 1000, n_max: int = 100):
    rows = xi_matrix(derive_seed(seed, np.arange(paths, dtype=np.int64)), -n_max, 0)
    prev = np.ones(paths, dtype=bool)
    violations = 0
    for n in range(1, n_max + 1):
        cur = p0_in_Fn_batch(rows[:, n_max - n:])
        violations += int(np.sum(cur & ~prev))
        prev = cur
    return violations == 0, violations, 0, paths * n_max


def phase_suite(samples: int = 10_000, seed: int = 0, ks=KS) -> list[PropertyResult]:
    out = []
    for k in ks:
        rng = np.random.default_rng([seed, k])
        tag = f"[k={k}]"
        out += [
            _timed("phase", f"push height {tag}", lambda: check_push_height(rng, k, samples)),
            _timed("phase", f"shrink {tag}", lambda: check_shrink(rng, k, samples)),
            _timed("phase", f"base contraction {tag}", lambda: check_base_contraction(rng, k, samples)),
            _timed("phase", f"side lipschitz {tag}", lambda: check_side_lipschitz(rng, k, samples)),
            _timed("phase", f"inverse {tag}", lambda: check_inverse(rng, k, samples)),
            _timed("phase", f"tiling {tag}", lambda: check_tiling(k, samples)),
            _timed("phase", f"continuity {tag}", lambda: check_continuity(rng, k, samples)),
        ]
    out.append(_timed("phase", "predicate = oracle", lambda: check_oracle(seed, samples)))
    out.append(_timed("phase", "nested in n", lambda: check_nested(seed)))
    return out


# ---------------------------------------------------------------------------
# noise and shift properties

def check_group_law(seed: int, pairs: int = 1000, tol: float = 1e-15):
    rng = np.random.default_rng(seed)
    worst, ok = 0.0, True
    for _ in range(pairs):
        path = NoisePath.from_seed(int(rng.integers(0, 2**63)))
        a, b = (float(v) for v in rng.uniform(-50.0, 50.0, 2))
        two = shift(shift(path, a), b)
        # the float sum a + b would carry its own rounding error
        one = shift(path, Fraction(a) + Fraction(b))
        gap = abs(two.phase_offset - one.phase_offset)
        # offsets near 1 and 0 describe neighbouring indices
        if gap > 0.5:
            gap = 1.0 - gap
            ok &= abs(two.origin - one.origin) == 1
        else:
            ok &= two.origin == one.origin
        worst = max(worst, gap)
    return ok and worst <= tol, worst, tol, pairs


def check_noise_law(seed: int, samples: int = 1_000_000, bins: int = 12, alpha: float = 1e-3):
    xi = xi_window(NoisePath(seed), 0, samples)
    counts = np.bincount(np.minimum(xi, bins + 1), minlength=bins + 2)[1:]
    probs = np.ldexp(1.0, -np.arange(1, bins + 1))
    expected = samples * np.append(probs, 1.0 - probs.sum())
    p = chisquare(counts, expected).pvalue
    return p >= alpha and xi.max() <= MAX_PHASE, p, alpha, samples


def check_determinism(seed: int, samples: int = 10_000):
    a = xi_window(NoisePath(seed), -samples, samples)
    b = xi_window(NoisePath(seed), -samples, samples)
    c = xi_window(shift(NoisePath(seed), 17.0), -samples - 17, samples - 17)
    return bool(np.array_equal(a, b) and np.array_equal(a, c)), 0.0, 0.0, 2 * samples


def core_suite(seed: int = 0) -> list[PropertyResult]:
    return [
        _timed("core", "shift group law", lambda: check_group_law(seed)),
        _timed("core", "noise chi-square", lambda: check_noise_law(seed)),
        _timed("core", "deterministic noise", lambda: check_determinism(seed)),
    ]


def run_all(samples: int = 10_000, seed: int = 0) -> list[PropertyResult]:
    return phase_suite(samples, seed) + core_suite(seed)
