"""Attraction experiments on finite point clouds.

Compact sets are finite grids, so set containment becomes a semi-distance
test and connectedness becomes connectivity of the graph joining points
closer than ``epsilon``.  Monte Carlo estimates carry a 3-sigma normal
half-width and are reproducible from their seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import SearchExhausted
from .noise import derive_seed, xi_matrix
from .phase import p0_in_Fn_batch
from .space import PointCloud, as_coords

MAX_CLOUD = 20_000
_CHUNK = 512


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    half_width: float
    replicas: int

    @classmethod
    def from_successes(cls, successes, replicas: int | None = None) -> "EstimateWithCI":
        successes = np.asarray(successes, dtype=np.float64)
        n = len(successes) if replicas is None else replicas
        p = float(successes.mean()) if n else 0.0
        return cls(p, 3.0 * math.sqrt(p * (1.0 - p) / n) if n else 0.0, n)

    @property
    def lower(self) -> float:
        return self.mean - self.half_width

    @property
    def upper(self) -> float:
        return self.mean + self.half_width


@dataclass(frozen=True)
class ConnectivityReport:
    epsilon_values: list[float]
    component_counts: list[int]
    labels: list[np.ndarray] = field(repr=False)


@dataclass(frozen=True)
class PlanEntry:
    n: int
    r: int
    K: object = field(repr=False)
    t_n: float
    success_rate: float
    radius: float


@dataclass(frozen=True)
class AbsorptionPlan:
    entries: list[PlanEntry]
    target: list[float]


@dataclass(frozen=True)
class OrbitStep:
    time: float
    cloud: object = field(repr=False)
    semidist: float


@dataclass(frozen=True)
class UniformAttractionReport:
    passed: bool
    common_time: float | None
    per_cloud_time: list[float | None]
    checkpoints: list[float]
    distances: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# distances and connectivity

def _min_dist_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(len(a))
    for i in range(0, len(a), _CHUNK):
        out[i:i + _CHUNK] = cdist(a[i:i + _CHUNK], b).min(axis=1)
    return out


def hausdorff_semidist(A, B) -> float:
    """``sup_{a in A} inf_{b in B} d(a, b)``; not symmetric."""
    a, b = as_coords(A), as_coords(B)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both clouds must be non-empty")
    return float(_min_dist_rows(a, b).max())


def _find_roots(parent: np.ndarray) -> np.ndarray:
    while True:
        grand = parent[parent]
        if np.array_equal(grand, parent):
            return parent
        parent = grand


def _union_edges(parent: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Hook roots of every edge onto the smaller root until all agree."""
    while len(i):
        parent = _find_roots(parent)
        ri, rj = parent[i], parent[j]
        differ = ri != rj
        if not differ.any():
            break
        ri, rj = ri[differ], rj[differ]
        i, j = i[differ], j[differ]
        np.minimum.at(parent, np.maximum(ri, rj), np.minimum(ri, rj))
    return _find_roots(parent)


def epsilon_components(cloud, epsilon: float) -> tuple[int, np.ndarray]:
    """Components of the graph joining points at distance ``< epsilon``.

    Labels are numbered by first appearance.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = as_coords(cloud)
    n = len(pts)
    if n == 0:
        raise ValueError("cloud must be non-empty")
    if n > MAX_CLOUD:
        raise ValueError(f"cloud of {n} points exceeds the {MAX_CLOUD} cap")
    parent = np.arange(n)
    for lo in range(0, n, _CHUNK):
        d = cdist(pts[lo:lo + _CHUNK], pts[lo:])
        ii, jj = np.nonzero(d < epsilon)
        ii = ii + lo
        jj = jj + lo
        keep = jj > ii
        parent = _union_edges(parent, ii[keep], jj[keep])
    _, labels = np.unique(parent, return_inverse=True)
    # renumber by first appearance
    order = {}
    first = np.array([order.setdefault(int(v), len(order)) for v in labels])
    return len(order), first


def connectivity_report(cloud, epsilons) -> ConnectivityReport:
    eps = [float(e) for e in epsilons]
    if any(e <= 0 for e in eps) or eps != sorted(eps):
        raise ValueError("epsilons must be positive and ascending")
    counts, labels = [], []
    for e in eps:
        c, lab = epsilon_components(cloud, e)
        counts.append(c)
        labels.append(lab)
    return ConnectivityReport(eps, counts, labels)


# ---------------------------------------------------------------------------
# orbits

def pullback_orbit(system, path, K, horizon: float, checkpoints, target=None) -> list[OrbitStep]:
    """Pullback images ``phi_t(theta_-t w, K)`` and their distance to ``A(w)``."""
    cps = [float(c) for c in checkpoints]
    if any(c < 0 or c > horizon for c in cps):
        raise ValueError("checkpoints must lie in [0, horizon]")
    A = system.attractor(path) if target is None else target
    a = as_coords(A)
    out = []
    for c in cps:
        img = system.pullback(path, c, K)
        out.append(OrbitStep(c, img, float(_min_dist_rows(as_coords(img), a).max())))
    return out


def _group_semidists(img_xy: np.ndarray, groups: np.ndarray, n_groups: int, a: np.ndarray) -> np.ndarray:
    d = _min_dist_rows(img_xy, a)
    out = np.zeros(n_groups)
    np.maximum.at(out, groups, d)
    return out


def _merge(family):
    if all(isinstance(c, PointCloud) for c in family):
        merged = PointCloud.concat(family, tag_groups=True)
        return merged, merged.group
    # interval clouds and the like: merge their coordinates
    from .doublewell import IntervalCloud

    xs = np.concatenate([c.x for c in family])
    groups = np.concatenate([np.full(len(c), i) for i, c in enumerate(family)])
    return IntervalCloud(xs), groups


def _default_checkpoints(system, horizon: float, count: int = 40) -> np.ndarray:
    """About ``count`` evenly spaced times; whole phases for discrete systems."""
    if getattr(system, "discrete", False):
        step = max(1, int(horizon) // count)
        return np.arange(0, int(horizon) + 1, step, dtype=np.float64)
    return np.linspace(0.0, horizon, count + 1)


def geometric_checkpoints(horizon: float, per_octave: int = 2) -> np.ndarray:
    """0, 1 and then ``per_octave`` whole times per doubling, ending at ``horizon``.

    Sparse late checkpoints keep the cost of from-scratch pullbacks close to
    linear in the horizon.
    """
    h = int(horizon)
    if h < 1:
        return np.array([0.0])
    octaves = math.log2(h)
    pts = np.round(np.exp2(np.linspace(0.0, octaves, max(2, int(math.ceil(octaves * per_octave)) + 1))))
    return np.unique(np.concatenate([[0.0], pts, [float(h)]]))


def uniform_attraction_check(system, path, compact_family, horizon: float, tol: float,
                             checkpoints=None, target=None) -> UniformAttractionReport:
    """Look for one time after which every cloud stays within ``tol`` of ``A(w)``.

    The family is evolved jointly, so every cloud sees the same ``w``.
    """
    family = list(compact_family)
    if not family:
        raise ValueError("family must be non-empty")
    if checkpoints is None:
        checkpoints = _default_checkpoints(system, horizon)
    cps = [float(c) for c in checkpoints]
    A = system.attractor(path) if target is None else target
    a = as_coords(A)
    merged, groups = _merge(family)
    dists = np.array([_group_semidists(as_coords(system.pullback(path, c, merged)), groups, len(family), a)
                      for c in cps])
    ok = dists <= tol
    # suffix_ok[i, g]: cloud g stays within tol from checkpoint i onwards
    suffix_ok = np.flip(np.logical_and.accumulate(np.flip(ok, axis=0), axis=0), axis=0)

    def first_time(col):
        idx = np.nonzero(col)[0]
        return cps[int(idx[0])] if len(idx) else None

    per_cloud = [first_time(suffix_ok[:, g]) for g in range(len(family))]
    common = first_time(suffix_ok.all(axis=1))
    return UniformAttractionReport(common is not None, common, per_cloud, cps, dists)


# ---------------------------------------------------------------------------
# Monte Carlo estimators

def membership_probability(n: int, replicas: int, seed: int, chunk: int = 20_000) -> EstimateWithCI:
    """Frequency of ``P_0 in F_n`` over independent noise windows.

    Replica ``i`` uses the path seeded by ``derive_seed(seed, i)``, so runs
    with different ``n`` share their windows' most recent phases.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if replicas < 100:
        raise ValueError("need at least 100 replicas")
    hits = 0
    for lo in range(0, replicas, chunk):
        seeds = derive_seed(seed, np.arange(lo, min(lo + chunk, replicas), dtype=np.int64))
        hits += int(p0_in_Fn_batch(xi_matrix(seeds, -n, 0)).sum())
    p = hits / replicas
    return EstimateWithCI(p, 3.0 * math.sqrt(p * (1.0 - p) / replicas), replicas)


def _replica_paths(system, seed: int, replicas: int):
    return [system.sample_path(derive_seed(seed, i)) for i in range(replicas)]


def weak_attraction_probability(system, r: int, horizon: float, radius: float, replicas: int,
                                seed: int, resolution: int = 4) -> EstimateWithCI:
    """Fraction of ``w`` whose evolved ``K_r`` grid is within ``radius`` of ``A(w)``."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    K = system.bounded_set(r, resolution)
    hits = []
    for path in _replica_paths(system, seed, replicas):
        img = system.pullback(path, horizon, K)
        hits.append(hausdorff_semidist(img, system.attractor(path)) <= radius)
    return EstimateWithCI.from_successes(hits)


def _absorption_table(system, K, paths, checkpoints):
    """Per replica and checkpoint: (image -> A, A -> image) semi-distances."""
    evolve = getattr(system, "pullback_bounded", system.pullback)
    fwd = np.empty((len(paths), len(checkpoints)))
    cov = np.empty_like(fwd)
    for i, path in enumerate(paths):
        a = as_coords(system.attractor(path))
        for j, c in enumerate(checkpoints):
            img = as_coords(evolve(path, c, K))
            fwd[i, j] = _min_dist_rows(img, a).max()
            cov[i, j] = _min_dist_rows(a, img).max()
    return fwd, cov


def absorption_search(system, delta: float, r_max: int, horizon: float, replicas: int,
                      seed: int = 0, n_max: int = 2, resolution: int = 4,
                      checkpoints=None) -> AbsorptionPlan:
    """Find ``(K_n, t_n)`` for ``n = 1 .. n_max``.

    Success for one ``w``: ``A(w)`` lies within ``1/n`` of the image of
    ``K_n`` at ``t_n`` and the images stay within ``1/n`` of ``A(w)`` at every
    checkpoint from ``t_n`` on.  The target frequency is ``1 - delta / 2**n``;
    ``r`` and then ``t_n`` are searched in increasing order.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if checkpoints is None:
        checkpoints = geometric_checkpoints(horizon)
    cps = [float(c) for c in checkpoints]
    paths = _replica_paths(system, seed, replicas)
    tables = {}
    entries, targets = [], []
    for n in range(1, n_max + 1):
        target = 1.0 - delta / 2**n
        radius = 1.0 / n
        targets.append(target)
        found = None
        for r in range(0, r_max + 1):
            if r not in tables:
                K = system.bounded_set(r, resolution, getattr(system, "z_window", None))
                tables[r] = (K, *_absorption_table(system, K, paths, cps))
            K, fwd, cov = tables[r]
            stays = np.flip(np.logical_and.accumulate(np.flip(fwd <= radius, axis=1), axis=1), axis=1)
            success = stays & (cov <= radius)
            rates = success.mean(axis=0)
            good = np.nonzero(rates >= target)[0]
            if len(good):
                j = int(good[0])
                found = PlanEntry(n, r, K, cps[j], float(rates[j]), radius)
                break
        if found is None:
            raise SearchExhausted(f"no (r <= {r_max}, t <= {horizon}) reaches frequency {target:.4f} for n={n}")
        entries.append(found)
    return AbsorptionPlan(entries, targets)
