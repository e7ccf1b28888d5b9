"""The state space: a chain of triangles, a left ray and a lower arc.

Points are kept in intrinsic coordinates ``(z, side, lam)``; the plane
embedding is derived.  Triangle ``X_z`` has base ``P_z P_{z+1}`` on the
x-axis, base width ``2**-|z|`` and height ``2**-z``.  The chain accumulates
at ``P_-inf = (-1, 0)`` on the left and ``P_inf = (2, 0)`` on the right, where
it meets the ray ``x = -1, y >= 0`` and the arc
``(x - 0.5)**2 + y**2 = 2.25, y <= 0``.

For large ``z`` all plane coordinates crowd within ``2**-z`` of ``(2, 0)``,
so dynamics act on ``(z, side, lam)`` and only distances use the plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import EmbedOverflow, IndexOverflow

WIDE_LIMIT = 1 << 126
EMBED_LIMIT = 1000
INT64_SAFE = 1 << 62

KIND_TRI, KIND_RAY, KIND_ARC = 0, 1, 2
SIDE_L, SIDE_R = 0, 1
_SIDES = {"L": SIDE_L, "R": SIDE_R}


def check_wide(z: int) -> int:
    if abs(z) >= WIDE_LIMIT:
        raise IndexOverflow(f"triangle index {z} outside +-2**126")
    return z


@dataclass(frozen=True)
class Triangle:
    """Point on side ``side`` of ``X_z`` at height fraction ``lam``.

    Construction canonicalizes: base points become ``(z, 'L', 0)`` and
    apexes ``(z, 'L', 1)``.
    """

    z: int
    side: str
    lam: float

    def __post_init__(self):
        if self.side not in _SIDES:
            raise ValueError(f"side must be 'L' or 'R', got {self.side!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        z = check_wide(int(self.z))
        lam = float(self.lam)
        if self.side == "R" and lam == 0.0:
            z += 1
            object.__setattr__(self, "side", "L")
        elif self.side == "R" and lam == 1.0:
            object.__setattr__(self, "side", "L")
        object.__setattr__(self, "z", check_wide(z))
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class LeftRay:
    """Point ``(-1, y)`` of the left ray; ``y = 0`` is stored as ``Arc(pi)``."""

    y: float

    def __new__(cls, y: float):
        if y == 0.0:
            return Arc(math.pi)
        return super().__new__(cls)

    def __post_init__(self):
        if not self.y >= 0.0:
            raise ValueError(f"y must be >= 0, got {self.y}")


@dataclass(frozen=True)
class Arc:
    """Point ``(0.5 + 1.5 cos a, 1.5 sin a)`` of the lower arc, ``a`` in [pi, 2pi]."""

    alpha: float

    def __post_init__(self):
        if not math.pi <= self.alpha <= 2 * math.pi:
            raise ValueError(f"alpha must lie in [pi, 2pi], got {self.alpha}")


SpacePoint = Triangle | LeftRay | Arc


def left_ray(y: float) -> SpacePoint:
    """Canonical constructor for ray points (``y = 0`` is ``P_-inf``)."""
    return Arc(math.pi) if y == 0.0 else LeftRay(float(y))


def base_point(z: int) -> Triangle:
    return Triangle(z, "L", 0.0)


def s_partial(n: int) -> float:
    """Partial sum ``sum_{i=0}^{n} 2**-i``; the empty sum for ``n = -1``."""
    if n < -1:
        raise ValueError(f"n must be >= -1, got {n}")
    return 0.0 if n == -1 else 2.0 - 2.0**-n


def embed_raw(z: int, side: str, lam: float) -> tuple[float, float]:
    """Plane coordinates straight from the triangle-side formulas.

    Works on non-canonical triples; used to cross-check :func:`embed`.
    """
    if z < -EMBED_LIMIT:
        raise EmbedOverflow(f"height 2**{-z} of triangle {z} overflows")
    offset = lam if side == "L" else 2.0 - lam
    if z >= 0:
        n = z
        x = s_partial(n - 1) + offset * 2.0 ** (-n - 1)
        y = lam * 2.0**-n
    else:
        n = -z
        x = 1.0 - s_partial(n) + offset * 2.0 ** (-n - 1)
        y = lam * 2.0**n
    return x, y


def embed(p: SpacePoint) -> tuple[float, float]:
    """Plane coordinates of a single point."""
    xy = PointCloud.from_points([p]).embed()[0]
    return float(xy[0]), float(xy[1])


def dist(p: SpacePoint, q: SpacePoint) -> float:
    """Euclidean distance of the embeddings."""
    (x1, y1), (x2, y2) = embed(p), embed(q)
    return math.hypot(x1 - x2, y1 - y2)


def polyline_coord(p: Triangle) -> float:
    """Chart of the triangle chain onto the reals: ``P_z -> 2z``, apex -> ``2z + 1``."""
    if not isinstance(p, Triangle):
        raise TypeError("polyline_coord needs a Triangle point")
    return 2 * p.z + (p.lam if p.side == "L" else 2.0 - p.lam)


def from_polyline(u: float) -> Triangle:
    z = math.floor(u / 2)
    w = u - 2 * z
    if w <= 1.0:
        return Triangle(z, "L", w)
    return Triangle(z, "R", 2.0 - w)


def height(p: SpacePoint) -> float:
    if isinstance(p, Triangle):
        return p.lam * math.ldexp(1.0, -max(min(p.z, 1100), -1100))
    if isinstance(p, LeftRay):
        return p.y
    return 0.0


def in_K_r(p: SpacePoint, r: int) -> bool:
    """Whether ``p`` has height at most ``2**r``; arc points always qualify."""
    if isinstance(p, Triangle):
        # lam * 2**-z <= 2**r  <=>  lam <= 2**(r + z)
        return p.lam <= math.ldexp(1.0, max(min(r + p.z, 1100), -1100))
    if isinstance(p, LeftRay):
        return p.y <= math.ldexp(1.0, r)
    return True


def side_length(z) -> np.ndarray:
    """Length of either side of ``X_z`` (vectorized over ``z``)."""
    zc = _clip_exp(z)
    half = np.ldexp(1.0, -np.abs(zc) - 1)
    tall = np.ldexp(1.0, -zc)
    return np.hypot(half, tall)


def _clip_exp(z) -> np.ndarray:
    z = np.asarray(z)
    if z.dtype == object:
        z = np.array([max(min(int(v), 1100), -1100) for v in z.ravel()], dtype=np.int64).reshape(z.shape)
    return np.clip(z.astype(np.int64), -1100, 1100)


def _z_array(values) -> np.ndarray:
    ints = [int(v) for v in values]
    if ints and max(abs(v) for v in ints) >= INT64_SAFE:
        for v in ints:
            check_wide(v)
        return np.array(ints, dtype=object)
    return np.array(ints, dtype=np.int64)


@dataclass
class PointCloud:
    """Finite set of space points stored column-wise.

    ``coord`` holds ``lam`` for triangle points, ``y`` for ray points and
    ``alpha`` for arc points.  ``z`` is int64, promoted to Python ints
    (object dtype) when values approach the int64 range.  ``group`` tags
    points with the index of the source cloud when clouds are merged.
    """

    kind: np.ndarray
    z: np.ndarray
    side: np.ndarray
    coord: np.ndarray
    label: str = ""
    group: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.kind = np.asarray(self.kind, dtype=np.int8)
        if not isinstance(self.z, np.ndarray) or self.z.dtype not in (np.int64, object):
            self.z = _z_array(np.asarray(self.z).ravel())
        self.side = np.asarray(self.side, dtype=np.int8)
        self.coord = np.asarray(self.coord, dtype=np.float64)
        self._canonicalize()

    def _canonicalize(self):
        tri = self.kind == KIND_TRI
        on_r = tri & (self.side == SIDE_R)
        base = on_r & (self.coord == 0.0)
        if base.any():
            self.z = self.z.copy()
            self.z[base] = self.z[base] + 1
        apex = on_r & (self.coord == 1.0)
        flip = base | apex
        if flip.any():
            self.side = self.side.copy()
            self.side[flip] = SIDE_L
        ray0 = (self.kind == KIND_RAY) & (self.coord == 0.0)
        if ray0.any():
            self.kind = self.kind.copy()
            self.coord = self.coord.copy()
            self.kind[ray0] = KIND_ARC
            self.coord[ray0] = math.pi
        notri = ~tri
        if notri.any() and (np.any(self.z[notri] != 0) or np.any(self.side[notri] != 0)):
            self.z = self.z.copy()
            self.side = self.side.copy()
            self.z[notri] = 0
            self.side[notri] = 0

    @classmethod
    def from_points(cls, points, label: str = "") -> "PointCloud":
        kind, z, side, coord = [], [], [], []
        for p in points:
            if isinstance(p, Triangle):
                kind.append(KIND_TRI)
                z.append(p.z)
                side.append(_SIDES[p.side])
                coord.append(p.lam)
            elif isinstance(p, LeftRay):
                kind.append(KIND_RAY)
                z.append(0)
                side.append(0)
                coord.append(p.y)
            elif isinstance(p, Arc):
                kind.append(KIND_ARC)
                z.append(0)
                side.append(0)
                coord.append(p.alpha)
            else:
                raise TypeError(f"not a space point: {p!r}")
        return cls(np.array(kind, dtype=np.int8), _z_array(z), np.array(side, dtype=np.int8),
                   np.array(coord, dtype=np.float64), label)

    @classmethod
    def concat(cls, clouds, label: str = "", tag_groups: bool = False) -> "PointCloud":
        clouds = list(clouds)
        zs = [c.z for c in clouds]
        if any(z.dtype == object for z in zs):
            z = np.concatenate([z.astype(object) for z in zs])
        else:
            z = np.concatenate(zs)
        out = cls(np.concatenate([c.kind for c in clouds]), z,
                  np.concatenate([c.side for c in clouds]),
                  np.concatenate([c.coord for c in clouds]), label)
        if tag_groups:
            out.group = np.concatenate([np.full(len(c), i, dtype=np.int64) for i, c in enumerate(clouds)])
        return out

    def __len__(self) -> int:
        return len(self.kind)

    def replace_arrays(self, kind=None, z=None, side=None, coord=None) -> "PointCloud":
        out = PointCloud(self.kind if kind is None else kind, self.z if z is None else z,
                         self.side if side is None else side, self.coord if coord is None else coord,
                         self.label)
        out.group = self.group
        return out

    def subset(self, mask) -> "PointCloud":
        out = PointCloud(self.kind[mask], self.z[mask], self.side[mask], self.coord[mask], self.label)
        if self.group is not None:
            out.group = self.group[mask]
        return out

    def points(self) -> list[SpacePoint]:
        out: list[SpacePoint] = []
        for kind, z, side, c in zip(self.kind, self.z, self.side, self.coord):
            if kind == KIND_TRI:
                out.append(Triangle(int(z), "L" if side == SIDE_L else "R", float(c)))
            elif kind == KIND_RAY:
                out.append(left_ray(float(c)))
            else:
                out.append(Arc(float(c)))
        return out

    def keys(self) -> list[tuple]:
        return [(int(k), int(z), int(s), float(c)) for k, z, s, c in
                zip(self.kind, self.z, self.side, self.coord)]

    def unique(self) -> "PointCloud":
        """Drop duplicate points, keeping first occurrences in order."""
        seen, keep = set(), []
        for i, key in enumerate(self.keys()):
            if key not in seen:
                seen.add(key)
                keep.append(i)
        return self.subset(np.array(keep, dtype=np.int64))

    def embed(self) -> np.ndarray:
        """``(N, 2)`` array of plane coordinates."""
        n = len(self)
        xy = np.zeros((n, 2))
        tri = self.kind == KIND_TRI
        if tri.any():
            z = self.z[tri]
            if np.any(z < -EMBED_LIMIT):
                raise EmbedOverflow("triangle index below -1000 cannot be embedded")
            zc = _clip_exp(z)
            lam = self.coord[tri]
            off = np.where(self.side[tri] == SIDE_L, lam, 2.0 - lam)
            pos = zc >= 0
            # z >= 0: x = 2 - 2**(1-z) + off 2**(-z-1);  z < 0: x = -1 + 2**z + off 2**(z-1)
            x = np.where(pos, 2.0 - np.ldexp(1.0, 1 - np.maximum(zc, 0)), -1.0 + np.ldexp(1.0, np.minimum(zc, 0)))
            x = x + off * np.ldexp(1.0, -np.abs(zc) - 1)
            xy[tri, 0] = x
            xy[tri, 1] = lam * np.ldexp(1.0, -zc)
        ray = self.kind == KIND_RAY
        xy[ray, 0] = -1.0
        xy[ray, 1] = self.coord[ray]
        arc = self.kind == KIND_ARC
        xy[arc, 0] = 0.5 + 1.5 * np.cos(self.coord[arc])
        xy[arc, 1] = 1.5 * np.sin(self.coord[arc])
        # cos/sin leave ~1e-16 residue at the arc end points
        xy[arc & (self.coord == math.pi)] = (-1.0, 0.0)
        xy[arc & (self.coord == 2 * math.pi)] = (2.0, 0.0)
        return xy

    def heights(self) -> np.ndarray:
        return self.embed()[:, 1]


def arc_samples(resolution: int) -> PointCloud:
    """``resolution + 1`` equally spaced arc points including both ends."""
    alpha = math.pi + math.pi * np.arange(resolution + 1) / resolution
    alpha[-1] = 2 * math.pi
    n = len(alpha)
    return PointCloud(np.full(n, KIND_ARC), np.zeros(n, dtype=np.int64), np.zeros(n), alpha, "arc")


def grid_sample(r: int, resolution: int, z_window: int = 16, arc_resolution: int = 64) -> PointCloud:
    """Deterministic finite stand-in for ``K_r``.

    Each side of ``X_z`` for ``|z| <= z_window`` gets ``lam = j / resolution``
    for ``j = 0 .. resolution``, clipped to height ``<= 2**r``.  The ray gets
    ``y = 2**r j / resolution`` for ``j = 1 .. resolution`` and the arc
    ``arc_resolution + 1`` points.  Duplicates (shared base points and
    apexes) are removed.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    lam = np.arange(resolution + 1) / resolution
    points: list[SpacePoint] = []
    for z in range(-z_window, z_window + 1):
        cap = math.ldexp(1.0, max(min(r + z, 1100), -1100))
        for side in ("L", "R"):
            points.extend(Triangle(z, side, float(v)) for v in lam if v <= cap)
    ray_y = math.ldexp(1.0, r) * np.arange(1, resolution + 1) / resolution
    points.extend(LeftRay(float(y)) for y in ray_y)
    cloud = PointCloud.concat([PointCloud.from_points(points), arc_samples(arc_resolution)])
    out = cloud.unique()
    out.label = f"K_{r} grid res={resolution} window={z_window}"
    return out


def as_coords(cloud) -> np.ndarray:
    """Plane coordinates of anything cloud-like (cloud, point list, array)."""
    if hasattr(cloud, "embed"):
        return cloud.embed()
    arr = np.asarray(cloud, dtype=np.float64)
    if arr.ndim == 1:
        arr = np.column_stack([arr, np.zeros_like(arr)])
    return arr


def pairwise(a, b) -> np.ndarray:
    return cdist(as_coords(a), as_coords(b))


def random_bounded_points(rng: np.random.Generator, n: int, r: int = 2, z_window: int = 16,
                          ray_fraction: float = 0.05, arc_fraction: float = 0.05) -> PointCloud:
    """Random points of ``K_r`` restricted to ``|z| <= z_window``.

    Heights are uniform on each side below the ``2**r`` cap, so every side of
    every window triangle gets samples, including the region boundaries.
    """
    n_ray = int(n * ray_fraction)
    n_arc = int(n * arc_fraction)
    n_tri = n - n_ray - n_arc
    z = rng.integers(-z_window, z_window + 1, n_tri)
    cap = np.minimum(1.0, np.ldexp(1.0, np.clip(r + z, -1100, 1100)))
    lam = rng.random(n_tri) * cap
    tri = PointCloud(np.zeros(n_tri), z, rng.integers(0, 2, n_tri), lam)
    ray = PointCloud(np.full(n_ray, KIND_RAY), np.zeros(n_ray, dtype=np.int64), np.zeros(n_ray),
                     rng.random(n_ray) * 2.0**r)
    arc = PointCloud(np.full(n_arc, KIND_ARC), np.zeros(n_arc, dtype=np.int64), np.zeros(n_arc),
                     math.pi * (1.0 + rng.random(n_arc)))
    return PointCloud.concat([tri, ray, arc], label=f"random K_{r}")
