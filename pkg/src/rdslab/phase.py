"""Phase maps of the random triangle system and the cocycle built from them.

During a phase with value ``k`` (thresholds ``zR = -(k+1)!``, ``zL = zR + 1``)
the map ``f_{0,t}(k, .)`` acts region by region, with ``u`` the polyline
chart (``P_z -> 2z``, apex of ``X_z`` -> ``2z + 1``):

* push, ``u >= 2 zR + 1``: ``u -> u + 2 t k!``;
* shrink, remaining triangle points with ``lam <= 1/2``: ``lam -> 2**-t lam``;
* blend, remaining points with ``lam > 1/2`` off ``X_zR^L``:
  ``lam -> 2**(-t-1) + (2 - 2**-t)(lam - 1/2)``, which fixes the apex;
* stretch, ``X_zR^L`` with ``lam > 1/2``: linear in ``u`` onto
  ``(2 zR + 2**(-t-1), 2 zR + 1 + 2 t k!]``, sweeping the gap left by the push;
* ray: ``y -> 2**-t y``; arc: fixed.

Each piece is an increasing bijection in ``u`` (or ``lam``) and neighbouring
pieces agree on shared points, so ``f_{0,t}`` is a homeomorphism and
``f_{s,t} = f_{0,t} o f_{0,s}^{-1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import IndexOverflow, SetBlowup
from .noise import MAX_PHASE, NoisePath, split_duration, xi_window
from .space import (INT64_SAFE, KIND_RAY, KIND_TRI, SIDE_L, SIDE_R, WIDE_LIMIT, PointCloud,
                    arc_samples, check_wide)

# above this (k+1)! the stretch piece is evaluated in exact rationals
_FLOAT_STRETCH_LIMIT = 1 << 50


@dataclass(frozen=True)
class PushThresholds:
    k: int
    k_fact: int
    zL: int
    zR: int


@lru_cache(maxsize=None)
def thresholds(k: int) -> PushThresholds:
    k = int(k)
    if not 1 <= k <= MAX_PHASE:
        raise ValueError(f"phase value must lie in 1..{MAX_PHASE}, got {k}")
    zR = -math.factorial(k + 1)
    return PushThresholds(k, math.factorial(k), zR + 1, zR)


def _u_shift(t: float, k_fact: int) -> tuple[int, float]:
    """``2 t k!`` split exactly into an integer and a fraction in [0, 1)."""
    exact = Fraction(t) * 2 * k_fact
    whole = math.floor(exact)
    return whole, float(exact - whole)


def _needs_object(z: np.ndarray, delta: int) -> bool:
    if z.dtype == object:
        return False
    if abs(delta) >= INT64_SAFE:
        return True
    if len(z) == 0:
        return False
    return int(z.max()) + delta >= INT64_SAFE or int(z.min()) + delta <= -INT64_SAFE


def _add(z: np.ndarray, delta) -> np.ndarray:
    """``z + delta`` with promotion to Python ints before int64 overflow."""
    if isinstance(delta, np.ndarray):
        if z.dtype != object and delta.dtype != object and len(z) and (
                np.abs(z).max() >= INT64_SAFE // 2 or np.abs(delta).max() >= INT64_SAFE // 2):
            z = z.astype(object)
        out = z.astype(object) + delta.astype(object) if (z.dtype == object or delta.dtype == object) else z + delta
    else:
        if _needs_object(z, delta):
            z = z.astype(object)
        out = z + delta if z.dtype == object else z + np.int64(delta)
    if out.dtype == object and len(out) and max(abs(int(v)) for v in out) >= WIDE_LIMIT:
        raise IndexOverflow("triangle index left the +-2**126 range")
    return out


def _cmp(mask) -> np.ndarray:
    return np.asarray(mask, dtype=bool)


def _assign(full: np.ndarray, mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    if values.dtype == object and full.dtype != object:
        full = full.astype(object)
    full[mask] = values
    return full


def _normalize(z: np.ndarray, w: np.ndarray):
    """Carry the local chart coordinate ``w`` into [0, 2)."""
    carry = np.floor(w / 2.0)
    if np.any(carry != 0):
        w = w - 2.0 * carry
        c = carry.astype(np.int64)
        if z.dtype == object:
            z = z + c.astype(object)
        else:
            z = z + c
    side = np.where(w <= 1.0, SIDE_L, SIDE_R).astype(np.int8)
    lam = np.where(side == SIDE_L, w, 2.0 - w)
    return z, side, np.clip(lam, 0.0, 1.0)


def _shift_u(z: np.ndarray, side: np.ndarray, lam: np.ndarray, whole: int, frac: float):
    z = _add(z, whole // 2)
    if frac == 0.0 and whole % 2 == 0:
        # whole triangles: side and lam are unchanged, keep them exact
        return z, side, lam
    w = np.where(side == SIDE_L, lam, 2.0 - lam)
    return _normalize(z, w + frac + (whole % 2))


def _zw_from_fraction(zR: int, v: Fraction) -> tuple[int, float]:
    half = math.floor(v / 2)
    return check_wide(zR + half), float(v - 2 * half)


def _forward(k: int, t: float, cloud: PointCloud) -> PointCloud:
    if t == 0:
        return cloud
    th = thresholds(k)
    kind, z, side, lam = cloud.kind, cloud.z, cloud.side, cloud.coord
    tri = kind == KIND_TRI
    on_l = side == SIDE_L
    push = tri & ((on_l & _cmp(z >= th.zL)) | (~on_l & _cmp(z >= th.zR)))
    stretch = tri & on_l & _cmp(z == th.zR) & (lam > 0.5)
    rest = tri & ~push & ~stretch
    low = rest & (lam <= 0.5)
    blend = rest & (lam > 0.5)

    new_z = z.copy()
    new_side = side.copy()
    new_c = lam.copy()
    shrink = 2.0**-t
    a = 2.0 ** (-t - 1)
    new_c[low] = lam[low] * shrink
    new_c[blend] = a + (2.0 - shrink) * (lam[blend] - 0.5)
    ray = kind == KIND_RAY
    new_c[ray] = lam[ray] * shrink

    if push.any():
        whole, frac = _u_shift(t, th.k_fact)
        pz, ps, pl = _shift_u(z[push], side[push], lam[push], whole, frac)
        new_z = _assign(new_z, push, pz)
        new_side[push] = ps
        new_c[push] = pl

    if stretch.any():
        two_lam = 2.0 * lam[stretch] - 1.0
        if -th.zR < _FLOAT_STRETCH_LIMIT:
            v = a + two_lam * (1.0 + 2.0 * t * th.k_fact - a)
            sz, ss, sl = _normalize(np.full(len(v), th.zR, dtype=np.int64), v)
            new_z = _assign(new_z, stretch, sz.astype(new_z.dtype) if new_z.dtype == object else sz)
            new_side[stretch] = ss
            new_c[stretch] = sl
        else:
            span = 1 + Fraction(t) * 2 * th.k_fact - Fraction(a)
            zs, ws = [], []
            for f in two_lam:
                zz, ww = _zw_from_fraction(th.zR, Fraction(a) + Fraction(float(f)) * span)
                zs.append(zz)
                ws.append(ww)
            sz, ss, sl = _normalize(np.array(zs, dtype=object), np.array(ws))
            new_z = _assign(new_z, stretch, sz)
            new_side[stretch] = ss
            new_c[stretch] = sl

    return cloud.replace_arrays(z=new_z, side=new_side, coord=new_c)


def _backward(k: int, t: float, cloud: PointCloud) -> PointCloud:
    if t == 0:
        return cloud
    th = thresholds(k)
    kind, z, side, lam = cloud.kind, cloud.z, cloud.side, cloud.coord
    tri = kind == KIND_TRI
    w = np.where(side == SIDE_L, lam, 2.0 - lam)
    whole, frac = _u_shift(t, th.k_fact)
    a = 2.0 ** (-t - 1)

    # chart position relative to 2 zR, split as integer part 2 dz plus w
    dz = _add(z, -th.zR)
    rel = _add(_add(dz, dz), -whole)
    rel_f = rel.astype(np.float64)
    push_img = tri & (rel_f + w >= 1.0 + frac)
    dz_f = dz.astype(np.float64)
    stretch_img = tri & ~push_img & (dz_f >= 0) & ((dz_f > 0) | (w > a))
    rest = tri & ~push_img & ~stretch_img
    low = rest & (lam <= a)
    blend = rest & (lam > a)

    new_z = z.copy()
    new_side = side.copy()
    new_c = lam.copy()
    grow = 2.0**t
    new_c[low] = np.minimum(lam[low] * grow, 0.5)
    new_c[blend] = 0.5 + (lam[blend] - a) / (2.0 - 2.0**-t)
    ray = kind == KIND_RAY
    new_c[ray] = lam[ray] * grow

    if push_img.any():
        bwhole, bfrac = _u_shift(-t, th.k_fact)
        pz, ps, pl = _shift_u(z[push_img], side[push_img], lam[push_img], bwhole, bfrac)
        new_z = _assign(new_z, push_img, pz)
        new_side[push_img] = ps
        new_c[push_img] = pl

    if stretch_img.any():
        if -th.zR < _FLOAT_STRETCH_LIMIT:
            v = 2.0 * dz_f[stretch_img] + w[stretch_img]
            sl = 0.5 + (v - a) / (2.0 * (1.0 + 2.0 * t * th.k_fact - a))
        else:
            span = 2 * (1 + Fraction(t) * 2 * th.k_fact - Fraction(a))
            sl = np.array([float(Fraction(0.5) + (2 * int(d) + Fraction(float(ww)) - Fraction(a)) / span)
                           for d, ww in zip(dz[stretch_img], w[stretch_img])])
        new_z = _assign(new_z, stretch_img, np.full(int(stretch_img.sum()), th.zR,
                                                    dtype=object if new_z.dtype == object else np.int64))
        new_side[stretch_img] = SIDE_L
        new_c[stretch_img] = np.clip(sl, 0.5, 1.0)

    return cloud.replace_arrays(z=new_z, side=new_side, coord=new_c)


def _wrap(p):
    if isinstance(p, PointCloud):
        return p, False
    return PointCloud.from_points([p]), True


def _unwrap(cloud: PointCloud, single: bool):
    return cloud.points()[0] if single else cloud


def _check_time(t: float):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"intra-phase time must lie in [0, 1], got {t}")


def f0t(k: int, t: float, p):
    """``f_{0,t}(k, p)`` for a point or a cloud."""
    _check_time(t)
    cloud, single = _wrap(p)
    return _unwrap(_forward(k, t, cloud), single)


def f01(k: int, p):
    """One full phase with value ``k``."""
    return f0t(k, 1.0, p)


def f0t_inv(k: int, t: float, p):
    """Inverse of ``f_{0,t}(k, .)``."""
    _check_time(t)
    cloud, single = _wrap(p)
    return _unwrap(_backward(k, t, cloud), single)


def fst(k: int, s: float, t: float, p):
    """``f_{s,t} = f_{0,t} o f_{0,s}^{-1}`` for ``0 <= s <= t <= 1``."""
    _check_time(s)
    _check_time(t)
    if s > t:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    if s == t:
        return p
    cloud, single = _wrap(p)
    return _unwrap(_forward(k, t, _backward(k, s, cloud)), single)


def phi(path: NoisePath, duration: float, p):
    """Cocycle ``phi_duration(omega, p)``.

    Starting at position ``s = phase_offset`` of phase 0 the motion finishes
    the phase with ``f_{s,1}(xi_0)``, runs full phases ``f_{0,1}(xi_m)`` and
    ends with ``f_{0,t}(xi_n)`` where ``s + duration = n + t``.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return p
    cloud, single = _wrap(p)
    s = path.phase_offset
    n, t = split_duration(s, duration)
    if n == 0:
        k0 = int(xi_window(path, 0, 1)[0])
        return _unwrap(_forward(k0, t, _backward(k0, s, cloud)), single)
    ks = xi_window(path, 0, n + 1 if t > 0 else n)
    out = _forward(int(ks[0]), 1.0, _backward(int(ks[0]), s, cloud))
    for m in range(1, n):
        out = _forward(int(ks[m]), 1.0, out)
    if t > 0:
        out = _forward(int(ks[n]), t, out)
    return _unwrap(out, single)


# ---------------------------------------------------------------------------
# base points

def base_index_map(k: int, z: int) -> int:
    """Index dynamics of base points: ``z + k!`` if ``z >= zL`` else ``z``."""
    th = thresholds(k)
    return check_wide(z + th.k_fact) if z >= th.zL else z


def image_intervals(window, intervals=None) -> list[tuple]:
    """Image of a set of indices under the base maps of ``window`` (time order).

    Sets are sorted disjoint inclusive intervals whose ends may be +-inf; the
    default input is all of Z.  Each map fixes ``(-inf, zR]`` and shifts
    ``[zL, inf)`` by ``k!``, so one phase adds at most one gap.
    """
    cur = [(-math.inf, math.inf)] if intervals is None else list(intervals)
    for k in window:
        th = thresholds(int(k))
        nxt = []
        for lo, hi in cur:
            if lo <= th.zR:
                nxt.append((lo, min(hi, th.zR)))
            if hi >= th.zL:
                nxt.append((max(lo, th.zL) + th.k_fact, hi + th.k_fact))
        merged = []
        for lo, hi in sorted(nxt, key=lambda iv: iv[0]):
            if merged and lo <= merged[-1][1] + 1:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        cur = merged
    return cur


def p0_in_Fn(window) -> bool:
    """Whether ``P_0`` lies in ``F_n`` for phase values in time order.

    ``P_0`` is missing exactly when some ``k`` occurs at least ``k + 1``
    times inside the longest suffix whose values are all ``<= k``.
    """
    vals = [int(v) for v in window]
    if not vals:
        raise ValueError("window must be non-empty")
    for k in sorted(set(vals)):
        if k + 1 > len(vals):
            break
        count = 0
        for v in reversed(vals):
            if v > k:
                break
            if v == k:
                count += 1
                if count > k:
                    return False
    return True


def p0_in_Fn_batch(windows: np.ndarray) -> np.ndarray:
    """Row-wise :func:`p0_in_Fn` for a 2-D array of windows."""
    windows = np.asarray(windows)
    n_rows, n = windows.shape
    out = np.ones(n_rows, dtype=bool)
    pos = np.arange(n)
    for k in range(1, min(int(windows.max()), n - 1) + 1):
        gt = windows > k
        last_gt = np.where(gt.any(axis=1), n - 1 - np.argmax(gt[:, ::-1], axis=1), -1)
        count = ((windows == k) & (pos[None, :] > last_gt[:, None])).sum(axis=1)
        out &= count <= k
    return out


def p0_in_Fn_oracle(window, cap: int = 10**6) -> bool:
    """Brute force: pull the index 0 back through every phase."""
    vals = [int(v) for v in window]
    if not vals:
        raise ValueError("window must be non-empty")
    if len(vals) > 10**4:
        raise ValueError("oracle window limited to 10**4 phases")
    current = {0}
    for k in reversed(vals):
        th = thresholds(k)
        pre = set()
        for z in current:
            if z - th.k_fact >= th.zL:
                pre.add(z - th.k_fact)
            if z <= th.zR:
                pre.add(z)
        if len(pre) > cap:
            raise SetBlowup(f"preimage set exceeded {cap} elements")
        current = pre
        if not current:
            return False
    return True


def window_base_points(intervals, z_window: int) -> PointCloud:
    """Base points ``P_z`` with ``|z| <= z_window`` and ``z`` in the interval list."""
    zs = []
    for lo, hi in intervals:
        lo_w, hi_w = max(lo, -z_window), min(hi, z_window)
        if lo_w <= hi_w:
            zs.extend(range(int(lo_w), int(hi_w) + 1))
    m = len(zs)
    return PointCloud(np.full(m, KIND_TRI), np.array(zs, dtype=np.int64), np.zeros(m), np.zeros(m))


def discrete_attractor_estimate(path: NoisePath, n: int, z_window: int = 64,
                                arc_resolution: int = 64) -> PointCloud:
    """Arc samples plus the base points of ``F_n`` with ``|z| <= z_window``.

    ``F_n`` is computed exactly from the phases ``xi_-n .. xi_-1`` of ``path``;
    it decreases in ``n`` and contains the discrete attractor's base points.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bases = window_base_points(image_intervals(xi_window(path, -n, 0)), z_window)
    out = PointCloud.concat([bases, arc_samples(arc_resolution)])
    out.label = f"discrete attractor estimate n={n} window={z_window}"
    return out


def continuous_attractor_extension(path: NoisePath, discrete_estimate: PointCloud) -> PointCloud:
    """Carry the phase-boundary estimate to offset ``s`` with ``f_{0,s}(xi_0)``."""
    s = path.phase_offset
    if s == 0:
        return discrete_estimate
    k0 = int(xi_window(path, 0, 1)[0])
    out = _forward(k0, s, discrete_estimate)
    out.label = discrete_estimate.label + f" extended s={s:.6f}"
    return out
