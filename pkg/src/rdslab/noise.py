"""Counter-based noise for the random phase system.

A noise path is ``omega = (s, (xi_m))``: an intra-phase offset ``s`` in
[0, 1) and a bi-infinite i.i.d. sequence with ``P(xi = k) = 2**-k``.  The
values are a stateless function of ``(seed, index)``, so shifting a path is
pure re-indexing and negative indices are as cheap as positive ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import TailOverflow

MASK64 = (1 << 64) - 1
MAX_PHASE = 33

# stream tags keep the phase values, offsets and derived seeds independent
_STREAM_XI = 0x243F6A8885A308D3
_STREAM_OFFSET = 0x13198A2E03707344
_STREAM_SEED = 0xA4093822299F31D0
_GOLDEN = 0x9E3779B97F4A7C15

# times closer than this to an integer are treated as that integer
TIME_SNAP = 1e-12


def _mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * np.uint64(0xBF58476D1CE4E5B9)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def _as_u64(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object:
        arr = np.array([int(v) & MASK64 for v in arr.ravel()], dtype=np.uint64).reshape(arr.shape)
    elif arr.dtype != np.uint64:
        arr = arr.astype(np.int64).view(np.uint64) if arr.dtype.kind == "i" else arr.astype(np.uint64)
    return arr


def prf_bits(seed, stream: int, index) -> np.ndarray:
    """64 pseudo-random bits for every broadcast pair of ``seed`` and ``index``.

    ``index`` may be negative; it is reinterpreted as two's complement.
    """
    s = _as_u64(seed)
    i = _as_u64(index)
    with np.errstate(over="ignore"):
        key = _mix64(s ^ np.uint64(stream))
        h = _mix64(key + _mix64(i + np.uint64(_GOLDEN)))
        return _mix64(h ^ key)


def bits_to_phase(bits: np.ndarray) -> np.ndarray:
    """Map raw bits to phase values ``k`` with ``P(k) = 2**-k``.

    With ``U = v / 2**53`` for ``v`` in [1, 2**53] the rule is
    ``k = j  iff  U in (2**-j, 2**(1-j)]``, i.e. ``k = 54 - bit_length(v - 1)``.
    """
    w = (bits >> np.uint64(11)).astype(np.float64)  # v - 1, exact below 2**53
    _, exp = np.frexp(w)
    k = 54 - exp.astype(np.int64)
    if np.any(k > MAX_PHASE):
        raise TailOverflow(f"phase draw beyond k = {MAX_PHASE} (probability 2**-33 event)")
    return k


def derive_seed(seed: int, index) -> np.ndarray | int:
    """Per-replica seed from a master seed; scalar in, scalar out."""
    out = prf_bits(seed, _STREAM_SEED, index)
    if np.ndim(index) == 0:
        return int(out.reshape(-1)[0])
    return out


def _split_time(value: Fraction) -> tuple[int, float]:
    """Exact floor/frac split with snapping of near-integer fractions."""
    whole = math.floor(value)
    frac = float(value - whole)
    if frac >= 1.0 - TIME_SNAP:
        return whole + 1, 0.0
    if frac < TIME_SNAP:
        return whole, 0.0
    return whole, frac


@dataclass(frozen=True)
class NoisePath:
    """One realisation ``omega``.

    ``origin`` records accumulated whole-phase shifts, so the phase value at
    index ``m`` of this path is the stream value at ``origin + m``.
    """

    seed: int
    phase_offset: float = 0.0
    origin: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0.0 <= self.phase_offset < 1.0:
            raise ValueError(f"phase_offset must lie in [0, 1), got {self.phase_offset}")

    @classmethod
    def from_seed(cls, seed: int) -> "NoisePath":
        """Offset and sequence drawn independently from one seed."""
        bits = int(prf_bits(seed, _STREAM_OFFSET, 0).reshape(-1)[0])
        return cls(int(seed), (bits >> 11) * 2.0**-53, 0)

    def at_boundary(self) -> "NoisePath":
        """Same sequence, offset reset to the start of phase 0."""
        return replace(self, phase_offset=0.0)


def xi_at(path: NoisePath, m: int) -> int:
    """Phase value ``xi_m`` of ``path``."""
    return int(xi_window(path, m, m + 1)[0])


def xi_window(path: NoisePath, start: int, stop: int) -> np.ndarray:
    """Phase values for indices ``start .. stop - 1`` as an int64 array."""
    idx = np.arange(start, stop, dtype=np.int64) + np.int64(path.origin)
    return bits_to_phase(prf_bits(path.seed, _STREAM_XI, idx))


def xi_matrix(seeds: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Phase values for many seeds at once; rows follow ``seeds``."""
    idx = np.arange(start, stop, dtype=np.int64)
    return bits_to_phase(prf_bits(np.asarray(seeds, dtype=np.uint64)[:, None], _STREAM_XI, idx[None, :]))


def shift(path: NoisePath, h: float) -> NoisePath:
    """The canonical shift ``theta_h``.

    ``theta_h (s, xi) = (frac(s + h), xi[. + floor(s + h)])``, computed in
    exact rational arithmetic.
    """
    if h == 0:
        return path
    whole, frac = _split_time(Fraction(path.phase_offset) + Fraction(h))
    return NoisePath(path.seed, frac, path.origin + whole)


def split_duration(offset: float, duration: float) -> tuple[int, float]:
    """Phase count and final intra-phase time reached from ``offset``."""
    return _split_time(Fraction(offset) + Fraction(duration))
