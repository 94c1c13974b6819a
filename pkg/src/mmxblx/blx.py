"""BLX-a blend crossover over numeric vectors, with bound clamping and integer rounding."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import INTEGER, AttributeSchema, RandomSource


@dataclass(frozen=True)
class BlendBounds:
    vmax: tuple[float, ...]
    vmin: tuple[float, ...]
    datatypes: tuple[str, ...]

    def __post_init__(self):
        if not len(self.vmax) == len(self.vmin) == len(self.datatypes):
            raise ValueError("bound vectors differ in length")
        if any(hi < lo for hi, lo in zip(self.vmax, self.vmin)):
            raise ValueError("vmax must be >= vmin element-wise")

    @classmethod
    @lru_cache(maxsize=None)
    def from_schema(cls, schema: AttributeSchema) -> BlendBounds:
        return cls(schema.max_values, schema.min_values, schema.datatypes)

    @classmethod
    def real(cls, upper: float, lower: float) -> BlendBounds:
        return cls((upper,), (lower,), ("real",))


def round_half_away(x):
    """Round to the nearest integer, ties away from zero (2.5 -> 3, -2.5 -> -3)."""
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


# Below this many elements a plain loop beats numpy's per-call overhead.
_SMALL_BATCH = 64


def _per_column(x, k: int) -> list:
    return np.asarray(x).tolist() if np.ndim(x) else [x] * k


def _blx_rows_small(v1, v2, upper, lower, integer_mask, a, rng: RandomSource) -> np.ndarray:
    k = v1.shape[-1] if v1.ndim else 1
    hi, lo, ints = _per_column(upper, k), _per_column(lower, k), _per_column(integer_mask, k)
    out = [
        _blend_one(x1, x2, hi[j % k], lo[j % k], ints[j % k], a, rng)
        for j, (x1, x2) in enumerate(zip(v1.ravel().tolist(), v2.ravel().tolist()))
    ]
    return np.array(out, dtype=float).reshape(v1.shape)


def blx_rows(v1, v2, upper, lower, integer_mask, a: float, rng: RandomSource) -> np.ndarray:
    """Vectorised BLX over rows of ``v1``/``v2`` (shape ``(n, k)`` or ``(k,)``).

    One uniform draw is consumed per element whatever the inputs, so the
    stream position after the call depends only on the shape.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    if v1.size <= _SMALL_BATCH:
        return _blx_rows_small(v1, v2, upper, lower, integer_mask, a, rng)
    lo = np.minimum(v1, v2, dtype=float)
    hi = np.maximum(v1, v2, dtype=float)
    spread = (hi - lo) * a
    r1 = lo - spread
    val = r1 + (hi + spread - r1) * rng.random(lo.shape)
    np.minimum(val, upper, out=val)
    np.maximum(val, lower, out=val)
    integer_mask = np.asarray(integer_mask, dtype=bool)
    if integer_mask.ndim:
        if integer_mask.any():
            val[..., integer_mask] = round_half_away(val[..., integer_mask])
    elif integer_mask:
        val = round_half_away(val)
    return val


def _blend_one(x1, x2, upper, lower, integer, a, rng: RandomSource):
    lo, hi = (x1, x2) if x1 <= x2 else (x2, x1)
    spread = (hi - lo) * a
    r1, r2 = lo - spread, hi + spread
    val = r1 + (r2 - r1) * rng.random()
    if val > upper:
        val = upper
    if val < lower:
        val = lower
    if integer:
        return int(math.copysign(math.floor(abs(val) + 0.5), val))
    return val


def blx(
    v1: Sequence[float], v2: Sequence[float], bounds: BlendBounds, a: float, rng: RandomSource
) -> list:
    """Blend two parent vectors into one child vector.

    Each child element is drawn uniformly from the parental interval widened
    by ``a`` times its width on both sides, then clamped into
    ``[vmin, vmax]``. Integer elements are rounded half away from zero after
    clamping and returned as ``int``.

    Draws match :func:`blx_rows` element for element given the same source.
    """
    n = len(bounds.vmax)
    if len(v1) != n or len(v2) != n:
        raise ValueError(f"length mismatch: {len(v1)}, {len(v2)} vs bounds {n}")
    if n == 0:
        raise ValueError("blx needs vectors of length >= 1")
    if a < 0:
        raise ValueError(f"blend extension a must be >= 0, got {a}")
    return [
        _blend_one(float(x1), float(x2), hi, lo, kind == INTEGER, a, rng)
        for x1, x2, hi, lo, kind in zip(v1, v2, bounds.vmax, bounds.vmin, bounds.datatypes)
    ]


def blend_scalar(w1: float, w2: float, upper: float, lower: float, a: float, rng: RandomSource) -> float:
    if upper < lower:
        raise ValueError(f"upper {upper} < lower {lower}")
    if a < 0:
        raise ValueError(f"blend extension a must be >= 0, got {a}")
    return _blend_one(float(w1), float(w2), upper, lower, False, a, rng)
