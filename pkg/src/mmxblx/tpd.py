"""Temporal pattern detector with a smooth tolerance window.

A detector holds a set of lags and, per lag, a desired amplitude difference
(the support). At a head position ``x`` it rates how close each
``f(x) - f(x - lag)`` is to its support with a Butterworth-shaped bump and
multiplies the ratings; the scan score sums that product over every head
position where all lags fit inside the signal.

Positions follow 1-based semantics: ``x_head`` ranges over
``max(lags) + 1 .. len(f)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ToleranceSpec:
    gammas: tuple[int, ...]
    supports: tuple[float, ...]
    amplitude: float = 1.0
    cutoff: float = 1.0
    order: int = 1

    def __post_init__(self):
        if len(self.gammas) < 1:
            raise ValueError("a detector needs at least one lag")
        if len(set(self.gammas)) != len(self.gammas) or min(self.gammas) < 1:
            raise ValueError(f"lags must be distinct integers >= 1, got {self.gammas}")
        if len(self.supports) != len(self.gammas):
            raise ValueError("one support per lag is required")
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be an integer >= 1, got {self.order}")

    @property
    def max_lag(self) -> int:
        return max(self.gammas)


def int_power(x, n: int):
    """``x ** n`` for integer ``n >= 1`` by repeated squaring."""
    result = None
    base = x
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


def psi(diff, support: float, spec: ToleranceSpec):
    ratio = (np.asarray(diff, dtype=float) - support) / spec.cutoff
    with np.errstate(over="ignore"):
        out = spec.amplitude / (1.0 + int_power(ratio, 2 * int(spec.order)))
    return float(out) if np.ndim(out) == 0 else out


def big_psi(f: Sequence[float], x_head: int, spec: ToleranceSpec) -> float:
    f = np.asarray(f, dtype=float)
    if not spec.max_lag < x_head <= len(f):
        raise ValueError(f"x_head {x_head} outside ({spec.max_lag}, {len(f)}]")
    head = f[x_head - 1]
    out = 1.0
    for lag, support in zip(spec.gammas, spec.supports):
        out *= psi(head - f[x_head - 1 - lag], support, spec)
    return out


def scan_phi(f, spec: ToleranceSpec):
    """Sum of ``big_psi`` over all valid head positions.

    ``f`` may be 2-D, one signal per row; the result then has one score per row.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    m = spec.max_lag
    if n <= m:
        raise ValueError(f"signal of length {n} is too short for lag {m}")
    heads = f[..., m:]
    prod = None
    with np.errstate(over="ignore"):
        for lag, support in zip(spec.gammas, spec.supports):
            ratio = (heads - f[..., m - lag : n - lag] - support) / spec.cutoff
            term = spec.amplitude / (1.0 + int_power(ratio, 2 * int(spec.order)))
            prod = term if prod is None else prod * term
    out = prod.sum(axis=-1)
    return float(out) if out.ndim == 0 else out
