"""MMX-BLX crossover for chromosomes made of several variable-length subsets.

For every task the two parents' features are split into three bags (common,
unique, absent), each bag's attribute vectors are modified, and the child's
sub-chromosome is filled from the bags by one of two inheritance rules:

* ``exploit`` empties the common bag first, then fills from unique/absent;
* ``explore`` lets every slot choose between common and absent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .blx import BlendBounds, blend_scalar, blx, blx_rows, round_half_away
from .core import (
    AttributeSchema,
    Chromosome,
    CrossoverParams,
    Feature,
    LinkedGroups,
    RandomSource,
    SubChromosome,
    TaskSpec,
    ValidationError,
)


@dataclass
class Bag:
    """Feature ids with one attribute row each; rows line up with ``ids``."""

    ids: np.ndarray
    attrs: np.ndarray
    schema: AttributeSchema

    def __len__(self) -> int:
        return len(self.ids)

    def feature(self, k: int) -> Feature:
        return Feature(int(self.ids[k]), self.schema.coerce(self.attrs[k].tolist()))

    def features(self) -> list[Feature]:
        return [self.feature(k) for k in range(len(self.ids))]


@dataclass
class FeatureBags:
    common: Bag
    unique: Bag
    absent: Bag


@dataclass
class DrawTally:
    from_common: int = 0
    from_unique: int = 0
    from_absent: int = 0

    @property
    def total(self) -> int:
        return self.from_common + self.from_unique + self.from_absent

    def __add__(self, other: DrawTally) -> DrawTally:
        return DrawTally(
            self.from_common + other.from_common,
            self.from_unique + other.from_unique,
            self.from_absent + other.from_absent,
        )


@dataclass
class RawPartition:
    common_ids: np.ndarray
    common_attrs1: np.ndarray
    common_attrs2: np.ndarray
    unique_ids: np.ndarray
    unique_attrs: np.ndarray
    absent_ids: np.ndarray


def offspring_length(len1: int, len2: int, spec: TaskSpec, alpha: float, rng: RandomSource) -> int:
    lo = min(len1 - alpha, len2 - alpha)
    hi = max(len1 + alpha, len2 + alpha)
    raw = blend_scalar(lo, hi, spec.subset_max, spec.subset_min, 0.0, rng)
    rounded = int(math.copysign(math.floor(abs(raw) + 0.5), raw))
    return min(max(rounded, spec.subset_min), spec.subset_max)


def _attr_matrix(rows: list, width: int) -> np.ndarray:
    return np.asarray(rows, dtype=float).reshape(len(rows), width)


def partition(p1: SubChromosome, p2: SubChromosome, spec: TaskSpec) -> RawPartition:
    """Split the task's id universe by membership in the two parents.

    Parents are only read. Ids come out in ascending order.
    """
    a1 = {f.id: f.attributes for f in p1.features}
    a2 = {f.id: f.attributes for f in p2.features}
    width = spec.schema.length
    common = sorted(a1.keys() & a2.keys())
    unique = sorted(a1.keys() ^ a2.keys())
    present = np.zeros(spec.n_features, dtype=bool)
    present[[i - spec.feature_min for i in (*a1, *a2)]] = True
    return RawPartition(
        common_ids=np.asarray(common, dtype=int),
        common_attrs1=_attr_matrix([a1[i] for i in common], width),
        common_attrs2=_attr_matrix([a2[i] for i in common], width),
        unique_ids=np.asarray(unique, dtype=int),
        unique_attrs=_attr_matrix([a1[i] if i in a1 else a2[i] for i in unique], width),
        absent_ids=spec.universe[~present],
    )


def _blend_common_rows(att1, att2, schema: AttributeSchema, beta: float, rng: RandomSource):
    return blx_rows(att1, att2, schema.upper, schema.lower, schema.integer_mask, beta, rng)


def _perturb_unique_rows(att, schema: AttributeSchema, gamma: float, rng: RandomSource):
    half = schema.span * gamma / 2.0
    return blx_rows(att + half, att - half, schema.upper, schema.lower, schema.integer_mask, 0.0, rng)


def sample_absent_rows(n: int, schema: AttributeSchema, rng: RandomSource):
    """Uniform draws over the schema box, one row per feature (BLX with a=0 between the bounds)."""
    if not schema.length:
        return np.empty((n, 0))
    val = schema.lower + schema.span * rng.random((n, schema.length))
    np.minimum(val, schema.upper, out=val)
    np.maximum(val, schema.lower, out=val)
    if schema.has_integer:
        val[:, schema.integer_mask] = round_half_away(val[:, schema.integer_mask])
    return val


# Single-vector forms of the three bag modifications. ``build_bags`` uses the
# row-batched versions above, which consume the same draws in the same order.


def blend_common(att1, att2, schema: AttributeSchema, beta: float, rng: RandomSource) -> tuple:
    return tuple(blx(att1, att2, BlendBounds.from_schema(schema), beta, rng))


def perturb_unique(att, schema: AttributeSchema, gamma: float, rng: RandomSource) -> tuple:
    """Redraw each element uniformly within +/- gamma/2 of the schema range around it."""
    upper = [v + (hi - lo) * gamma / 2 for v, hi, lo in zip(att, schema.max_values, schema.min_values)]
    lower = [v - (hi - lo) * gamma / 2 for v, hi, lo in zip(att, schema.max_values, schema.min_values)]
    return tuple(blx(upper, lower, BlendBounds.from_schema(schema), 0.0, rng))


def sample_absent(schema: AttributeSchema, rng: RandomSource) -> tuple:
    return tuple(blx(schema.max_values, schema.min_values, BlendBounds.from_schema(schema), 0.0, rng))


def build_bags(
    p1: SubChromosome, p2: SubChromosome, spec: TaskSpec, params: CrossoverParams, rng: RandomSource
) -> FeatureBags:
    raw = partition(p1, p2, spec)
    schema = spec.schema
    if schema.length:
        common = _blend_common_rows(raw.common_attrs1, raw.common_attrs2, schema, params.beta, rng)
        unique = _perturb_unique_rows(raw.unique_attrs, schema, params.gamma, rng)
        absent = sample_absent_rows(len(raw.absent_ids), schema, rng)
    else:
        common, unique = raw.common_attrs1, raw.unique_attrs
        absent = np.empty((len(raw.absent_ids), 0))
    return FeatureBags(
        common=Bag(raw.common_ids, common, schema),
        unique=Bag(raw.unique_ids, unique, schema),
        absent=Bag(raw.absent_ids, absent, schema),
    )


class _Pool:
    """Remaining row indices of one bag, drawn uniformly without replacement."""

    def __init__(self, bag: Bag):
        self.bag = bag
        self.left = len(bag)
        # Sparse Fisher-Yates: only positions that have been swapped are stored.
        self._moved: dict[int, int] = {}

    def __bool__(self) -> bool:
        return self.left > 0

    def draw(self, rng: RandomSource) -> Feature:
        k = rng.integer(0, self.left - 1)
        last = self.left - 1
        picked = self._moved.get(k, k)
        self._moved[k] = self._moved.get(last, last)
        self.left = last
        return self.bag.feature(picked)


def _check_target(bags: FeatureBags, target_len: int) -> None:
    available = len(bags.common) + len(bags.unique) + len(bags.absent)
    if target_len > available:
        raise ValueError(f"target length {target_len} exceeds the {available} features in the bags")


def _either(first: _Pool, second: _Pool, p_first: float, rng: RandomSource) -> bool:
    """True to draw from ``first``. Falls back to whichever pool is non-empty."""
    if not second:
        return True
    if not first:
        return False
    return rng.bernoulli(p_first)


def inherit_exploit(
    bags: FeatureBags,
    target_len: int,
    delta: float,
    rng: RandomSource,
    delta_selects: str = "first_bag",
) -> tuple[list[Feature], DrawTally]:
    _check_target(bags, target_len)
    p_unique = delta if delta_selects == "first_bag" else 1.0 - delta
    common, unique, absent = _Pool(bags.common), _Pool(bags.unique), _Pool(bags.absent)
    out: list[Feature] = []
    tally = DrawTally()
    while common and len(out) < target_len:
        out.append(common.draw(rng))
        tally.from_common += 1
    while len(out) < target_len:
        if _either(unique, absent, p_unique, rng):
            out.append(unique.draw(rng))
            tally.from_unique += 1
        else:
            out.append(absent.draw(rng))
            tally.from_absent += 1
    return out, tally


def inherit_explore(
    bags: FeatureBags,
    target_len: int,
    delta: float,
    rng: RandomSource,
    delta_selects: str = "first_bag",
) -> tuple[list[Feature], DrawTally]:
    _check_target(bags, target_len)
    p_first = delta if delta_selects == "first_bag" else 1.0 - delta
    common, unique, absent = _Pool(bags.common), _Pool(bags.unique), _Pool(bags.absent)
    out: list[Feature] = []
    tally = DrawTally()
    while len(out) < target_len:
        if common and absent:
            src = common if rng.bernoulli(p_first) else absent
        elif absent:
            src = unique if _either(unique, absent, p_first, rng) else absent
        elif common:
            src = common
        else:
            src = unique
        out.append(src.draw(rng))
        if src is common:
            tally.from_common += 1
        elif src is unique:
            tally.from_unique += 1
        else:
            tally.from_absent += 1
    return out, tally


INHERIT = {"exploit": inherit_exploit, "explore": inherit_explore}


def linked_leaders(groups: LinkedGroups, n_tasks: int) -> list[int]:
    """Map each task to the lowest task index of its linked group."""
    leader = list(range(n_tasks))
    for group in groups:
        head = min(group)
        for i in group:
            leader[i] = head
    return leader


def crossover_chromosome(
    p1: Chromosome,
    p2: Chromosome,
    specs: Sequence[TaskSpec],
    params: CrossoverParams,
    groups: LinkedGroups,
    rng: RandomSource,
) -> tuple[Chromosome, list[DrawTally]]:
    """Produce one child. Call twice with independent sources for two children."""
    n = len(specs)
    if len(p1.subs) != n or len(p2.subs) != n:
        raise ValidationError(f"parents must have {n} sub-chromosomes")
    for group in groups:
        for parent in (p1, p2):
            if len({len(parent.subs[i]) for i in group}) > 1:
                raise ValidationError(f"parent lengths differ inside linked group {tuple(group)}")
    leader = linked_leaders(groups, n)
    inherit = INHERIT[params.mode]
    lengths: dict[int, int] = {}
    subs = []
    tallies = []
    for i, spec in enumerate(specs):
        a, b = p1.subs[i], p2.subs[i]
        for parent in (a, b):
            if not spec.subset_min <= len(parent) <= spec.subset_max:
                raise ValidationError(f"task {i}: parent length {len(parent)} out of bounds")
        head = leader[i]
        if head not in lengths:
            lengths[head] = offspring_length(
                len(p1.subs[head]), len(p2.subs[head]), specs[head], params.alpha, rng
            )
        bags = build_bags(a, b, spec, params, rng)
        features, tally = inherit(bags, lengths[head], params.delta, rng, params.delta_selects)
        subs.append(SubChromosome(i, tuple(features)))
        tallies.append(tally)
    return Chromosome(tuple(subs)), tallies
