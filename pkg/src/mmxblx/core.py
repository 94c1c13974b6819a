"""Domain types shared across the package and the seeded random source."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, MutableSequence, Sequence

import numpy as np

INTEGER = "integer"
REAL = "real"
Datatype = Literal["integer", "real"]

# Task indices are 0-based throughout the package.
LinkedGroups = Sequence[Sequence[int]]


class ValidationError(ValueError):
    """Raised when a value breaks a domain invariant."""


@dataclass(frozen=True)
class AttributeSchema:
    max_values: tuple[float, ...] = ()
    min_values: tuple[float, ...] = ()
    datatypes: tuple[Datatype, ...] = ()

    def __post_init__(self):
        n = len(self.max_values)
        if len(self.min_values) != n or len(self.datatypes) != n:
            raise ValidationError("attribute schema lists differ in length")
        for k, (hi, lo, kind) in enumerate(zip(self.max_values, self.min_values, self.datatypes)):
            if kind not in (INTEGER, REAL):
                raise ValidationError(f"attribute {k}: unknown datatype {kind!r}")
            if hi < lo:
                raise ValidationError(f"attribute {k}: max {hi} < min {lo}")

    @classmethod
    def of(cls, *elements: tuple[Datatype, float, float]) -> AttributeSchema:
        """Build from ``(datatype, min, max)`` triples."""
        return cls(
            max_values=tuple(e[2] for e in elements),
            min_values=tuple(e[1] for e in elements),
            datatypes=tuple(e[0] for e in elements),
        )

    @property
    def length(self) -> int:
        return len(self.max_values)

    @cached_property
    def upper(self) -> np.ndarray:
        return np.asarray(self.max_values, dtype=float)

    @cached_property
    def lower(self) -> np.ndarray:
        return np.asarray(self.min_values, dtype=float)

    @cached_property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @cached_property
    def integer_mask(self) -> np.ndarray:
        return np.asarray([d == INTEGER for d in self.datatypes], dtype=bool)

    @cached_property
    def has_integer(self) -> bool:
        return bool(self.integer_mask.any())

    def conforms(self, attributes: Sequence[float]) -> bool:
        if len(attributes) != self.length:
            return False
        for value, hi, lo, kind in zip(attributes, self.max_values, self.min_values, self.datatypes):
            if not lo <= value <= hi:
                return False
            if kind == INTEGER and not isinstance(value, (int, np.integer)):
                return False
        return True

    def coerce(self, row: Iterable[float]) -> tuple:
        """Turn a numeric row into an attribute tuple, integer elements as ``int``."""
        return tuple(
            int(v) if kind == INTEGER else float(v) for v, kind in zip(row, self.datatypes)
        )


@dataclass(frozen=True)
class TaskSpec:
    feature_min: int
    feature_max: int
    subset_min: int
    subset_max: int
    schema: AttributeSchema = AttributeSchema()
    name: str = ""

    def __post_init__(self):
        n_features = self.feature_max - self.feature_min + 1
        if not n_features > self.subset_max >= self.subset_min > 0:
            raise ValidationError(
                f"task {self.name or '?'}: need (feature range {n_features}) > "
                f"subset_max {self.subset_max} >= subset_min {self.subset_min} > 0"
            )

    @property
    def n_features(self) -> int:
        return self.feature_max - self.feature_min + 1

    @cached_property
    def universe(self) -> np.ndarray:
        return np.arange(self.feature_min, self.feature_max + 1)


@dataclass(frozen=True)
class CrossoverParams:
    """Operator knobs. Defaults are the values used in the published experiments.

    ``delta_selects`` picks how ``delta`` is read in every two-bag choice:
    ``"first_bag"`` makes it the probability of the first-listed bag (unique in
    exploit, common/unique in explore), ``"absent_bag"`` the probability of the
    bag of absents.
    """

    alpha: float = 1.0
    beta: float = 1.4
    delta: float = 0.85
    gamma: float = 0.75
    mode: Literal["exploit", "explore"] = "explore"
    delta_selects: Literal["first_bag", "absent_bag"] = "first_bag"

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValidationError("alpha, beta and gamma must be non-negative")
        if not 0.0 <= self.delta <= 1.0:
            raise ValidationError(f"delta must lie in [0, 1], got {self.delta}")
        if self.mode not in ("exploit", "explore"):
            raise ValidationError(f"unknown crossover mode {self.mode!r}")
        if self.delta_selects not in ("first_bag", "absent_bag"):
            raise ValidationError(f"unknown delta_selects {self.delta_selects!r}")

    @property
    def p_first_bag(self) -> float:
        return self.delta if self.delta_selects == "first_bag" else 1.0 - self.delta


@dataclass(frozen=True)
class Feature:
    id: int
    attributes: tuple = ()


@dataclass(frozen=True)
class SubChromosome:
    task_index: int
    features: tuple[Feature, ...]

    def __len__(self) -> int:
        return len(self.features)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(f.id for f in self.features)


@dataclass
class Chromosome:
    """Ordered sub-chromosomes, one per task.

    The contents are immutable; ``penalty`` is a cache filled in by fitness
    evaluation and ignored by equality.
    """

    subs: tuple[SubChromosome, ...]
    penalty: float | None = field(default=None, compare=False)

    def __post_init__(self):
        self.subs = tuple(self.subs)
        for i, sub in enumerate(self.subs):
            if sub.task_index != i:
                raise ValidationError(f"sub-chromosome at position {i} has task_index {sub.task_index}")

    def __len__(self) -> int:
        return len(self.subs)

    def __getitem__(self, i: int) -> SubChromosome:
        return self.subs[i]

    def lengths(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.subs)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_chromosome(
    c: Chromosome, specs: Sequence[TaskSpec], groups: LinkedGroups = ()
) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    if len(c.subs) != len(specs):
        bad.append(f"expected {len(specs)} sub-chromosomes, found {len(c.subs)}")
        return report
    for i, (sub, spec) in enumerate(zip(c.subs, specs)):
        if sub.task_index != i:
            bad.append(f"task {i}: task_index is {sub.task_index}")
        if not spec.subset_min <= len(sub) <= spec.subset_max:
            bad.append(f"task {i}: length {len(sub)} outside [{spec.subset_min}, {spec.subset_max}]")
        ids = sub.ids
        if len(set(ids)) != len(ids):
            bad.append(f"task {i}: duplicate id")
        for f in sub.features:
            if not spec.feature_min <= f.id <= spec.feature_max:
                bad.append(f"task {i}: feature id {f.id} out of range")
            if not spec.schema.conforms(f.attributes):
                bad.append(f"task {i}: feature {f.id} attributes {f.attributes} violate schema")
    for group in groups:
        lengths = [len(c.subs[i]) for i in group]
        if len(set(lengths)) > 1:
            bad.append(f"linked lengths unequal in group {tuple(group)}: {lengths}")
    return report


class RandomSource:
    """Seeded stream of draws, reproducible across runs and platforms.

    Backed by numpy's PCG64 seeded through ``SeedSequence``; ``derive`` gives
    an independent child stream keyed by integers, so parallel schedules can
    own one stream each.
    """

    def __init__(self, seed: int, *key: int):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, key={self.key})"

    def derive(self, *key: int) -> RandomSource:
        return RandomSource(self.seed, *self.key, *key)

    def random(self, size=None):
        """Uniform on [0, 1)."""
        return self._gen.random(size)

    def uniform(self, a, b, size=None):
        """Uniform on [a, b]; array bounds broadcast and draw one value per element."""
        if size is None:
            size = np.broadcast_shapes(np.shape(a), np.shape(b)) or None
        return a + (np.subtract(b, a)) * self._gen.random(size)

    def normal(self, sd: float = 1.0, size=None):
        return sd * self._gen.standard_normal(size)

    def integer(self, a: int, b: int) -> int:
        """Uniform on {a, ..., b}."""
        return int(self._gen.integers(a, b, endpoint=True))

    def bernoulli(self, p: float) -> bool:
        return bool(self._gen.random() < p)

    def shuffle(self, items: MutableSequence) -> None:
        self._gen.shuffle(items)

    def sample(self, population: Sequence, k: int) -> list:
        """``k`` distinct elements, uniformly without replacement."""
        idx = self._gen.choice(len(population), size=k, replace=False)
        return [population[i] for i in idx]
