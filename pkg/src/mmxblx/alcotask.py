"""Alcoholic-vs-control classification task.

A chromosome carries four sub-chromosomes:

====  ==================  ========  ===============================================  ======
task  feature id          ids       attributes                                       length
====  ==================  ========  ===============================================  ======
0     sensor (EEG lead)   1..62     weight real [-4, 4]                              1..5
1     teacher             1..47     none                                             1..2
2     reference pointer   97..250   skip-length int [1, 12]                          1..2
3     qualification id    1..255    cutoff real [0.1, 20], order int [1, 15],        1..2
                                    amplitude real [0, 1]
====  ==================  ========  ===============================================  ======

Tasks 1-3 are linked: slot ``k`` of each describes the ``k``-th detector.
Sensors and weights build a composite signal per subject; each detector reads
its supports off a teacher's composite, scans every training subject, and the
penalty is one minus the AUC separating alcoholic from control scores.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    INTEGER,
    REAL,
    AttributeSchema,
    Chromosome,
    Feature,
    SubChromosome,
    TaskSpec,
    ValidationError,
    validate_chromosome,
)
from .tpd import ToleranceSpec, scan_phi

N_LEADS = 62
N_SAMPLES = 256
LABELS = ("alcoholic", "control")
N_PHI_BITS = 8

SENSORS, TEACHERS, REFERENCES, QUALIFICATIONS = range(4)
LINKED_GROUPS = ((TEACHERS, REFERENCES, QUALIFICATIONS),)


@dataclass(eq=False)
class SubjectRecord:
    subject_id: str
    label: str
    signals: np.ndarray

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"subject {self.subject_id}: label must be one of {LABELS}, got {self.label!r}")
        self.signals = np.asarray(self.signals, dtype=float)
        if self.signals.shape != (N_LEADS, N_SAMPLES):
            raise ValidationError(
                f"subject {self.subject_id}: signal matrix is {self.signals.shape}, expected {(N_LEADS, N_SAMPLES)}"
            )

    def __eq__(self, other):
        if not isinstance(other, SubjectRecord):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.label == other.label
            and np.array_equal(self.signals, other.signals)
        )

    @property
    def is_alcoholic(self) -> bool:
        return self.label == "alcoholic"


def encoding_specs(n_teachers: int = 47, sensor_subset_max: int = 5, tpd_subset_max: int = 2) -> list[TaskSpec]:
    return [
        TaskSpec(1, N_LEADS, 1, sensor_subset_max, AttributeSchema.of((REAL, -4.0, 4.0)), "sensors"),
        TaskSpec(1, n_teachers, 1, tpd_subset_max, AttributeSchema(), "teachers"),
        TaskSpec(97, 250, 1, tpd_subset_max, AttributeSchema.of((INTEGER, 1, 12)), "reference_pointers"),
        TaskSpec(
            1,
            2**N_PHI_BITS - 1,
            1,
            tpd_subset_max,
            AttributeSchema.of((REAL, 0.1, 20.0), (INTEGER, 1, 15), (REAL, 0.0, 1.0)),
            "qualifications",
        ),
    ]


def composite_signal(subject: SubjectRecord, sensors: SubChromosome) -> np.ndarray:
    """Weighted sum of the selected leads (lead ids are 1-based)."""
    out = np.zeros(N_SAMPLES)
    for f in sensors.features:
        out = out + f.attributes[0] * subject.signals[f.id - 1]
    return out


def decode_qualification(q: int) -> tuple[int, ...]:
    """Multipliers ``j`` whose bit is set in ``q``; bit 1 is the least significant."""
    if not 1 <= q < 2**N_PHI_BITS:
        raise ValueError(f"qualification id {q} outside 1..{2**N_PHI_BITS - 1}")
    return tuple(j for j in range(1, N_PHI_BITS + 1) if q >> (j - 1) & 1)


def build_tpd(
    teacher: Sequence[float],
    rp: int,
    skip: int,
    phis: Sequence[int],
    cutoff: float,
    order: int,
    amplitude: float,
) -> ToleranceSpec:
    """Detector whose supports are the teacher's differences ``f(rp) - f(rp - phi*skip)``."""
    teacher = np.asarray(teacher, dtype=float)
    gammas = tuple(int(p) * int(skip) for p in phis)
    head = teacher[rp - 1]
    supports = tuple(float(head - teacher[rp - 1 - g]) for g in gammas)
    return ToleranceSpec(gammas, supports, amplitude=amplitude, cutoff=cutoff, order=order)


def auc(pos: Sequence[float], neg: Sequence[float]) -> float:
    """Mann-Whitney AUC: share of (pos, neg) pairs with pos > neg, ties counting half."""
    pos = np.asarray(pos, dtype=float)
    neg = np.sort(np.asarray(neg, dtype=float))
    if pos.size == 0 or neg.size == 0:
        raise ValueError("auc needs non-empty positive and negative samples")
    below = np.searchsorted(neg, pos, side="left")
    at_or_below = np.searchsorted(neg, pos, side="right")
    # Twice the U statistic, kept integral so the result is exact.
    twice_u = int(2 * below.sum() + (at_or_below - below).sum())
    return twice_u / (2 * pos.size * neg.size)


class PenaltyEvaluator:
    """Scores chromosomes against a fixed subject set.

    ``teachers`` are the alcoholic training subjects; teacher id ``t`` refers
    to ``teachers[t - 1]``. The evaluator is read-only after construction and
    can be shared between threads.
    """

    def __init__(self, subjects: Sequence[SubjectRecord], teachers: Sequence[SubjectRecord], specs=None):
        if not subjects or not teachers:
            raise ValueError("need at least one subject and one teacher")
        self.specs = specs if specs is not None else encoding_specs(n_teachers=len(teachers))
        if self.specs[TEACHERS].feature_max > len(teachers):
            raise ValueError(
                f"teacher ids run to {self.specs[TEACHERS].feature_max} but only {len(teachers)} teachers given"
            )
        # Leads first so selecting sensors is one contiguous gather.
        self._signals = np.stack([s.signals for s in subjects], axis=1)
        self._teachers = np.stack([t.signals for t in teachers], axis=1)
        self._alcoholic = np.array([s.is_alcoholic for s in subjects])
        if self._alcoholic.all() or not self._alcoholic.any():
            raise ValueError("subjects must include both alcoholics and controls")

    def check(self, chrom: Chromosome) -> None:
        report = validate_chromosome(chrom, self.specs, LINKED_GROUPS)
        if not report.ok:
            raise ValidationError("; ".join(report.violations))

    def detectors(self, chrom: Chromosome) -> list[ToleranceSpec]:
        leads = [f.id - 1 for f in chrom[SENSORS].features]
        weights = np.array([f.attributes[0] for f in chrom[SENSORS].features])
        out = []
        for teacher, ref, qual in zip(chrom[TEACHERS].features, chrom[REFERENCES].features, chrom[QUALIFICATIONS].features):
            signal = weights @ self._teachers[leads, teacher.id - 1, :]
            cutoff, order, amplitude = qual.attributes
            out.append(build_tpd(signal, ref.id, ref.attributes[0], decode_qualification(qual.id), cutoff, order, amplitude))
        return out

    def scores(self, chrom: Chromosome) -> np.ndarray:
        """Summed scan score of every detector, one value per subject."""
        self.check(chrom)
        leads = [f.id - 1 for f in chrom[SENSORS].features]
        weights = np.array([f.attributes[0] for f in chrom[SENSORS].features])
        composites = np.tensordot(weights, self._signals[leads], axes=1)
        total = np.zeros(composites.shape[0])
        for tpd in self.detectors(chrom):
            total = total + scan_phi(composites, tpd)
        return total

    def __call__(self, chrom: Chromosome) -> float:
        phi = self.scores(chrom)
        return 1.0 - auc(phi[self._alcoholic], phi[~self._alcoholic])


def evaluate(chrom: Chromosome, train: Sequence[SubjectRecord], teachers: Sequence[SubjectRecord], specs=None) -> float:
    return PenaltyEvaluator(train, teachers, specs)(chrom)


def teachers_of(records: Sequence[SubjectRecord]) -> list[SubjectRecord]:
    return [r for r in records if r.is_alcoholic]


_TASK_LINE = {
    SENSORS: ("sensor", ("weight",)),
    TEACHERS: ("teacher", ()),
    REFERENCES: ("reference", ("skip",)),
    QUALIFICATIONS: ("qualification", ("cutoff", "order", "amplitude")),
}


def format_chromosome(chrom: Chromosome, penalty: float | None = None) -> str:
    """Plain-text dump, one feature per line, floats at full precision."""
    lines = []
    if penalty is not None:
        lines.append(f"training_penalty = {penalty!r}")
    for task, (name, keys) in _TASK_LINE.items():
        for f in chrom[task].features:
            attrs = " ".join(f"{k}={v!r}" for k, v in zip(keys, f.attributes))
            extra = ""
            if task == QUALIFICATIONS:
                extra = " phis=" + ",".join(map(str, decode_qualification(f.id)))
            lines.append(f"{name} id={f.id} {attrs}{extra}".rstrip())
    return "\n".join(lines) + "\n"


_FIELD = re.compile(r"(\w+)=(\S+)")


def parse_chromosome(text: str, specs: Sequence[TaskSpec] | None = None) -> tuple[Chromosome, float | None]:
    specs = specs or encoding_specs()
    by_name = {name: (task, keys) for task, (name, keys) in _TASK_LINE.items()}
    features: dict[int, list[Feature]] = {t: [] for t in _TASK_LINE}
    penalty = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("training_penalty"):
            penalty = float(line.split("=", 1)[1])
            continue
        kind = line.split()[0]
        if kind not in by_name:
            raise ValidationError(f"line {lineno}: unknown record {kind!r}")
        task, keys = by_name[kind]
        fields = dict(_FIELD.findall(line))
        try:
            fid = int(fields["id"])
            values = [fields[k] for k in keys]
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"line {lineno}: malformed {kind} record ({exc})") from None
        schema = specs[task].schema
        try:
            attrs = tuple(int(v) if d == INTEGER else float(v) for v, d in zip(values, schema.datatypes))
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        features[task].append(Feature(fid, attrs))
    chrom = Chromosome(tuple(SubChromosome(t, tuple(features[t])) for t in sorted(features)))
    report = validate_chromosome(chrom, specs, LINKED_GROUPS)
    if not report.ok:
        raise ValidationError("invalid chromosome: " + "; ".join(report.violations))
    return chrom, penalty
