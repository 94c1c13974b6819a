"""Trial preprocessing, synthetic datasets and the plain-text subject file format.

Subject file::

    subject <id> <label>
    <256 reals for lead 1>
    ...
    <256 reals for lead 62>

Trial files share the body with a ``trial <subject_id> <trial_index>``
header. A manifest lists one file path per line, relative to the manifest.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .alcotask import LABELS, N_LEADS, N_SAMPLES, SubjectRecord
from .core import RandomSource, ValidationError

ARTIFACT_UV = 100.0
MIN_TRIALS = 40
N_AVERAGE = 36


class FormatError(ValidationError):
    pass


@dataclass(eq=False)
class Trial:
    subject_id: str
    trial_index: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (N_LEADS, N_SAMPLES):
            raise ValidationError(
                f"trial {self.subject_id}/{self.trial_index}: shape {self.matrix.shape}, expected {(N_LEADS, N_SAMPLES)}"
            )


def reject_artifacts(trials: Iterable[Trial], threshold: float = ARTIFACT_UV) -> list[Trial]:
    """Drop trials where any lead exceeds ``threshold`` microvolts in magnitude.

    A sample exactly at the threshold is kept.
    """
    return [t for t in trials if np.abs(t.matrix).max() <= threshold]


def build_subject(
    trials: Sequence[Trial],
    label: str,
    rng: RandomSource,
    n_average: int = N_AVERAGE,
    min_trials: int = MIN_TRIALS,
) -> tuple[SubjectRecord, SubjectRecord] | None:
    """Average two independent random draws of ``n_average`` trials.

    Returns ``None`` for subjects with fewer than ``min_trials`` usable trials.
    The train and test draws may share trials.
    """
    if len(trials) < min_trials:
        return None
    sid = trials[0].subject_id
    stack = np.stack([t.matrix for t in trials])
    out = []
    for _ in range(2):
        picks = rng.sample(range(len(trials)), n_average)
        out.append(SubjectRecord(sid, label, stack[sorted(picks)].mean(axis=0)))
    return out[0], out[1]


@dataclass
class SyntheticConfig:
    """Planted-pattern dataset.

    ``pattern`` is a list of ``(offset, step)``: the planted waveform is
    piecewise constant and rises by ``step`` at ``insertion_position + offset``
    (1-based), staying there to the end of the trace. Each planted lead gets
    the waveform times ``weight / sum(weight**2)``, so the composite built
    with the planted weights carries the waveform at unit gain.
    """

    n_alcoholic: int = 47
    n_control: int = 31
    planted_leads: list[tuple[int, float]] = field(default_factory=lambda: [(12, 1.0), (30, -0.8), (47, 0.6)])
    pattern: list[tuple[int, float]] = field(default_factory=lambda: [(0, 6.0), (8, -4.0)])
    noise_sd: float = 2.0
    insertion_position: int = 150
    seed: int = 0

    def __post_init__(self):
        for lead, _ in self.planted_leads:
            if not 1 <= lead <= N_LEADS:
                raise ValidationError(f"planted lead {lead} outside 1..{N_LEADS}")
        if len({lead for lead, _ in self.planted_leads}) != len(self.planted_leads):
            raise ValidationError("planted leads must be distinct")
        if not self.pattern:
            raise ValidationError("pattern needs at least one step")
        max_lag = max(off for off, _ in self.pattern)
        if min(off for off, _ in self.pattern) < 0:
            raise ValidationError("pattern offsets must be >= 0")
        if self.insertion_position < 1 or self.insertion_position + max_lag > N_SAMPLES:
            raise ValidationError(
                f"insertion_position {self.insertion_position} + max lag {max_lag} exceeds {N_SAMPLES} samples"
            )
        if self.noise_sd < 0:
            raise ValidationError("noise_sd must be >= 0")
        if sum(w * w for _, w in self.planted_leads) == 0:
            raise ValidationError("planted weights must not all be zero")

    def waveform(self) -> np.ndarray:
        wave = np.zeros(N_SAMPLES)
        for offset, step in self.pattern:
            wave[self.insertion_position - 1 + offset :] += step
        return wave


def _subjects(cfg: SyntheticConfig, rng: RandomSource) -> list[SubjectRecord]:
    plant = np.zeros((N_LEADS, N_SAMPLES))
    norm = sum(w * w for _, w in cfg.planted_leads)
    wave = cfg.waveform()
    for lead, weight in cfg.planted_leads:
        plant[lead - 1] = wave * (weight / norm)
    records = []
    for label, count in (("alcoholic", cfg.n_alcoholic), ("control", cfg.n_control)):
        for k in range(count):
            noise = rng.normal(cfg.noise_sd, (N_LEADS, N_SAMPLES))
            signals = noise + plant if label == "alcoholic" else noise
            records.append(SubjectRecord(f"{label[0]}{k + 1:03d}", label, signals))
    return records


def generate_synthetic(cfg: SyntheticConfig) -> tuple[list[SubjectRecord], list[SubjectRecord]]:
    """Train and test sets with the same plant and independent noise. Alcoholics come first."""
    root = RandomSource(cfg.seed)
    return _subjects(cfg, root.derive(0)), _subjects(cfg, root.derive(1))


def _format_matrix(matrix: np.ndarray) -> list[str]:
    return [" ".join(map(repr, row)) for row in matrix.tolist()]


def _parse_matrix(lines: list[str], start: int, what: str) -> np.ndarray:
    if len(lines) != N_LEADS:
        raise FormatError(f"{what}: expected {N_LEADS} rows, found {len(lines)}")
    rows = []
    for k, line in enumerate(lines):
        tokens = line.split()
        if len(tokens) != N_SAMPLES:
            raise FormatError(f"{what}: line {start + k}: expected {N_SAMPLES} values, found {len(tokens)}")
        try:
            rows.append([float(t) for t in tokens])
        except ValueError as exc:
            raise FormatError(f"{what}: line {start + k}: {exc}") from None
    return np.array(rows)


def _read_body(path: Path) -> tuple[list[str], list[str]]:
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty file")
    return lines[0].split(), lines[1:]


def write_subject(path: Path, record: SubjectRecord) -> None:
    text = "\n".join([f"subject {record.subject_id} {record.label}", *_format_matrix(record.signals)])
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_subject(path: Path) -> SubjectRecord:
    path = Path(path)
    header, body = _read_body(path)
    if len(header) != 3 or header[0] != "subject":
        raise FormatError(f"{path}: line 1: expected 'subject <id> <label>'")
    sid, label = header[1], header[2]
    if label not in LABELS:
        raise FormatError(f"{path}: line 1: label must be one of {LABELS}, got {label!r}")
    return SubjectRecord(sid, label, _parse_matrix(body, 2, f"{path} (subject {sid})"))


def write_trial(path: Path, trial: Trial) -> None:
    text = "\n".join([f"trial {trial.subject_id} {trial.trial_index}", *_format_matrix(trial.matrix)])
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_trial(path: Path) -> Trial:
    path = Path(path)
    header, body = _read_body(path)
    if len(header) != 3 or header[0] != "trial":
        raise FormatError(f"{path}: line 1: expected 'trial <subject_id> <trial_index>'")
    try:
        index = int(header[2])
    except ValueError:
        raise FormatError(f"{path}: line 1: trial index {header[2]!r} is not an integer") from None
    return Trial(header[1], index, _parse_matrix(body, 2, f"{path} (trial {header[1]}/{index})"))


def read_manifest(path: Path) -> list[Path]:
    path = Path(path)
    entries = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    return [path.parent / e for e in entries if e and not e.startswith("#")]


def save_dataset(manifest: Path, records: Sequence[SubjectRecord], subdir: str | None = None) -> None:
    """Write one file per subject next to ``manifest`` (or in ``subdir``) and the manifest itself."""
    manifest = Path(manifest)
    folder = manifest.parent / subdir if subdir else manifest.parent
    folder.mkdir(parents=True, exist_ok=True)
    names = []
    for r in records:
        target = folder / f"{r.subject_id}.txt"
        write_subject(target, r)
        names.append(target.relative_to(manifest.parent).as_posix())
    manifest.write_text("\n".join(names) + "\n", encoding="utf-8")


def load_dataset(manifest: Path) -> list[SubjectRecord]:
    return [read_subject(p) for p in read_manifest(manifest)]
