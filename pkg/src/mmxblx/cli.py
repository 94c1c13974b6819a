"""Command line front end: ``synth``, ``preprocess``, ``evolve``, ``evaluate``."""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import alcotask, data
from .core import CrossoverParams, RandomSource, ValidationError
from .evolution import GaConfig, GenerationStats, run

log = logging.getLogger("mmxblx")

CONFIG_HELP = """\
configuration file (INI style, `key = value` under [section] headers;
relative paths resolve against the config file's directory)

[run]         seed (0), population_size (50), generations (5000),
              mode (explore | exploit), threads (1), out (output directory)
[crossover]   alpha (1.0), beta (1.4), delta (0.85), gamma (0.75),
              delta_selects (first_bag | absent_bag)
[encoding]    n_teachers (number of alcoholic training subjects),
              sensor_subset_max (5), tpd_subset_max (2)
[data]        train_manifest, test_manifest
[synthetic]   all required: n_alcoholic, n_control, noise_sd,
              insertion_position, seed, out_dir,
              planted_leads (e.g. `12:1.0, 30:-0.8`),
              pattern (`offset:step` pairs, e.g. `0:6.0, 8:-4.0`)
[preprocess]  trial_manifest, labels (lines of `<subject_id> <label>`),
              out_dir, seed; optional n_average (36), min_trials (40)
"""


class ConfigError(Exception):
    pass


class Config:
    """Thin wrapper over ``configparser`` that names missing keys in its errors."""

    def __init__(self, path: Path | None):
        self.path = Path(path) if path else None
        self.base = self.path.parent if self.path else Path.cwd()
        self._cp = configparser.ConfigParser(interpolation=None)
        if self.path is not None:
            if not self.path.is_file():
                raise ConfigError(f"config file {self.path} not found")
            self._cp.read(self.path, encoding="utf-8")

    def get(self, section: str, key: str, default=None, required: bool = False) -> str | None:
        if self._cp.has_option(section, key):
            return self._cp.get(section, key).strip()
        if required:
            raise ConfigError(f"missing config key [{section}] {key}")
        return default

    def typed(self, section: str, key: str, kind, default=None, required: bool = False):
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        try:
            return kind(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {kind.__name__}") from None

    def path_of(self, section: str, key: str, default=None, required: bool = False) -> Path | None:
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        p = Path(raw)
        return p if p.is_absolute() else self.base / p


def _pairs(text: str, key: str, left=int, right=float) -> list[tuple]:
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            a, b = item.split(":")
            out.append((left(a), right(b)))
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {item!r}, expected `a:b`") from None
    return out


@dataclass
class RunConfig:
    ga: GaConfig
    threads: int = 1
    out: Path = Path("run")
    train_manifest: Path | None = None
    test_manifest: Path | None = None
    encoding: dict = field(default_factory=dict)


def load_run_config(cfg: Config, args) -> RunConfig:
    params = CrossoverParams(
        alpha=cfg.typed("crossover", "alpha", float, 1.0),
        beta=cfg.typed("crossover", "beta", float, 1.4),
        delta=cfg.typed("crossover", "delta", float, 0.85),
        gamma=cfg.typed("crossover", "gamma", float, 0.75),
        mode=cfg.get("run", "mode", "explore"),
        delta_selects=cfg.get("crossover", "delta_selects", "first_bag"),
    )
    ga = GaConfig(
        population_size=cfg.typed("run", "population_size", int, 50),
        generations=cfg.typed("run", "generations", int, 5000),
        crossover=params,
        seed=cfg.typed("run", "seed", int, 0),
    )
    if getattr(args, "seed", None) is not None:
        ga = replace(ga, seed=args.seed)
    threads = cfg.typed("run", "threads", int, 1)
    if getattr(args, "threads", None) is not None:
        threads = args.threads
    out = Path(args.out) if getattr(args, "out", None) else cfg.path_of("run", "out", Path("run"))
    encoding = {
        k: cfg.typed("encoding", k, int)
        for k in ("n_teachers", "sensor_subset_max", "tpd_subset_max")
        if cfg.get("encoding", k) is not None
    }
    return RunConfig(
        ga=ga,
        threads=max(1, threads),
        out=out,
        train_manifest=cfg.path_of("data", "train_manifest"),
        test_manifest=cfg.path_of("data", "test_manifest"),
        encoding=encoding,
    )


def _specs_for(rc: RunConfig, teachers):
    enc = dict(rc.encoding)
    enc.setdefault("n_teachers", len(teachers))
    if enc["n_teachers"] > len(teachers):
        raise ConfigError(f"n_teachers = {enc['n_teachers']} but the training set has {len(teachers)} alcoholics")
    return alcotask.encoding_specs(**enc)


def _load_train(rc: RunConfig):
    if rc.train_manifest is None:
        raise ConfigError("missing config key [data] train_manifest")
    train = data.load_dataset(rc.train_manifest)
    return train, alcotask.teachers_of(train)


def cmd_synth(args) -> int:
    cfg = Config(args.config)
    section = "synthetic"
    syn = data.SyntheticConfig(
        n_alcoholic=cfg.typed(section, "n_alcoholic", int, required=True),
        n_control=cfg.typed(section, "n_control", int, required=True),
        planted_leads=_pairs(cfg.get(section, "planted_leads", required=True), "planted_leads"),
        pattern=_pairs(cfg.get(section, "pattern", required=True), "pattern"),
        noise_sd=cfg.typed(section, "noise_sd", float, required=True),
        insertion_position=cfg.typed(section, "insertion_position", int, required=True),
        seed=args.seed if args.seed is not None else cfg.typed(section, "seed", int, required=True),
    )
    out_dir = Path(args.out) if args.out else cfg.path_of(section, "out_dir", required=True)
    train, test = data.generate_synthetic(syn)
    data.save_dataset(out_dir / "train.txt", train, "train")
    data.save_dataset(out_dir / "test.txt", test, "test")
    print(f"wrote {len(train)} train and {len(test)} test subjects to {out_dir}")
    return 0


def _read_labels(path: Path) -> dict[str, str]:
    labels = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[1] not in alcotask.LABELS:
            raise ConfigError(f"{path}: line {lineno}: expected `<subject_id> <alcoholic|control>`")
        labels[parts[0]] = parts[1]
    return labels


def cmd_preprocess(args) -> int:
    cfg = Config(args.config)
    section = "preprocess"
    trial_paths = data.read_manifest(cfg.path_of(section, "trial_manifest", required=True))
    labels = _read_labels(cfg.path_of(section, "labels", required=True))
    out_dir = Path(args.out) if args.out else cfg.path_of(section, "out_dir", required=True)
    seed = args.seed if args.seed is not None else cfg.typed(section, "seed", int, required=True)
    n_average = cfg.typed(section, "n_average", int, data.N_AVERAGE)
    min_trials = cfg.typed(section, "min_trials", int, data.MIN_TRIALS)

    by_subject: dict[str, list[data.Trial]] = {}
    for p in trial_paths:
        t = data.read_trial(p)
        by_subject.setdefault(t.subject_id, []).append(t)
    root = RandomSource(seed)
    train, test, excluded = [], [], []
    for k, sid in enumerate(sorted(by_subject)):
        if sid not in labels:
            raise ConfigError(f"subject {sid} has no label in the labels file")
        trials = sorted(by_subject[sid], key=lambda t: t.trial_index)
        kept = data.reject_artifacts(trials)
        pair = data.build_subject(kept, labels[sid], root.derive(k), n_average, min_trials)
        if pair is None:
            excluded.append(sid)
            continue
        train.append(pair[0])
        test.append(pair[1])
    # Alcoholics first, so teacher ids follow the file order of alcoholic subjects.
    train.sort(key=lambda r: r.label != "alcoholic")
    test.sort(key=lambda r: r.label != "alcoholic")
    data.save_dataset(out_dir / "train.txt", train, "train")
    data.save_dataset(out_dir / "test.txt", test, "test")
    print(f"kept {len(train)} subjects, excluded {len(excluded)}: {' '.join(excluded) or '-'}")
    return 0


HISTORY_COLUMNS = ["generation", "best_penalty", "mean_penalty", "draws_common", "draws_unique", "draws_absent"]


class CsvSink:
    """Streams per-generation statistics to ``history.csv`` and ``sensors.csv``."""

    def __init__(self, out: Path, sensor_ids):
        self.sensor_ids = list(sensor_ids)
        self._files = [
            open(out / "history.csv", "w", newline="", encoding="utf-8"),
            open(out / "sensors.csv", "w", newline="", encoding="utf-8"),
        ]
        self.history, self.sensors = (csv.writer(f, lineterminator="\n") for f in self._files)
        self.history.writerow(HISTORY_COLUMNS)
        self.sensors.writerow(["generation", *(f"sensor_{i}" for i in self.sensor_ids)])

    def __call__(self, stats: GenerationStats) -> None:
        t = stats.total_tally
        self.history.writerow(
            [stats.generation, repr(stats.best_penalty), repr(stats.mean_penalty),
             t.from_common, t.from_unique, t.from_absent]
        )
        self.sensors.writerow([stats.generation, *(stats.sensor_histogram[i] for i in self.sensor_ids)])

    def close(self) -> None:
        for f in self._files:
            f.close()


def cmd_evolve(args) -> int:
    cfg = Config(args.config)
    rc = load_run_config(cfg, args)
    train, teachers = _load_train(rc)
    specs = _specs_for(rc, teachers)
    evaluator = alcotask.PenaltyEvaluator(train, teachers, specs)
    rc.out.mkdir(parents=True, exist_ok=True)
    sink = CsvSink(rc.out, specs[alcotask.SENSORS].universe.tolist())
    try:
        pop, history = run(rc.ga, evaluator, specs, alcotask.LINKED_GROUPS, sink=sink, threads=rc.threads)
    finally:
        sink.close()
    best = pop[0]
    (rc.out / "best.txt").write_text(alcotask.format_chromosome(best, best.penalty), encoding="utf-8")
    print(f"best training penalty {best.penalty!r} after {len(history)} generations; outputs in {rc.out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = Config(args.config)
    rc = load_run_config(cfg, args)
    train, teachers = _load_train(rc)
    specs = _specs_for(rc, teachers)
    best_path = Path(args.best) if args.best else rc.out / "best.txt"
    chrom, _ = alcotask.parse_chromosome(best_path.read_text(encoding="utf-8"), specs)
    manifest = Path(args.manifest) if args.manifest else rc.test_manifest
    if manifest is None:
        raise ConfigError("no test manifest: pass --manifest or set [data] test_manifest")
    subjects = data.load_dataset(manifest)
    penalty = alcotask.PenaltyEvaluator(subjects, teachers, specs)(chrom)
    print(repr(penalty))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmxblx",
        description="Evolve temporal pattern detectors with MMX-BLX crossover.",
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="configuration file (see mmxblx --help)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--threads", type=int, help="fitness evaluation threads")
        return p

    common(sub.add_parser("synth", help="write a synthetic planted-pattern dataset")).set_defaults(func=cmd_synth)
    common(sub.add_parser("preprocess", help="trial files -> averaged subject files")).set_defaults(func=cmd_preprocess)
    common(sub.add_parser("evolve", help="run the GA; writes history.csv, sensors.csv, best.txt")).set_defaults(
        func=cmd_evolve
    )
    ev = common(sub.add_parser("evaluate", help="penalty of a saved chromosome on a subject set"))
    ev.add_argument("--best", help="chromosome file (default: <out>/best.txt)")
    ev.add_argument("--manifest", help="subject manifest (default: [data] test_manifest)")
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValidationError, OSError, ValueError) as exc:
        print(f"mmxblx {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
