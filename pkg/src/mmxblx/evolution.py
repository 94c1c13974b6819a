"""Generational loop with elitist (mu + lambda) truncation selection."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import (
    Chromosome,
    CrossoverParams,
    Feature,
    LinkedGroups,
    RandomSource,
    SubChromosome,
    TaskSpec,
    ValidationError,
)
from .crossover import DrawTally, linked_leaders, sample_absent_rows, crossover_chromosome

log = logging.getLogger(__name__)

# Stream keys under the run seed.
_INIT, _GENERATION = 0, 1


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    generations: int = 5000
    crossover: CrossoverParams = CrossoverParams()
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValidationError(f"population size must be even and >= 2, got {self.population_size}")
        if self.generations < 1:
            raise ValidationError("need at least one generation")


@dataclass
class GenerationStats:
    generation: int
    best_penalty: float
    mean_penalty: float
    tallies: list[DrawTally]
    sensor_histogram: dict[int, int] = field(default_factory=dict)

    @property
    def total_tally(self) -> DrawTally:
        return sum(self.tallies, DrawTally())


def random_chromosome(specs: Sequence[TaskSpec], groups: LinkedGroups, rng: RandomSource) -> Chromosome:
    leader = linked_leaders(groups, len(specs))
    lengths: dict[int, int] = {}
    subs = []
    for i, spec in enumerate(specs):
        head = leader[i]
        if head not in lengths:
            lengths[head] = rng.integer(specs[head].subset_min, specs[head].subset_max)
        ids = rng.sample(spec.universe, lengths[head])
        attrs = sample_absent_rows(len(ids), spec.schema, rng)
        subs.append(SubChromosome(i, tuple(Feature(int(fid), spec.schema.coerce(row)) for fid, row in zip(ids, attrs.tolist()))))
    return Chromosome(tuple(subs))


def init_population(specs: Sequence[TaskSpec], groups: LinkedGroups, rho: int, rng: RandomSource) -> list[Chromosome]:
    if rho < 2:
        raise ValueError("population needs at least two members")
    return [random_chromosome(specs, groups, rng) for _ in range(rho)]


def pair_and_reproduce(
    pop: Sequence[Chromosome],
    config: GaConfig,
    specs: Sequence[TaskSpec],
    groups: LinkedGroups,
    rng: RandomSource,
) -> tuple[list[Chromosome], list[DrawTally]]:
    """Shuffle, mate neighbours, two children per pair.

    Child ``k`` of pair ``p`` draws from ``rng.derive(p, k)``, so the result does
    not depend on the order in which pairs are processed.
    """
    if len(pop) % 2:
        raise ValueError("population size must be even for pairing")
    order = list(range(len(pop)))
    rng.shuffle(order)
    offspring = []
    tallies = [DrawTally() for _ in specs]
    for p in range(len(pop) // 2):
        a, b = pop[order[2 * p]], pop[order[2 * p + 1]]
        for k in range(2):
            child, child_tallies = crossover_chromosome(a, b, specs, config.crossover, groups, rng.derive(p, k))
            offspring.append(child)
            tallies = [t + c for t, c in zip(tallies, child_tallies)]
    return offspring, tallies


def select(parents: Sequence[Chromosome], offspring: Sequence[Chromosome], rho: int) -> list[Chromosome]:
    pool = list(offspring) + list(parents)
    if any(c.penalty is None for c in pool):
        raise ValueError("every chromosome must be evaluated before selection")
    # Stable sort: offspring win ties against parents.
    pool.sort(key=lambda c: c.penalty)
    return pool[:rho]


def evaluate_all(chroms: Sequence[Chromosome], fitness: Callable[[Chromosome], float], threads: int = 1) -> None:
    todo = [c for c in chroms if c.penalty is None]
    if threads > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            penalties = list(pool.map(fitness, todo))
    else:
        penalties = [fitness(c) for c in todo]
    for c, p in zip(todo, penalties):
        c.penalty = float(p)


def occupancy(pop: Sequence[Chromosome], task: int, spec: TaskSpec) -> dict[int, int]:
    counts = {int(i): 0 for i in spec.universe}
    for c in pop:
        for fid in c[task].ids:
            counts[fid] += 1
    return counts


def run(
    config: GaConfig,
    fitness: Callable[[Chromosome], float],
    specs: Sequence[TaskSpec],
    groups: LinkedGroups = (),
    sink: Callable[[GenerationStats], None] | None = None,
    threads: int = 1,
    histogram_task: int = 0,
) -> tuple[list[Chromosome], list[GenerationStats]]:
    root = RandomSource(config.seed)
    pop = init_population(specs, groups, config.population_size, root.derive(_INIT))
    evaluate_all(pop, fitness, threads)
    history = []
    for g in range(1, config.generations + 1):
        offspring, tallies = pair_and_reproduce(pop, config, specs, groups, root.derive(_GENERATION, g))
        evaluate_all(offspring, fitness, threads)
        pop = select(pop, offspring, config.population_size)
        penalties = [c.penalty for c in pop]
        stats = GenerationStats(
            generation=g,
            best_penalty=penalties[0],
            mean_penalty=sum(penalties) / len(penalties),
            tallies=tallies,
            sensor_histogram=occupancy(pop, histogram_task, specs[histogram_task]),
        )
        history.append(stats)
        if sink is not None:
            sink(stats)
        log.debug("gen %d best %.4f mean %.4f", g, stats.best_penalty, stats.mean_penalty)
    return pop, history
