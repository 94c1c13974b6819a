from __future__ import annotations

import pytest

from mmxblx.alcotask import LINKED_GROUPS, encoding_specs
from mmxblx.core import AttributeSchema, Chromosome, Feature, RandomSource, SubChromosome, TaskSpec


@pytest.fixture
def rng():
    return RandomSource(20240607)


@pytest.fixture
def alco_specs():
    return encoding_specs()


@pytest.fixture
def alco_groups():
    return LINKED_GROUPS


@pytest.fixture
def small_spec():
    """Six features, each with one real and one integer attribute."""
    return TaskSpec(1, 6, 1, 4, AttributeSchema.of(("real", -4.0, 4.0), ("integer", 1, 12)), "small")


def sub(task, *features):
    return SubChromosome(task, tuple(Feature(i, tuple(a)) for i, a in features))


def chromosome(*subs):
    return Chromosome(tuple(subs))


# One line per acceptance criterion, printed at the end of the pytest run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
