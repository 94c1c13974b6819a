"""Blend-based crossover operators for solving several subset selection tasks at once."""
from .core import (
    AttributeSchema,
    Chromosome,
    CrossoverParams,
    Feature,
    RandomSource,
    SubChromosome,
    TaskSpec,
    ValidationError,
    validate_chromosome,
)
from .crossover import DrawTally, FeatureBags, crossover_chromosome
from .evolution import GaConfig, GenerationStats, run

__version__ = "0.1.0"
