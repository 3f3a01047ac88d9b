"""Binary subset-selection optimization: BPSO (two variants), a GA baseline,
and a pluggable fitness layer with a neighbor-joining bootstrap evaluator."""

from swarmselect.bpso import EngineConfig, RngStreams, Variant, run
from swarmselect.core import (
    BinaryPosition,
    FitnessReport,
    Particle,
    SwarmState,
    VelocityVector,
    combine_fitness,
    ones_count,
    percentage_ones,
)
from swarmselect.fitness import FitnessEvaluator, MemoizedEvaluator, PlantedOracle
from swarmselect.ga import GAConfig, PipelineConfig, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BinaryPosition",
    "EngineConfig",
    "FitnessEvaluator",
    "FitnessReport",
    "GAConfig",
    "MemoizedEvaluator",
    "Particle",
    "PipelineConfig",
    "PlantedOracle",
    "RngStreams",
    "SwarmState",
    "Variant",
    "VelocityVector",
    "combine_fitness",
    "ones_count",
    "percentage_ones",
    "run",
    "run_pipeline",
]
