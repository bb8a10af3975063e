"""Integer-order approximation of fractional-order systems by particle swarm search."""

from .gl_core import (
    FULL,
    FractionalTerm,
    FractionalTF,
    GlWeights,
    Signal,
    SimulationError,
    TimeGrid,
    gl_differintegral,
    gl_weights,
    simulate_fractional,
)
from .identify import (
    PAPER_COEFFS,
    PAPER_TARGET,
    ExperimentConfig,
    IdentificationReport,
    ObservationSet,
    derive_template,
    fitness,
    generate_observations,
    identify,
    identify_observations,
)
from .lti_sim import (
    DegenerateLeadingCoefficient,
    PolynomialTF,
    UnstableBlowUp,
    simulate_integer,
    to_state_space,
)
from .swarm import SwarmConfig, SwarmState, init_swarm, run, step

__version__ = "0.1.0"

__all__ = [
    "FULL",
    "DegenerateLeadingCoefficient",
    "ExperimentConfig",
    "FractionalTF",
    "FractionalTerm",
    "GlWeights",
    "IdentificationReport",
    "ObservationSet",
    "PAPER_COEFFS",
    "PAPER_TARGET",
    "PolynomialTF",
    "Signal",
    "SimulationError",
    "SwarmConfig",
    "SwarmState",
    "TimeGrid",
    "UnstableBlowUp",
    "derive_template",
    "fitness",
    "generate_observations",
    "gl_differintegral",
    "gl_weights",
    "identify",
    "identify_observations",
    "init_swarm",
    "run",
    "simulate_fractional",
    "simulate_integer",
    "step",
    "to_state_space",
]
