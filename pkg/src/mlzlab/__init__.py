"""mlzlab: exact results and direct simulation for driven bosonic reactions.

The package implements the exactly solvable driven bosonic Tavis-Cummings
model (single- and two-channel molecular dissociation swept through a
Feshbach resonance), its commuting two-time partners, the closed-form
transition probabilities and scattering phases, direct time-dependent
Schrodinger integration for independent verification, numeric
integrability certificates, and the semiclassical limit.
"""

from .core import (
    AmplitudeTooSmallError,
    ConsistencyViolation,
    ConvergenceError,
    Distribution,
    FlaggedValue,
    ModelParams,
    NormDriftError,
    OccupationOverflowError,
    PropagationError,
    SingularityProximityError,
    TrajectoryDomainError,
)

__all__ = [
    "AmplitudeTooSmallError",
    "ConsistencyViolation",
    "ConvergenceError",
    "Distribution",
    "FlaggedValue",
    "ModelParams",
    "NormDriftError",
    "OccupationOverflowError",
    "PropagationError",
    "SingularityProximityError",
    "TrajectoryDomainError",
]

__version__ = "0.1.0"
