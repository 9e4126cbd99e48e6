"""Shared value types and exceptions for the driven Tavis-Cummings laboratory.

Conventions used throughout the package:

* hbar = 1; the sweep rate ``beta`` has units of energy^2, the coupling
  ``g`` and the channel half-splitting ``epsilon`` have units of energy.
* ``x = exp(-2*pi*g**2/beta)`` is the elementary two-level survival
  probability of one linear crossing; every closed-form transition
  probability here is built from powers of ``x`` and q-Pochhammer
  factors in base ``x``.
* Probabilities are carried in log space and exponentiated only at the
  output boundary, so that molecule numbers up to ~1e5 stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class ConvergenceError(RuntimeError):
    """A truncated series failed to reach its tolerance within the term budget."""


class PropagationError(RuntimeError):
    """Time integration failed (step-size underflow or solver breakdown)."""


class NormDriftError(PropagationError):
    """State norm drifted beyond the integrator tolerance budget."""


class AmplitudeTooSmallError(RuntimeError):
    """An asymptotic amplitude is below the threshold where its phase is meaningful."""


class ConsistencyViolation(RuntimeError):
    """A claimed commuting two-time pair failed the numerical certification."""


class SingularityProximityError(ValueError):
    """A requested evaluation point is too close to a pole of the generator."""


class OccupationOverflowError(ValueError):
    """Channel occupations exceed the available number of molecules."""


class TrajectoryDomainError(RuntimeError):
    """A classical trajectory left the domain where the flow is defined."""


@dataclass(frozen=True)
class ModelParams:
    """Static parameters of one sweep experiment.

    N        initial number of molecules (>= 1)
    g        reaction coupling at the resonance (>= 0; 0 means no reaction)
    beta     sweep rate of the molecular level (> 0)
    epsilon  half-splitting of the two product channels (>= 0)
    """

    N: int
    g: float
    beta: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if self.g < 0:
            raise ValueError(f"g must be nonnegative, got {self.g}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")

    @property
    def log_x(self) -> float:
        """log of the single-crossing survival probability, -2*pi*g^2/beta."""
        return -TWO_PI * self.g**2 / self.beta

    @property
    def x(self) -> float:
        return math.exp(self.log_x)

    @property
    def big_gamma(self) -> float:
        """beta / (2*pi*g^2); the adiabaticity parameter (infinite at g = 0)."""
        if self.g == 0.0:
            return math.inf
        return self.beta / (TWO_PI * self.g**2)

    @property
    def gamma_lz(self) -> float:
        """g^2 / beta; strength of the decaying 1/t virtual coupling."""
        return self.g**2 / self.beta


@dataclass(frozen=True)
class Distribution:
    """Discrete probability table over an ordered basis.

    labels       basis labels (ints or int tuples), in a documented order
    probs        probabilities, same length as labels
    provenance   "analytic" (closed form) or "numeric" (integrated)
    params       parameter bundle the table was computed from, if any
    """

    labels: tuple
    probs: np.ndarray
    provenance: str
    params: object | None = None

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != probs.shape[0]:
            raise ValueError("labels and probs length mismatch")
        if self.provenance not in ("analytic", "numeric"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def total(self) -> float:
        return float(math.fsum(self.probs.tolist()))

    def mean(self) -> float:
        """Mean of scalar integer labels, exactly summed."""
        return float(math.fsum((float(l) * p for l, p in zip(self.labels, self.probs))))

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probs.tolist()))


class FlaggedValue(NamedTuple):
    """A number together with the validity of the regime it was derived in."""

    value: float
    in_regime: bool
    note: str = ""

    def __float__(self) -> float:
        return self.value


def kahan_sum(values: Sequence[float]) -> float:
    """Exactly rounded sum of a float sequence."""
    return float(math.fsum(values))
