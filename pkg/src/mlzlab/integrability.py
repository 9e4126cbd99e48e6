"""Numeric certification of the two-time integrability structure.

A pair (H, H') generates consistent evolution in the (t, tau) plane iff
the zero-curvature conditions hold: dH'/dt = dH/dtau and [H, H'] = 0
(the split form valid for real symmetric couplings).  Both residuals
are evaluated with analytic derivatives from the builders, so the
certificate carries no finite-difference tolerance; the threshold is
pure floating-point residue of exact algebraic identities.

Path-deformation invariance is the dynamical face of the same fact:
final-state probabilities do not change when the integration path is
deformed at fixed endpoints (phases on the detour legs do change and
are not compared).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import ConsistencyViolation
from .model import HamiltonianSpec

CERTIFICATION_THRESHOLD = 1e-11


@dataclass(frozen=True)
class ConsistencyReport:
    """Worst-case residuals of the zero-curvature conditions over a grid."""

    max_commutator_norm: float
    max_mixed_derivative_norm: float
    sample_points: tuple
    threshold: float

    @property
    def passed(self) -> bool:
        return (
            self.max_commutator_norm <= self.threshold
            and self.max_mixed_derivative_norm <= self.threshold
        )

    def as_text(self) -> str:
        lines = [
            f"commutator_residual: {self.max_commutator_norm:.3e}",
            f"mixed_derivative_residual: {self.max_mixed_derivative_norm:.3e}",
            f"threshold: {self.threshold:.1e}",
            f"points: {len(self.sample_points)}",
            f"pass: {self.passed}",
        ]
        return "\n".join(lines)


def check_consistency(
    h: HamiltonianSpec,
    h_partner: HamiltonianSpec,
    grid: Iterable[tuple[float, float]],
    threshold: float = CERTIFICATION_THRESHOLD,
    require_pass: bool = False,
) -> ConsistencyReport:
    """Evaluate both zero-curvature residuals at every grid point.

    Commutator residual is Frobenius, relative to ||H|| ||H'||; the mixed
    derivative residual is relative to the larger derivative norm.  Grid
    points must stay clear of the 1/tau and 1/t poles (the builders
    raise within 1e-6 of them).
    """
    grid = tuple(grid)
    worst_comm = 0.0
    worst_mixed = 0.0
    for t, tau in grid:
        a = h.materialize(t, tau)
        b = h_partner.materialize(t, tau)
        denom = np.linalg.norm(a) * np.linalg.norm(b)
        comm = np.linalg.norm(a @ b - b @ a) / max(denom, 1e-300)
        da = h.dmat_dtau(t, tau)
        db = h_partner.dmat_dt(t, tau)
        dd = max(np.linalg.norm(da), np.linalg.norm(db), 1e-300)
        mixed = np.linalg.norm(db - da) / dd
        worst_comm = max(worst_comm, comm)
        worst_mixed = max(worst_mixed, mixed)
    report = ConsistencyReport(
        max_commutator_norm=worst_comm,
        max_mixed_derivative_norm=worst_mixed,
        sample_points=grid,
        threshold=threshold,
    )
    if require_pass and not report.passed:
        raise ConsistencyViolation(
            f"pair ({h.kind}, {h_partner.kind}) failed certification:\n"
            + report.as_text()
        )
    return report


def default_grid(rng: np.random.Generator, npoints: int = 100,
                 t_range: tuple[float, float] = (-5.0, 5.0),
                 tau_range: tuple[float, float] = (0.2, 5.0)) -> list[tuple[float, float]]:
    """Random (t, tau) sample staying clear of both pole lines."""
    pts = []
    while len(pts) < npoints:
        t = rng.uniform(*t_range)
        tau = rng.uniform(*tau_range)
        if abs(t) > 1e-3 and abs(tau) > 1e-3:
            pts.append((float(t), float(tau)))
    return pts


@dataclass(frozen=True)
class PathInvarianceReport:
    """Pairwise probability discrepancies across deformed paths."""

    max_discrepancy: float
    per_path_probs: tuple
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.threshold

    def as_text(self) -> str:
        return (
            f"max_probability_discrepancy: {self.max_discrepancy:.3e}\n"
            f"threshold: {self.threshold:.1e}\n"
            f"paths: {len(self.per_path_probs)}\n"
            f"pass: {self.passed}"
        )


def path_invariance_suite(
    h: HamiltonianSpec,
    h_partner: HamiltonianSpec,
    paths: Sequence,
    cfg=None,
    threshold: float = 1e-3,
) -> PathInvarianceReport:
    """Evolve the incoming state along each path and compare probabilities.

    All paths must share endpoints; the pair is certified once up front.
    """
    from . import dynamics

    if cfg is None:
        cfg = dynamics.IntegrationConfig()
    starts = {p.vertices[0] for p in paths}
    ends = {p.vertices[-1] for p in paths}
    if len(starts) != 1 or len(ends) != 1:
        raise ValueError("all paths must share their endpoints")
    if h.init_index is None:
        raise ValueError(f"{h.kind} does not define an incoming state")

    t0, tau0 = next(iter(starts))
    psi0 = dynamics.eigenstate_start(h, h.init_index, t0, tau0)
    tables = []
    for path in paths:
        final = dynamics.two_time_evolve(h, h_partner, path, psi0, cfg)
        tables.append(final.probabilities())
    worst = 0.0
    for i in range(len(tables)):
        for j in range(i + 1, len(tables)):
            worst = max(worst, float(np.max(np.abs(tables[i] - tables[j]))))
    return PathInvarianceReport(
        max_discrepancy=worst,
        per_path_probs=tuple(tables),
        threshold=threshold,
    )
