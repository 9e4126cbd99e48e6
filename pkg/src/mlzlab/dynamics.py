"""Time-dependent Schrodinger propagation and asymptotic observables.

The default gauge is the interaction picture about the instantaneous
diagonal: the secular phase exp(-i * integral of the diagonal) is
factored out analytically (it is a polynomial plus logarithm in t for
every model here), so the integrator only tracks the slowly varying
dressed amplitudes.  The lab-frame diagonal phase grows like
beta*N*t^2/2 per state and would otherwise dominate the step budget.

Finite-window policy: propagation runs over [-T, T] (or [t0, T] for the
1/t generators) with T chosen so the asymptotic-freedom margin holds:
diagonal gaps at the endpoints exceed ten times the largest coupling.
Residual dressing of the diabatic states at the endpoints is removed by
projecting onto the instantaneous eigenbasis, whose columns are matched
to basis states by dominant component (unambiguous under the same
margin); this turns the leading finite-window error from linear to
quadratic in coupling/gap, and the adiabatically connected eigenstate
is likewise used as the starting vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh

from .core import (
    AmplitudeTooSmallError,
    Distribution,
    ModelParams,
    NormDriftError,
    PropagationError,
)
from .model import (
    HamiltonianSpec,
    decaying_coupling_spec,
    heff_thermalization_spec,
    tc_single_spec,
)

PHASE_FLOOR = 1e-10  # |amplitude|^2 below which an asymptotic phase is meaningless
_FREEDOM_MARGIN = 10.0


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over the ordered basis of a HamiltonianSpec."""

    amplitudes: np.ndarray
    spec: HamiltonianSpec
    time: float

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.spec.dim,):
            raise ValueError(f"amplitude vector must have shape ({self.spec.dim},)")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class IntegrationConfig:
    """Window and tolerance budget for one propagation.

    T is the half-window (None selects the automatic window); the norm
    budget is the allowed drift of the state norm, with failure declared
    at ten times that.
    """

    T: float | None = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    gauge: str = "interaction"
    t_start: float | None = None  # for 1/t generators: lower end of the window
    norm_budget: float = 1e-7
    asymptotic_projection: bool = True

    def __post_init__(self) -> None:
        if self.gauge not in ("lab", "interaction"):
            raise ValueError(f"unknown gauge {self.gauge!r}")


def default_window(spec: HamiltonianSpec, tau: float = 1.0) -> float:
    """Half-window satisfying the crossing, virtual-transition, and
    asymptotic-freedom scales of the given generator.

    Sweep generators: T = max(50/sqrt(beta), 40 g/beta, 30 (g^2/beta)/eps,
    freedom bound).  1/t generators: the couplings decay, so the freedom
    bound alone fixes T.
    """
    p = spec.params
    v = spec.offdiag_matrix(1.0, tau) if not spec.has_t_pole else None
    if spec.has_t_pole:
        vmax = float(np.max(np.abs(spec.Vinv_t)))
        gaps = _coupled_gaps(spec.dc, spec.Vinv_t)
        if gaps <= 0.0:
            raise ValueError(
                f"{spec.kind}: no diagonal gap; supply an explicit window"
            )
        return _FREEDOM_MARGIN * vmax / gaps
    T = 50.0 / math.sqrt(p.beta)
    T = max(T, 40.0 * p.g / p.beta)
    if p.epsilon > 0.0 and np.any(spec.dtau):
        T = max(T, 30.0 * (p.g**2 / p.beta) / p.epsilon)
    vmax = float(np.max(np.abs(v)))
    slope_gaps = _coupled_gaps(spec.dt, v)
    if vmax > 0.0 and slope_gaps > 0.0:
        T = max(T, _FREEDOM_MARGIN * vmax / slope_gaps)
    return T


def _coupled_gaps(diag_coeff: np.ndarray, coupling: np.ndarray) -> float:
    """Smallest |diag difference| over pairs with a nonzero coupling."""
    idx = np.argwhere(np.abs(coupling) > 0.0)
    if len(idx) == 0:
        return math.inf
    gaps = [abs(diag_coeff[i] - diag_coeff[j]) for i, j in idx if i != j]
    return min(gaps) if gaps else math.inf


def default_t_start(spec: HamiltonianSpec) -> float:
    """Early-time end of the window for the 1/t generators."""
    p = spec.params
    scales = [p.beta / p.g**2 if p.g > 0 else math.inf]
    if p.epsilon > 0:
        scales.append(1.0 / p.epsilon)
    t0 = 1e-3 * min(scales)
    if not math.isfinite(t0):
        raise ValueError("cannot choose a start time at zero coupling")
    return t0


# --------------------------------------------------------------------------
# core propagator
# --------------------------------------------------------------------------

def _diag_phase_fn(spec: HamiltonianSpec, tau: float):
    """theta(t) with theta(reference) = 0 such that exp(-i theta) carries the
    full diagonal phase; reference is t = 0 (|t| = 1 for the log part)."""
    dc = spec.dc + spec.dtau * tau
    if spec.has_tau_pole:
        dc = dc + spec.dinv_tau / tau
    half_dt = 0.5 * spec.dt
    dlog = spec.dinv_t

    if spec.has_t_pole:
        def theta(t: float) -> np.ndarray:
            return dc * t + half_dt * t * t + dlog * math.log(abs(t))
    else:
        def theta(t: float) -> np.ndarray:
            return dc * t + half_dt * t * t

    return theta


def _oscillation_rate(spec: HamiltonianSpec, tau: float, t_lo: float, t_hi: float) -> float:
    """Fastest phase-rotation rate of the interaction-picture couplings."""
    dc = spec.dc + spec.dtau * tau
    if spec.has_tau_pole:
        dc = dc + spec.dinv_tau / tau
    coupling = np.abs(spec.V0) + np.abs(spec.Vinv_tau) + np.abs(spec.Vinv_t)
    idx = np.argwhere(coupling > 0.0)
    tmax = max(abs(t_lo), abs(t_hi))
    rate = 0.0
    for i, j in idx:
        if i == j:
            continue
        rate = max(rate, abs(dc[i] - dc[j]) + abs(spec.dt[i] - spec.dt[j]) * tmax)
    return rate


def propagate(
    spec: HamiltonianSpec,
    psi0: StateVector | np.ndarray,
    t0: float,
    t1: float,
    cfg: IntegrationConfig = IntegrationConfig(),
    tau: float = 1.0,
    sample_times: np.ndarray | None = None,
):
    """Integrate i dpsi/dt = H(t) psi from t0 to t1; returns a StateVector.

    With sample_times given, returns (times, amplitude array) instead,
    one row per sample (used by the trajectory dump).
    """
    amps0 = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, complex)
    if abs(np.linalg.norm(amps0) - 1.0) > 1e-6:
        raise ValueError("initial state must be normalized")
    if spec.has_t_pole and t0 * t1 <= 0.0:
        raise ValueError(f"{spec.kind}: window may not cross the t = 0 pole")
    spec.check_point(t0, tau)
    spec.check_point(t1, tau)

    v0 = spec.V0 + (spec.Vinv_tau / tau if spec.has_tau_pole else 0.0)
    vinv_t = spec.Vinv_t if spec.has_t_pole else None

    if cfg.gauge == "interaction":
        theta = _diag_phase_fn(spec, tau)

        if vinv_t is None:
            def rhs(t, c):
                ph = np.exp(1j * theta(t))
                return -1j * (ph * (v0 @ (ph.conj() * c)))
        else:
            def rhs(t, c):
                ph = np.exp(1j * theta(t))
                return -1j * (ph * ((v0 + vinv_t / t) @ (ph.conj() * c)))

        y0 = np.exp(1j * theta(t0)) * amps0
    else:
        def rhs(t, c):
            h = spec.materialize(t, tau)
            return -1j * (h @ c)

        y0 = amps0

    max_step = cfg.max_step
    if cfg.gauge == "lab":
        # step bound from the diagonal scale, as the lab-frame phases must
        # be resolved explicitly
        dscale = max(
            float(np.max(np.abs(spec.diag_vector(t0, tau)))),
            float(np.max(np.abs(spec.diag_vector(t1, tau)))),
            1e-12,
        )
        max_step = min(max_step, 0.1 / dscale)
    else:
        rate = _oscillation_rate(spec, tau, t0, t1)
        if rate > 0.0:
            max_step = min(max_step, 2.0 * math.pi / rate)
    max_step = min(max_step, abs(t1 - t0) / 16.0)

    t_eval = None if sample_times is None else np.asarray(sample_times, float)
    sol = solve_ivp(
        rhs,
        (t0, t1),
        y0,
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=max_step,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        raise PropagationError(f"integration failed: {sol.message}")

    def to_lab(t, y):
        if cfg.gauge == "interaction":
            return np.exp(-1j * theta(t)) * y
        return y

    if sample_times is not None:
        amps = np.array([to_lab(t, sol.y[:, k]) for k, t in enumerate(sol.t)])
        return sol.t, amps

    out = to_lab(t1, sol.y[:, -1])
    drift = abs(np.linalg.norm(out) - 1.0)
    if drift > 10.0 * cfg.norm_budget:
        raise NormDriftError(
            f"norm drifted by {drift:.3e}, beyond 10x the budget {cfg.norm_budget:.1e}"
        )
    return StateVector(amplitudes=out, spec=spec, time=t1)


def write_trajectory_csv(path, spec, times, amps) -> None:
    """Debug dump: one row per (time, basis label) with Re/Im amplitude."""
    with open(path, "w", newline="") as fh:
        fh.write("t,label,re,im\n")
        for t, row in zip(times, amps):
            for lab, z in zip(spec.basis_labels, row):
                fh.write(f"{float(t)!r},{lab},{float(z.real)!r},{float(z.imag)!r}\n")


# --------------------------------------------------------------------------
# asymptotic projection
# --------------------------------------------------------------------------

def _matched_eigenbasis(spec: HamiltonianSpec, t: float, tau: float = 1.0):
    """Instantaneous eigenvectors, columns matched to basis states by
    dominant component and sign-fixed to positive overlap.

    Requires the asymptotic-freedom margin (each eigenvector dominated by
    a single basis state); raises PropagationError otherwise.
    """
    h = spec.materialize(t, tau)
    _, vecs = eigh(h)
    dominant = np.argmax(np.abs(vecs), axis=0)
    if len(set(dominant.tolist())) != spec.dim:
        raise PropagationError(
            f"{spec.kind}: eigenbasis not adiabatically separated at t = {t}; "
            "enlarge the window"
        )
    matched = np.empty_like(vecs)
    for col in range(spec.dim):
        v = vecs[:, col]
        j = dominant[col]
        matched[:, j] = v if v[j] > 0 else -v
    return matched


def eigenstate_start(spec: HamiltonianSpec, index: int, t: float, tau: float = 1.0) -> np.ndarray:
    """Instantaneous eigenstate adiabatically connected to basis state index."""
    return _matched_eigenbasis(spec, t, tau)[:, index].astype(complex)


def asymptotic_amplitudes(state: StateVector, tau: float = 1.0) -> np.ndarray:
    """Amplitudes in the instantaneous eigenbasis, labeled by basis state."""
    basis = _matched_eigenbasis(state.spec, state.time, tau)
    return basis.T @ state.amplitudes


# --------------------------------------------------------------------------
# transition probabilities
# --------------------------------------------------------------------------

def transition_probabilities(
    spec: HamiltonianSpec, cfg: IntegrationConfig = IntegrationConfig(), tau: float = 1.0
) -> Distribution:
    """Final diabatic populations for the sweep started, at -T, in the
    diabatic state that is the ground state as t -> -infinity."""
    if spec.init_index is None:
        raise ValueError(f"{spec.kind} does not define an incoming state")
    T = cfg.T if cfg.T is not None else default_window(spec, tau)
    if cfg.asymptotic_projection:
        psi0 = eigenstate_start(spec, spec.init_index, -T, tau)
    else:
        psi0 = np.zeros(spec.dim, complex)
        psi0[spec.init_index] = 1.0
    final = propagate(spec, psi0, -T, T, cfg, tau=tau)
    if cfg.asymptotic_projection:
        probs = np.abs(asymptotic_amplitudes(final, tau)) ** 2
    else:
        probs = final.probabilities()
    return Distribution(
        labels=spec.basis_labels, probs=probs, provenance="numeric", params=spec.params
    )


def thermalization_run(
    n: int, g: float, beta: float, eps: float, cfg: IntegrationConfig = IntegrationConfig()
) -> Distribution:
    """Late-time pair-imbalance distribution of the fixed-yield generator.

    Starts from the flat superposition (the early-time ground state) at
    t0 and returns the populations as a table over dn = 2*n2 - n.
    """
    spec = heff_thermalization_spec(n, g, beta, eps)
    t0 = cfg.t_start if cfg.t_start is not None else default_t_start(spec)
    T = cfg.T if cfg.T is not None else default_window(spec)
    psi0 = np.full(n + 1, 1.0 / math.sqrt(n + 1), dtype=complex)
    final = propagate(spec, psi0, t0, T, cfg)
    if cfg.asymptotic_projection:
        probs = np.abs(asymptotic_amplitudes(final)) ** 2
    else:
        probs = final.probabilities()
    labels = tuple(2 * n2 - n for n2 in range(n + 1))
    return Distribution(labels=labels, probs=probs, provenance="numeric",
                        params=spec.params)


def decaying_coupling_run(
    eps: float, gamma: float, cfg: IntegrationConfig = IntegrationConfig()
) -> tuple[float, float]:
    """Final populations of the -gamma/t two-level model started in the
    equal superposition at t -> 0+."""
    spec = decaying_coupling_spec(eps, gamma)
    t0 = cfg.t_start if cfg.t_start is not None else default_t_start(spec)
    T = cfg.T if cfg.T is not None else 50.0 * default_window(spec)
    psi0 = np.array([1.0, 1.0], complex) / math.sqrt(2.0)
    final = propagate(spec, psi0, t0, T, cfg)
    if cfg.asymptotic_projection:
        probs = np.abs(asymptotic_amplitudes(final)) ** 2
    else:
        probs = final.probabilities()
    return float(probs[0]), float(probs[1])


# --------------------------------------------------------------------------
# asymptotic scattering phases of the single-channel sweep
# --------------------------------------------------------------------------

def _log_phase_coefficients(params: ModelParams) -> np.ndarray:
    """Second-order level-shift strengths Delta_m = |g_{m+1,m}|^2 - |g_{m,m-1}|^2
    (absent boundary couplings enter as zero)."""
    N, g = params.N, params.g
    m = np.arange(N + 1, dtype=float)
    up = np.where(m < N, (g * (m + 1)) ** 2 * (N - m), 0.0)
    dn = np.where(m > 0, (g * m) ** 2 * (N - m + 1), 0.0)
    return up - dn


def extract_phases(
    params: ModelParams,
    cfg: IntegrationConfig = IntegrationConfig(),
    pin_zero: bool = True,
) -> np.ndarray:
    """Scattering phases of the single-channel sweep amplitudes.

    Propagates from the all-molecule state at -T, removes the secular
    diagonal phase and the logarithmic phase fed by the decaying virtual
    shifts Delta_m/(beta t) on both halves of the window, and returns
    arg S_m0 modulo 2*pi.  Channels whose final weight is below
    PHASE_FLOOR come back as NaN (their phase carries no information).
    With pin_zero the m = 0 phase is subtracted, making it exactly 0;
    this needs a live m = 0 amplitude.  Without pinning the returned
    phases still share one m-independent offset, which cancels in
    coupling-normalized differences.
    """
    spec = tc_single_spec(params)
    T = cfg.T if cfg.T is not None else default_window(spec)
    psi0 = (
        eigenstate_start(spec, 0, -T)
        if cfg.asymptotic_projection
        else _basis_vector(spec.dim, 0)
    )
    final = propagate(spec, psi0, -T, T, cfg)
    if cfg.asymptotic_projection:
        amps = asymptotic_amplitudes(final)
    else:
        amps = final.amplitudes

    theta = _diag_phase_fn(spec, 1.0)(T)  # secular diagonal phase at +T
    delta = _log_phase_coefficients(params)
    log_term = (delta - delta[0]) / params.beta * math.log(math.sqrt(params.beta) * T)
    raw = np.angle(amps) + theta + log_term

    weights = np.abs(amps) ** 2
    phases = np.where(weights >= PHASE_FLOOR, raw, np.nan)
    if pin_zero:
        if weights[0] < PHASE_FLOOR:
            raise AmplitudeTooSmallError(
                f"m = 0 weight {weights[0]:.2e} below {PHASE_FLOOR:.0e}; "
                "its phase cannot pin the table"
            )
        phases = phases - phases[0]
    return np.mod(phases, 2.0 * math.pi)


def extract_phase(params: ModelParams, m: int, cfg: IntegrationConfig = IntegrationConfig()) -> float:
    """Single pinned scattering phase; raises if the channel is dead."""
    phases = extract_phases(params, cfg)
    if math.isnan(phases[m]):
        raise AmplitudeTooSmallError(f"channel m = {m} has weight below {PHASE_FLOOR:.0e}")
    return float(phases[m])


def _basis_vector(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, complex)
    v[index] = 1.0
    return v


# --------------------------------------------------------------------------
# two-time path evolution
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TimePath:
    """Piecewise-linear path in the (t, tau) plane, tau > 0 throughout."""

    vertices: tuple

    def __post_init__(self) -> None:
        verts = tuple((float(t), float(tau)) for t, tau in self.vertices)
        if len(verts) < 2:
            raise ValueError("a path needs at least two vertices")
        if any(tau <= 0.0 for _, tau in verts):
            raise ValueError("tau must stay positive along the path")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def straight(cls, T: float, tau: float = 1.0) -> "TimePath":
        return cls(vertices=((-T, tau), (T, tau)))

    @classmethod
    def rectangle(cls, T: float, tau0: float, tau: float = 1.0) -> "TimePath":
        """Detour: raise tau to tau0 at t = -T, sweep, and come back at +T."""
        return cls(vertices=((-T, tau), (-T, tau0), (T, tau0), (T, tau)))

    def reversed(self) -> "TimePath":
        return TimePath(vertices=self.vertices[::-1])


def two_time_evolve(
    h: HamiltonianSpec,
    h_partner: HamiltonianSpec,
    path: TimePath,
    psi0: StateVector | np.ndarray,
    cfg: IntegrationConfig = IntegrationConfig(),
    check: bool = True,
) -> StateVector:
    """Path-ordered evolution with generator H dt + H' dtau along the path.

    The pair is certified with a consistency check on sampled path points
    first (skippable with check=False for speed in sweeps).
    """
    if check:
        from .integrability import check_consistency

        pts = []
        for (ta, pa), (tb, pb) in zip(path.vertices[:-1], path.vertices[1:]):
            for s in (0.25, 0.75):
                pts.append((ta + s * (tb - ta), pa + s * (pb - pa)))
        check_consistency(h, h_partner, pts, require_pass=True)

    amps = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, complex)
    for (ta, pa), (tb, pb) in zip(path.vertices[:-1], path.vertices[1:]):
        dt_leg, dp_leg = tb - ta, pb - pa
        if dt_leg == 0.0 and dp_leg == 0.0:
            continue
        if dp_leg == 0.0:
            # pure sweep leg: reuse the gauged single-time propagator
            amps = propagate(h, amps, ta, tb, cfg, tau=pa).amplitudes
            continue

        def rhs(s, y, ta=ta, pa=pa, dt_leg=dt_leg, dp_leg=dp_leg):
            t = ta + s * dt_leg
            p = pa + s * dp_leg
            gen = np.zeros((h.dim, h.dim))
            if dt_leg != 0.0:
                gen = gen + dt_leg * h.materialize(t, p)
            gen = gen + dp_leg * h_partner.materialize(t, p)
            return -1j * (gen @ y)

        scale = max(
            float(np.max(np.abs(rhs(0.0, np.ones(h.dim, complex))))),
            float(np.max(np.abs(rhs(1.0, np.ones(h.dim, complex))))),
            1.0,
        )
        sol = solve_ivp(
            rhs, (0.0, 1.0), amps, method="DOP853",
            rtol=cfg.rel_tol, atol=cfg.abs_tol,
            max_step=min(0.1, 2.0 / scale),
        )
        if not sol.success:
            raise PropagationError(f"path leg failed: {sol.message}")
        amps = sol.y[:, -1]

    drift = abs(np.linalg.norm(amps) - 1.0)
    if drift > 10.0 * cfg.norm_budget:
        raise NormDriftError(f"norm drifted by {drift:.3e} along the path")
    tb, pb = path.vertices[-1]
    return StateVector(amplitudes=amps, spec=h, time=tb)
