"""Dense Hermitian generators for every model in the laboratory.

Each Hamiltonian (and each commuting two-time partner) fits one template

    H(t, tau) = diag(dc + dt*t + dtau*tau + dinv_tau/tau + dinv_t/t)
                + V0 + Vinv_tau/tau + Vinv_t/t

with real vectors d* and real symmetric matrices V*.  The builders fill
these pieces once; materialization and the analytic t/tau derivatives
needed by the integrability certificates follow mechanically.  All
matrices are real symmetric, so Hermiticity holds by construction.

Basis conventions (fixed, and recorded in ``basis_labels``):

* three-state crossing model: (0, 1, 2) = sweeping level, lower and
  upper parallel level;
* single-channel dissociation: m = 0..N split pairs, molecule number
  N - m, diagonal slope beta*(N - m);
* two-channel dissociation: pair numbers (n1, n2), n1 + n2 <= N,
  lexicographic in (n1, n2);
* fixed-yield thermalization: n2 = 0..n pairs in the upper channel.

Note on the commuting partners: the published forms of the two partner
matrices carry sign typos that break both [H, H'] = 0 and
dH/dtau = dH'/dt.  The versions here were re-derived from those two
conditions (linear-algebra solve on the t/tau-polynomial coefficients)
and certify to ~1e-16 relative; the partner is unique up to multiples
of the identity once dH'/dt = dH/dtau is imposed.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, SingularityProximityError

_POLE_GUARD = 1e-6


@dataclass(frozen=True)
class HamiltonianSpec:
    """A time-parameterized Hermitian matrix generator over a fixed basis."""

    kind: str
    params: ModelParams
    dim: int
    basis_labels: tuple
    dc: np.ndarray
    dt: np.ndarray
    dtau: np.ndarray
    dinv_tau: np.ndarray
    dinv_t: np.ndarray
    V0: np.ndarray
    Vinv_tau: np.ndarray
    Vinv_t: np.ndarray
    init_index: int | None = None

    # -- pole bookkeeping ---------------------------------------------------
    @property
    def has_tau_pole(self) -> bool:
        return bool(np.any(self.dinv_tau) or np.any(self.Vinv_tau))

    @property
    def has_t_pole(self) -> bool:
        return bool(np.any(self.dinv_t) or np.any(self.Vinv_t))

    def check_point(self, t: float, tau: float) -> None:
        if self.has_tau_pole and abs(tau) < _POLE_GUARD:
            raise SingularityProximityError(
                f"{self.kind}: tau = {tau} within {_POLE_GUARD} of the 1/tau pole"
            )
        if self.has_t_pole and abs(t) < _POLE_GUARD:
            raise SingularityProximityError(
                f"{self.kind}: t = {t} within {_POLE_GUARD} of the 1/t pole"
            )

    # -- evaluation ----------------------------------------------------------
    def diag_vector(self, t: float, tau: float = 1.0) -> np.ndarray:
        self.check_point(t, tau)
        d = self.dc + self.dt * t + self.dtau * tau
        if self.has_tau_pole:
            d = d + self.dinv_tau / tau
        if self.has_t_pole:
            d = d + self.dinv_t / t
        return d

    def offdiag_matrix(self, t: float, tau: float = 1.0) -> np.ndarray:
        self.check_point(t, tau)
        v = self.V0
        if self.has_tau_pole:
            v = v + self.Vinv_tau / tau
        if self.has_t_pole:
            v = v + self.Vinv_t / t
        return v

    def materialize(self, t: float, tau: float = 1.0) -> np.ndarray:
        h = np.array(self.offdiag_matrix(t, tau))
        h[np.diag_indices(self.dim)] += self.diag_vector(t, tau)
        return h

    def dmat_dt(self, t: float, tau: float = 1.0) -> np.ndarray:
        """Analytic d/dt of the materialized matrix."""
        self.check_point(t, tau)
        out = np.zeros((self.dim, self.dim))
        d = np.array(self.dt)
        if self.has_t_pole:
            d = d - self.dinv_t / (t * t)
            out -= self.Vinv_t / (t * t)
        out[np.diag_indices(self.dim)] += d
        return out

    def dmat_dtau(self, t: float, tau: float = 1.0) -> np.ndarray:
        """Analytic d/dtau of the materialized matrix."""
        self.check_point(t, tau)
        out = np.zeros((self.dim, self.dim))
        d = np.array(self.dtau)
        if self.has_tau_pole:
            d = d - self.dinv_tau / (tau * tau)
            out -= self.Vinv_tau / (tau * tau)
        out[np.diag_indices(self.dim)] += d
        return out


def _spec(kind, params, labels, *, dc=None, dt=None, dtau=None, dinv_tau=None,
          dinv_t=None, V0=None, Vinv_tau=None, Vinv_t=None, init_index=None):
    dim = len(labels)
    z = np.zeros(dim)
    zm = np.zeros((dim, dim))

    def vec(v):
        return z if v is None else np.asarray(v, dtype=float)

    def mat(m):
        if m is None:
            return zm
        m = np.asarray(m, dtype=float)
        assert np.array_equal(m, m.T), "couplings must be symmetric"
        return m

    return HamiltonianSpec(
        kind=kind, params=params, dim=dim, basis_labels=tuple(labels),
        dc=vec(dc), dt=vec(dt), dtau=vec(dtau), dinv_tau=vec(dinv_tau),
        dinv_t=vec(dinv_t), V0=mat(V0), Vinv_tau=mat(Vinv_tau), Vinv_t=mat(Vinv_t),
        init_index=init_index,
    )


# --------------------------------------------------------------------------
# three-state crossing model and its partner
# --------------------------------------------------------------------------

def do3_spec(g: float, beta: float, eps: float) -> HamiltonianSpec:
    """Sweeping level crossing two parallel levels split by 2*tau*eps."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    params = ModelParams(N=1, g=g, beta=beta, epsilon=eps)
    V0 = np.array([[0.0, g, g], [g, 0.0, 0.0], [g, 0.0, 0.0]])
    return _spec("DO3", params, (0, 1, 2),
                 dt=(beta, 0.0, 0.0), dtau=(0.0, -eps, eps), V0=V0, init_index=0)


def do3_partner_spec(g: float, beta: float, eps: float) -> HamiltonianSpec:
    """Commuting second-time generator of the three-state crossing model."""
    params = ModelParams(N=1, g=g, beta=beta, epsilon=eps)
    c = g * g / beta
    e = eps * g / beta
    V0 = np.array([[0.0, e, -e], [e, 0.0, 0.0], [-e, 0.0, 0.0]])
    Vinv_tau = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -c], [0.0, -c, 0.0]])
    return _spec("DO3Partner", params, (0, 1, 2),
                 dt=(0.0, -eps, eps), dtau=(eps * eps / beta, 0.0, 0.0),
                 dinv_tau=(-c, 0.0, 0.0), V0=V0, Vinv_tau=Vinv_tau)


def do3_hamiltonian(g, beta, eps, t, tau=1.0) -> np.ndarray:
    return do3_spec(g, beta, eps).materialize(t, tau)


def do3_partner(g, beta, eps, t, tau) -> np.ndarray:
    return do3_partner_spec(g, beta, eps).materialize(t, tau)


# --------------------------------------------------------------------------
# two-level reductions
# --------------------------------------------------------------------------

def lz2_spec(beta: float, coupling: float) -> HamiltonianSpec:
    """Standard two-level linear crossing: diag (beta*t, 0), coupling off-diag."""
    params = ModelParams(N=1, g=abs(coupling), beta=beta)
    return _spec("LZ2", params, (0, 1), dt=(beta, 0.0),
                 V0=[[0.0, coupling], [coupling, 0.0]], init_index=0)


def decaying_coupling_spec(eps: float, gamma: float) -> HamiltonianSpec:
    """Two parallel levels at -/+ eps coupled by -gamma/t (t > 0)."""
    if eps < 0 or gamma < 0:
        raise ValueError("eps and gamma must be nonnegative")
    params = ModelParams(N=1, g=math.sqrt(gamma), beta=1.0, epsilon=eps)
    return _spec("DecayingCoupling2", params, (1, 2), dc=(-eps, eps),
                 Vinv_t=[[0.0, -gamma], [-gamma, 0.0]])


def heff2_hamiltonian(eps, gamma, t) -> np.ndarray:
    return decaying_coupling_spec(eps, gamma).materialize(t)


# --------------------------------------------------------------------------
# single-channel dissociation
# --------------------------------------------------------------------------

def tc_single_spec(params: ModelParams) -> HamiltonianSpec:
    """Fock-space generator over m = 0..N split pairs.

    Diagonal beta*t*(N - m); coupling <m+1|H|m> = g*(m+1)*sqrt(N - m).
    """
    N, g = params.N, params.g
    m = np.arange(N + 1)
    V0 = np.zeros((N + 1, N + 1))
    for k in range(N):
        V0[k + 1, k] = V0[k, k + 1] = g * (k + 1) * math.sqrt(N - k)
    return _spec("TCSingle", params, tuple(int(v) for v in m),
                 dt=params.beta * (N - m), V0=V0, init_index=0)


def tc_single_hamiltonian(params: ModelParams, t: float) -> np.ndarray:
    return tc_single_spec(params).materialize(t)


# --------------------------------------------------------------------------
# two-channel dissociation and its partner
# --------------------------------------------------------------------------

def two_channel_labels(N: int) -> tuple:
    """Pair-number labels (n1, n2) with n1 + n2 <= N, lexicographic order."""
    return tuple((n1, n2) for n1 in range(N + 1) for n2 in range(N + 1 - n1))


def tc_two_channel_spec(params: ModelParams) -> HamiltonianSpec:
    """Two competing reaction channels at potentials -/+ tau*eps.

    Diagonal beta*t*(N - n1 - n2) + tau*eps*(n2 - n1); channel-k coupling
    g * n_k * sqrt(N - n1 - n2 + 1) toward (n_k - 1).
    """
    N, g, eps = params.N, params.g, params.epsilon
    labels = two_channel_labels(N)
    idx = {lab: i for i, lab in enumerate(labels)}
    dim = len(labels)
    dt = np.empty(dim)
    dtau = np.empty(dim)
    V0 = np.zeros((dim, dim))
    for (n1, n2), i in idx.items():
        dt[i] = params.beta * (N - n1 - n2)
        dtau[i] = eps * (n2 - n1)
        root = math.sqrt(N - n1 - n2 + 1)
        if n1 >= 1:
            j = idx[(n1 - 1, n2)]
            V0[i, j] = V0[j, i] = g * n1 * root
        if n2 >= 1:
            j = idx[(n1, n2 - 1)]
            V0[i, j] = V0[j, i] = g * n2 * root
    return _spec("TCTwoChannel", params, labels, dt=dt, dtau=dtau, V0=V0,
                 init_index=idx[(0, 0)])


def tc_two_channel_hamiltonian(params: ModelParams, t: float, tau: float = 1.0) -> np.ndarray:
    return tc_two_channel_spec(params).materialize(t, tau)


def tc_two_channel_partner_spec(params: ModelParams) -> HamiltonianSpec:
    """Commuting second-time generator of the two-channel model.

    In the pair basis, with channel potentials -/+ eps:
      diagonal   eps*t*(n2 - n1) - tau*eps^2*(n1 + n2)/beta
                 + g^2*(2 n1 + 1)*(2 n2 + 1)/(2 beta tau)
      molecular  +-(g*eps/beta) * n_k * sqrt(N - n1 - n2 + 1)
      pair hop   -(g^2/(beta tau)) * (n1 + 1) * n2
                 between (n1, n2) and (n1 + 1, n2 - 1).
    """
    N, g, eps, beta = params.N, params.g, params.epsilon, params.beta
    labels = two_channel_labels(N)
    idx = {lab: i for i, lab in enumerate(labels)}
    dim = len(labels)
    dt = np.empty(dim)
    dtau = np.empty(dim)
    dinv_tau = np.empty(dim)
    V0 = np.zeros((dim, dim))
    Vinv_tau = np.zeros((dim, dim))
    for (n1, n2), i in idx.items():
        dt[i] = eps * (n2 - n1)
        dtau[i] = -eps * eps * (n1 + n2) / beta
        dinv_tau[i] = g * g * (2 * n1 + 1) * (2 * n2 + 1) / (2.0 * beta)
        root = math.sqrt(N - n1 - n2 + 1)
        if n1 >= 1:
            j = idx[(n1 - 1, n2)]
            V0[i, j] = V0[j, i] = (g * eps / beta) * n1 * root
        if n2 >= 1:
            j = idx[(n1, n2 - 1)]
            V0[i, j] = V0[j, i] = -(g * eps / beta) * n2 * root
        if n2 >= 1:
            j = idx[(n1 + 1, n2 - 1)]
            Vinv_tau[i, j] = Vinv_tau[j, i] = -(g * g / beta) * (n1 + 1) * n2
    return _spec("TCTwoChannelPartner", params, labels, dt=dt, dtau=dtau,
                 dinv_tau=dinv_tau, V0=V0, Vinv_tau=Vinv_tau)


def tc_two_channel_partner(params: ModelParams, t: float, tau: float) -> np.ndarray:
    return tc_two_channel_partner_spec(params).materialize(t, tau)


# --------------------------------------------------------------------------
# fixed-yield thermalization generator
# --------------------------------------------------------------------------

def heff_thermalization_spec(n: int, g: float, beta: float, eps: float) -> HamiltonianSpec:
    """Late-time redistribution of n atomic pairs between the two channels.

    Tridiagonal over n2 = 0..n:
      diagonal     eps*(2 n2 - n) - g^2*(n2^2 + (n - n2)^2)/(beta t)
      off-diagonal -g^2*(n - n2)*(n2 + 1)/(beta t)
    valid for t > 0.  The t -> 0+ ground state is the flat superposition
    with energy -g^2 n (n + 1)/(beta t).
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"pair total must be a nonnegative integer, got {n}")
    n = int(n)
    params = ModelParams(N=max(n, 1), g=g, beta=beta, epsilon=eps)
    n2 = np.arange(n + 1)
    dc = eps * (2 * n2 - n)
    dinv_t = -(g * g / beta) * (n2**2 + (n - n2) ** 2).astype(float)
    Vinv_t = np.zeros((n + 1, n + 1))
    for k in range(n):
        Vinv_t[k, k + 1] = Vinv_t[k + 1, k] = -(g * g / beta) * (n - k) * (k + 1)
    return _spec("EffThermalization", params, tuple(int(v) for v in n2),
                 dc=dc, dinv_t=dinv_t, Vinv_t=Vinv_t)


def heff_thermalization(n, g, beta, eps, t) -> np.ndarray:
    return heff_thermalization_spec(n, g, beta, eps).materialize(t)


# --------------------------------------------------------------------------
# matrix dump format for golden files
# --------------------------------------------------------------------------

def dump_matrix(spec: HamiltonianSpec, t: float, tau: float = 1.0) -> str:
    """Plain-text dump: header lines, then row-major (re, im) pairs."""
    h = spec.materialize(t, tau).astype(complex)
    buf = io.StringIO()
    p = spec.params
    buf.write(f"# kind: {spec.kind}\n")
    buf.write(f"# params: N={p.N} g={p.g!r} beta={p.beta!r} epsilon={p.epsilon!r}\n")
    buf.write(f"# point: t={t!r} tau={tau!r}\n")
    buf.write(f"# dim: {spec.dim}\n")
    buf.write(f"# basis: {' '.join(str(lab) for lab in spec.basis_labels)}\n")
    for row in h:
        buf.write(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
        buf.write("\n")
    return buf.getvalue()


def parse_matrix_dump(text: str) -> tuple[dict, np.ndarray]:
    """Inverse of dump_matrix: returns (header fields, complex matrix)."""
    meta: dict = {}
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
            continue
        vals = [float(v) for v in line.split()]
        rows.append([complex(a, b) for a, b in zip(vals[::2], vals[1::2])])
    mat = np.array(rows)
    if "dim" in meta and mat.shape != (int(meta["dim"]), int(meta["dim"])):
        raise ValueError("matrix block does not match declared dimension")
    return meta, mat
