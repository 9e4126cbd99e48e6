"""Closed-form transition probabilities, means, phases, and critical quantities.

All results are exact functions of (N, g, beta) and channel occupations,
expressed through powers of x = exp(-2*pi*g^2/beta) and q-Pochhammer
factors in base x.  The zero-coupling boundary x = 1 is handled as an
explicit branch (nothing dissociates).  Probabilities are assembled in
log space and exponentiated at the boundary, so dissociation tables stay
finite up to N ~ 1e5 and beyond.

Naming:

* "single channel": one reaction pathway; P_m is the probability that m
  of the N molecules split.
* "two channel": pathways 1 (lower) and 2 (higher chemical potential);
  the joint table P_{n1,n2} and the total-yield marginal P_n.
* "multi channel": arbitrarily many pathways ordered by increasing
  chemical potential, built recursively channel by channel.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .core import TWO_PI, Distribution, FlaggedValue, ModelParams, OccupationOverflowError
from .specfun import arg_gamma, log_q_pochhammer, q_digamma

EULER_GAMMA = 0.5772156649015329

# Validity margins for the asymptotic-regime guards: "much less than"
# is read as "at least a factor of REGIME_MARGIN apart".
REGIME_MARGIN = 10.0


# --------------------------------------------------------------------------
# cumulative log machinery shared by the table builders
# --------------------------------------------------------------------------

def _cum_log_one_minus_xj(log_x: float, kmax: int) -> np.ndarray:
    """L[k] = sum_{j=1}^{k} log(1 - x^j) for k = 0..kmax, with L[0] = 0."""
    if kmax == 0:
        return np.zeros(1)
    j = np.arange(1, kmax + 1, dtype=float)
    log_terms = np.log(-np.expm1(j * log_x))
    return np.concatenate(([0.0], np.cumsum(log_terms)))


# --------------------------------------------------------------------------
# three-state Demkov-Osherov and the decaying-coupling two-level model
# --------------------------------------------------------------------------

def do3_probabilities(g: float, beta: float) -> tuple[float, float, float]:
    """Exact (P00, P01, P02) for the tilted level crossing two parallel levels.

    P00 = survival on the sweeping level after both crossings; P01 and P02
    are the yields on the lower / upper parallel level.  The splitting of
    the parallel pair does not enter.  The three values sum to 1 exactly.
    """
    if g < 0:
        raise ValueError("g must be nonnegative")
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = math.exp(-TWO_PI * g * g / beta)
    return x * x, 1.0 - x, x * (1.0 - x)


def decaying_coupling_probabilities(gamma: float) -> tuple[float, float]:
    """Final populations for the two-level model with coupling -gamma/t.

    Starting from the equal superposition at t -> 0+, the lower level ends
    with 1/(1 + e^{-2 pi gamma}) and the upper with the complement.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    w = math.exp(-TWO_PI * gamma)
    return 1.0 / (1.0 + w), w / (1.0 + w)


# --------------------------------------------------------------------------
# single-channel dissociation
# --------------------------------------------------------------------------

def single_channel_log_table(params: ModelParams) -> np.ndarray:
    """log P_m for m = 0..N: P_m = x^(N-m) * (x^(N-m+1), x)_m.

    At zero coupling the table collapses to the point mass at m = 0
    (log 0 = -inf elsewhere).
    """
    N = params.N
    if params.g == 0.0:
        out = np.full(N + 1, -np.inf)
        out[0] = 0.0
        return out
    log_x = params.log_x
    L = _cum_log_one_minus_xj(log_x, N)
    m = np.arange(N + 1)
    # (x^(N-m+1), x)_m = prod_{j=N-m+1}^{N} (1 - x^j) = exp(L[N] - L[N-m])
    return (N - m) * log_x + L[N] - L[N - m]


def single_channel_pm(params: ModelParams, m: int) -> float:
    """Probability that exactly m of the N molecules dissociate."""
    N = params.N
    if not 0 <= m <= N:
        raise IndexError(f"m must lie in 0..{N}, got {m}")
    if params.g == 0.0:
        return 1.0 if m == 0 else 0.0
    x = params.x
    log_p = (N - m) * params.log_x + log_q_pochhammer(x ** (N - m + 1), x, m)
    return math.exp(log_p)


def single_channel_table(params: ModelParams) -> Distribution:
    return Distribution(
        labels=tuple(range(params.N + 1)),
        probs=np.exp(single_channel_log_table(params)),
        provenance="analytic",
        params=params,
    )


# --------------------------------------------------------------------------
# multi-channel recursion
# --------------------------------------------------------------------------

def multi_channel_prob(params: ModelParams, occupations: Sequence[int]) -> float:
    """Joint probability of producing the given pair numbers channel by channel.

    Channels are ordered by increasing chemical potential; the value
    depends on the potentials only through that ordering.  Each step
    multiplies by the single-channel factor for the molecules that remain:

        P_{n_1..n_{s+1}} = P_{n_1..n_s} * x^(N - S_{s+1}) * (x^(N+1-S_{s+1}), x)_{n_{s+1}}

    with S_j the occupation total through channel j.  The empty
    configuration has probability 1.
    """
    N = params.N
    occ = [int(n) for n in occupations]
    if any(n < 0 for n in occ):
        raise ValueError(f"occupations must be nonnegative, got {occupations}")
    if sum(occ) > N:
        raise OccupationOverflowError(
            f"total occupation {sum(occ)} exceeds molecule number {N}"
        )
    if params.g == 0.0:
        return 1.0 if all(n == 0 for n in occ) else 0.0
    x, log_x = params.x, params.log_x
    log_p = 0.0
    filled = 0
    for n_k in occ:
        filled += n_k
        log_p += (N - filled) * log_x + log_q_pochhammer(x ** (N - filled + 1), x, n_k)
    return math.exp(log_p)


# --------------------------------------------------------------------------
# two-channel joint and total-yield tables
# --------------------------------------------------------------------------

def two_channel_log_joint(params: ModelParams, n1: int, n2: int) -> float:
    N = params.N
    if n1 < 0 or n2 < 0:
        raise ValueError("pair numbers must be nonnegative")
    if n1 + n2 > N:
        raise OccupationOverflowError(
            f"n1 + n2 = {n1 + n2} exceeds molecule number {N}"
        )
    if params.g == 0.0:
        return 0.0 if (n1 == 0 and n2 == 0) else -math.inf
    x, log_x = params.x, params.log_x
    log_p1 = (N - n1) * log_x + log_q_pochhammer(x ** (N - n1 + 1), x, n1)
    rest = N - n1 - n2
    return log_p1 + rest * log_x + log_q_pochhammer(x ** (rest + 1), x, n2)


def two_channel_joint(params: ModelParams, n1: int, n2: int) -> float:
    """Probability of n1 pairs in the lower channel and n2 in the upper."""
    return math.exp(two_channel_log_joint(params, n1, n2))


def two_channel_joint_table(params: ModelParams) -> Distribution:
    """Full joint table, labels (n1, n2) in lexicographic order.

    The label order matches the two-channel Fock basis used by the
    Hamiltonian builders, so numeric and analytic tables align index by
    index.  Intended for desk-scale N (quadratic cost in N).
    """
    N = params.N
    x, log_x = params.x, params.log_x
    L = _cum_log_one_minus_xj(log_x, N) if params.g > 0.0 else None
    labels = []
    logs = []
    log_p1_row = single_channel_log_table(params)
    for n1 in range(N + 1):
        for n2 in range(N + 1 - n1):
            labels.append((n1, n2))
            if params.g == 0.0:
                logs.append(0.0 if (n1 == 0 and n2 == 0) else -math.inf)
                continue
            rest = N - n1 - n2
            logs.append(
                log_p1_row[n1] + rest * log_x + (L[N - n1] - L[rest])
            )
    return Distribution(
        labels=tuple(labels),
        probs=np.exp(np.array(logs)),
        provenance="analytic",
        params=params,
    )


def two_channel_log_total(params: ModelParams, n: int) -> float:
    N = params.N
    if not 0 <= n <= N:
        raise IndexError(f"n must lie in 0..{N}, got {n}")
    if params.g == 0.0:
        return 0.0 if n == 0 else -math.inf
    x, log_x = params.x, params.log_x
    geo = math.log(-math.expm1((n + 1) * log_x)) - math.log(-math.expm1(log_x))
    return 2.0 * (N - n) * log_x + geo + log_q_pochhammer(x ** (N - n + 1), x, n)


def two_channel_total(params: ModelParams, n: int) -> float:
    """Probability that n molecules in total dissociate via either channel."""
    return math.exp(two_channel_log_total(params, n))


def two_channel_total_log_table(params: ModelParams) -> np.ndarray:
    N = params.N
    if params.g == 0.0:
        out = np.full(N + 1, -np.inf)
        out[0] = 0.0
        return out
    log_x = params.log_x
    L = _cum_log_one_minus_xj(log_x, N)
    n = np.arange(N + 1)
    geo = np.log(-np.expm1((n + 1) * log_x)) - math.log(-math.expm1(log_x))
    return 2.0 * (N - n) * log_x + geo + L[N] - L[N - n]


def two_channel_total_table(params: ModelParams) -> Distribution:
    return Distribution(
        labels=tuple(range(params.N + 1)),
        probs=np.exp(two_channel_total_log_table(params)),
        provenance="analytic",
        params=params,
    )


# --------------------------------------------------------------------------
# means and the production asymmetry
# --------------------------------------------------------------------------

def mean_nu_single(params: ModelParams) -> float:
    """Exact mean number of molecules surviving a single-channel sweep.

    Computed by direct summation over the exact finite-N table; valid in
    every regime (the Euler-distribution form is exposed separately).
    """
    if params.g == 0.0:
        return float(params.N)
    log_p = single_channel_log_table(params)
    nu = params.N - np.arange(params.N + 1)
    return float(math.fsum((nu * np.exp(log_p)).tolist()))


def mean_nu_single_euler(params: ModelParams) -> float:
    """Quasi-adiabatic mean of surviving molecules, (ln(1-x) + psi_x(1)) / ln x."""
    x = params.x
    return (math.log1p(-x) + q_digamma(x, 1.0)) / params.log_x


def mean_nu_single_asymptotic(params: ModelParams) -> float:
    """Leading quasi-adiabatic form Gamma * (ln Gamma + gamma_E)."""
    G = params.big_gamma
    return G * (math.log(G) + EULER_GAMMA)


def mean_nu_plus(params: ModelParams) -> float:
    """Exact mean number of molecules surviving the two-channel sweep."""
    if params.g == 0.0:
        return float(params.N)
    log_p = two_channel_total_log_table(params)
    nu = params.N - np.arange(params.N + 1)
    return float(math.fsum((nu * np.exp(log_p)).tolist()))


def mean_nu_plus_euler(params: ModelParams) -> float:
    """Quasi-adiabatic two-channel mean, (ln(1-x) + psi_x(2)) / ln x."""
    x = params.x
    return (math.log1p(-x) + q_digamma(x, 2.0)) / params.log_x


def mean_nu_plus_asymptotic(params: ModelParams) -> float:
    """Leading form Gamma * (ln Gamma - psi_1(2)), psi_1(2) = 1 - gamma_E."""
    G = params.big_gamma
    return G * (math.log(G) - (1.0 - EULER_GAMMA))


def in_quasi_adiabatic_regime(params: ModelParams) -> bool:
    """ln(N)/N << 2 pi g^2 / beta << 1, read with a factor-5 margin below
    and factor-10 above (the upper side controls the accuracy of the
    near-adiabatic expansions, so it gets the wider berth)."""
    if params.g == 0.0:
        return False
    expo = 1.0 / params.big_gamma
    lo = 0.5 * REGIME_MARGIN * math.log(params.N) / params.N
    hi = 1.0 / REGIME_MARGIN
    return lo <= expo <= hi


def mean_n2_quasiadiabatic(params: ModelParams) -> FlaggedValue:
    """Mean pair number in the higher channel, beta/(2 pi g^2), quasi-adiabatic.

    Flagged invalid outside ln(N)/N << 2 pi g^2/beta << 1.
    """
    value = params.big_gamma
    ok = in_quasi_adiabatic_regime(params)
    return FlaggedValue(value=value, in_regime=ok,
                        note="" if ok else "outside quasi-adiabatic window")


def asymmetry_eta(params: ModelParams) -> float:
    """Production asymmetry eta = 2 <n1>/<n> - 1 from the exact tables."""
    if params.g == 0.0:
        raise ValueError("asymmetry undefined at zero coupling (nothing dissociates)")
    mean_n1 = params.N - mean_nu_single(params)
    mean_n = params.N - mean_nu_plus(params)
    if mean_n <= 0.0:
        raise ValueError("asymmetry undefined: mean total yield is zero")
    return 2.0 * mean_n1 / mean_n - 1.0


class FastRegimeMeans(NamedTuple):
    mean_n1: float
    mean_n: float
    in_regime: bool


def fast_regime_means(params: ModelParams) -> FastRegimeMeans:
    """Geometric-distribution means for fast sweeps: <n1> = 1/p - 1, <n> = 2(1-p)/p,
    with p = x^N.  Flagged out of regime once p <= 1/N."""
    p = math.exp(params.N * params.log_x)
    in_regime = p > 1.0 / params.N
    if params.g == 0.0:
        return FastRegimeMeans(0.0, 0.0, True)
    mean_n1 = math.expm1(-params.N * params.log_x)  # e^(2 pi g^2 N / beta) - 1
    return FastRegimeMeans(mean_n1, 2.0 * (1.0 - p) / p, in_regime)


# --------------------------------------------------------------------------
# critical sweep rate and the distribution peak
# --------------------------------------------------------------------------

class CriticalBeta(NamedTuple):
    beta_exact: float
    beta_asymptotic: float
    x_critical: float


def critical_beta(N: int, g: float) -> CriticalBeta:
    """Sweep rate at which the dissociation-number peak leaves m = 0.

    beta_exact solves x = 1 - x^N by bisection on the survival base x
    (monotone condition, bracket guaranteed); beta_asymptotic is the
    large-N closed form 2 pi g^2 N / (ln N - ln(ln N - ln ln N)).
    """
    if N < 2:
        raise ValueError("critical rate needs N >= 2")
    if g <= 0:
        raise ValueError("critical rate needs positive coupling")

    def f(x: float) -> float:
        return x - 1.0 + x**N

    lo, hi = 1e-12, 1.0 - 1e-12
    flo = f(lo)
    assert flo < 0.0 < f(hi), "root bracketing failed; cannot occur for N >= 2"
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    x_c = 0.5 * (lo + hi)
    beta_exact = TWO_PI * g * g / (-math.log(x_c))
    ln_n = math.log(N)
    beta_asym = TWO_PI * g * g * N / (ln_n - math.log(ln_n - math.log(ln_n)))
    return CriticalBeta(beta_exact, beta_asym, x_c)


def n_excitations(params: ModelParams) -> float:
    """Peak-defining number of surviving molecules, -Gamma * ln(1 - x)."""
    if params.g == 0.0:
        return float(params.N)
    return -params.big_gamma * math.log(-math.expm1(params.log_x))


def n_excitations_scaling(params: ModelParams) -> float:
    """Slow-sweep scaling form Gamma * ln(Gamma)."""
    G = params.big_gamma
    return G * math.log(G)


def peak_position(params: ModelParams) -> int:
    """Most probable dissociation number: N - n_ex clamped to 0 above the
    critical rate; ties at the crossover resolve to the smaller m."""
    if params.g == 0.0:
        return 0
    beta_c = critical_beta(params.N, params.g).beta_exact
    if params.beta > beta_c:
        return 0
    m = params.N - n_excitations(params)
    return max(0, int(round(m)))


# --------------------------------------------------------------------------
# scattering phases
# --------------------------------------------------------------------------

def scattering_phases(params: ModelParams) -> np.ndarray:
    """Asymptotic scattering phases of the single-channel sweep amplitudes.

    Phi_m = 3 m pi/4 + sum_{k=1}^{m} { argGamma[i(k + (N-m) g^2/beta)]
                                       - 2 argGamma(i k g^2/beta) },
    with Phi_0 = 0.  Returned in order m = 0..N.
    """
    if params.g <= 0.0:
        raise ValueError("scattering phases need positive coupling")
    N = params.N
    r = params.g**2 / params.beta
    phases = np.zeros(N + 1)
    for m in range(1, N + 1):
        acc = 3.0 * m * math.pi / 4.0
        for k in range(1, m + 1):
            acc += arg_gamma(1j * (k + (N - m) * r)) - 2.0 * arg_gamma(1j * k * r)
        phases[m] = acc
    return phases


def scattering_phases_zero_coupling_limit(N: int) -> np.ndarray:
    """g -> 0 limit of the scattering phases: argGamma(i k) stays finite and
    each -2 argGamma(i k g^2/beta) term tends to +pi."""
    phases = np.zeros(N + 1)
    for m in range(1, N + 1):
        acc = 3.0 * m * math.pi / 4.0
        for k in range(1, m + 1):
            acc += arg_gamma(1j * k) + math.pi
        phases[m] = acc
    return phases


# --------------------------------------------------------------------------
# Gibbs forms of the late-time pair redistribution
# --------------------------------------------------------------------------

def gibbs_delta_distribution(n: int, g: float, beta: float) -> Distribution:
    """Thermal distribution of the pair imbalance dn = n2 - n1 at fixed total n.

    Support dn in {-n, -n+2, ..., n}; P(dn) ~ exp(-dn / kT) with
    kT = beta/(pi g^2) and Z = sinh((1+n)/kT) / sinh(1/kT).
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"pair total n must be a nonnegative integer, got {n}")
    if g <= 0 or beta <= 0:
        raise ValueError("g and beta must be positive")
    n = int(n)
    kt = beta / (math.pi * g * g)
    dn = np.arange(-n, n + 1, 2)
    log_w = -dn / kt
    log_w -= log_w.max()
    w = np.exp(log_w)
    return Distribution(
        labels=tuple(int(v) for v in dn),
        probs=w / w.sum(),
        provenance="analytic",
        params=ModelParams(N=max(n, 1), g=g, beta=beta),
    )


def gibbs_mean_n2(n: int, g: float, beta: float) -> float:
    """Exact mean of n2 = (n + dn)/2 under the fixed-n Gibbs distribution."""
    d = gibbs_delta_distribution(n, g, beta)
    return 0.5 * (n + d.mean())


def gibbs_mean_n2_thermal_tail(g: float, beta: float) -> float:
    """Large-n limit coth form: (1/2) coth(pi g^2/beta) - 1/2."""
    u = math.pi * g * g / beta
    return 0.5 / math.tanh(u) - 0.5


def gibbs_multichannel_ratio(
    params: ModelParams, config_a: Sequence[int], config_b: Sequence[int]
) -> float:
    """Boltzmann ratio P(a)/P(b) for equidistant channels at fixed total.

    For channel potentials eps*k the exact tables satisfy
    P(a)/P(b) = x^(sum k a_k - sum k b_k), a pure Boltzmann factor with
    kT = beta*eps/(2 pi g^2).  Requires equal totals.
    """
    a = [int(v) for v in config_a]
    b = [int(v) for v in config_b]
    if sum(a) != sum(b):
        raise ValueError("Boltzmann ratio requires equal total pair numbers")
    weight_a = sum((k + 1) * v for k, v in enumerate(a))
    weight_b = sum((k + 1) * v for k, v in enumerate(b))
    return math.exp(params.log_x * (weight_a - weight_b))
