"""Special functions behind the closed-form sweep probabilities.

Everything here is restricted to the real parameter domain that the
transition-probability formulas actually use: bases and arguments in
[0, 1), plus the boundary x = 1 reached at zero coupling.  Products are
accumulated in log space via log1p so that the quasi-adiabatic regime
(base exponentially close to 1, tens of thousands of factors) neither
underflows nor loses the leading digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma as _digamma
from scipy.special import loggamma as _loggamma

from .core import ConvergenceError, Distribution

# Series truncation policy: stop once a term falls below REL_FLOOR of the
# partial sum and ABS_FLOOR absolutely; give up past MAX_TERMS.
REL_FLOOR = 1e-15
ABS_FLOOR = 1e-300
MAX_TERMS = 10**6

_CHUNK = 1 << 16

# Below this value of delta = -ln(q) the direct q-digamma series would
# exceed MAX_TERMS; the near-limit expansion takes over.  Its error is
# O(delta^4 z^4 / 2880) and it requires delta * z << 1.
_Q_DIGAMMA_SWITCH = 1e-4


@dataclass(frozen=True)
class QPochhammerValue:
    """Log-space value of a finite q-Pochhammer product.

    log_value is the natural log of the product; -inf encodes an exact
    zero (first factor 1 - a with a = 1).  sign is +1 for a < 1, where
    every factor lies in (0, 1], and 0 for the degenerate a = 1 case.
    """

    log_value: float
    sign: int

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return math.exp(self.log_value)


def log_q_pochhammer(a: float, x: float, q: int) -> float:
    """log of (a, x)_q = prod_{k=0}^{q-1} (1 - a x^k); -inf when a = 1, q > 0.

    Domain: 0 <= a <= 1, 0 <= x <= 1, q >= 0 integer.  The x = 1 boundary
    (zero coupling) degenerates to q * log(1 - a).
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"base a must lie in [0, 1], got {a}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"ratio x must lie in [0, 1], got {x}")
    if q < 0 or int(q) != q:
        raise ValueError(f"q must be a nonnegative integer, got {q}")
    q = int(q)
    if q == 0:
        return 0.0
    if a == 1.0:
        return -math.inf
    if x == 1.0:
        return q * math.log1p(-a)
    if a == 0.0:
        return 0.0
    if x == 0.0:
        return math.log1p(-a)  # only the k = 0 factor differs from 1
    log_a = math.log(a)
    log_x = math.log(x)
    total = 0.0
    for start in range(0, q, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, q), dtype=float)
        factors = np.exp(log_a + k * log_x)
        total += float(np.sum(np.log1p(-factors)))
        if factors[-1] < ABS_FLOOR:
            break  # remaining factors are exactly 1 in float
    return total


def q_pochhammer(a: float, x: float, q: int) -> QPochhammerValue:
    """Finite q-Pochhammer symbol (a, x)_q on the sweep-probability domain."""
    log_value = log_q_pochhammer(a, x, q)
    sign = 0 if (a == 1.0 and q > 0) else 1
    return QPochhammerValue(log_value=log_value, sign=sign)


def q_digamma(q: float, z: float, tol: float = REL_FLOOR) -> float:
    """q-deformed digamma psi_q(z) = -ln(1-q) + ln(q) * sum_n q^(n+z)/(1-q^(n+z)).

    For q extremely close to 1 the defining series needs more than the
    term budget, so a Mellin-derived near-limit expansion
    psi_q(z) = psi(z) + d*(3/4 - z/2) + d^2*(z^2 - z - 5/6)/24 + O(d^3),
    with d = -ln q, takes over; both branches agree to ~1e-12 at the
    switch point.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if z <= 0.0:
        raise ValueError(f"z must be positive, got {z}")
    delta = -math.log(q)
    if delta <= _Q_DIGAMMA_SWITCH and delta * z <= 1e-3:
        psi = float(_digamma(z))
        return psi + delta * (0.75 - 0.5 * z) + delta**2 * (z * z - z - 5.0 / 6.0) / 24.0
    log_q = -delta
    total = 0.0
    n0 = 0
    while n0 < MAX_TERMS:
        n = np.arange(n0, min(n0 + _CHUNK, MAX_TERMS), dtype=float)
        expo = (n + z) * log_q
        terms = np.exp(expo) / (-np.expm1(expo))
        total += float(np.sum(terms))
        n0 += len(n)
        if terms[-1] < max(tol * abs(total), ABS_FLOOR):
            return -math.log1p(-q) + log_q * total
    raise ConvergenceError(
        f"q-digamma series did not converge within {MAX_TERMS} terms (q={q}, z={z})"
    )


def q_digamma_q1_limit(z: float) -> float:
    """psi_q(z) in the q -> 1 limit, evaluated at q = 1 - 1e-8 with a
    Richardson step in delta = -ln q to cancel the linear correction."""
    d1 = 1e-8
    v1 = q_digamma(math.exp(-d1), z)
    v2 = q_digamma(math.exp(-2.0 * d1), z)
    extrapolated = 2.0 * v1 - v2
    if abs(extrapolated - v1) > 1e-6:
        raise ConvergenceError(f"q->1 limit of psi_q({z}) not settled: {v1} vs {extrapolated}")
    return extrapolated


@dataclass(frozen=True)
class EulerDistributionParams:
    """Parameters of the truncated Euler distribution P(nu) ~ alpha^nu / (x, x)_nu."""

    alpha: float
    x: float
    cutoff: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not 0.0 < self.x < 1.0:
            raise ValueError(f"x must lie in (0, 1), got {self.x}")
        if self.cutoff < 0 or int(self.cutoff) != self.cutoff:
            raise ValueError(f"cutoff must be a nonnegative integer, got {self.cutoff}")

    @classmethod
    def with_auto_cutoff(cls, alpha: float, x: float) -> "EulerDistributionParams":
        """Choose the truncation so the neglected tail is below 1e-16 relative."""
        if alpha == 0.0:
            return cls(alpha=alpha, x=x, cutoff=0)
        # weight ratio tends to alpha; solve alpha^k ~ 1e-18 * (1 - alpha)
        k = (math.log(1e-18) + math.log1p(-alpha)) / math.log(alpha)
        cutoff = min(MAX_TERMS, max(16, int(math.ceil(k)) + 8))
        return cls(alpha=alpha, x=x, cutoff=cutoff)


def euler_distribution(params: EulerDistributionParams) -> Distribution:
    """Normalized Euler distribution table over nu = 0..cutoff.

    Raises ConvergenceError if the requested cutoff leaves more than
    1e-14 relative tail mass outside the table.
    """
    alpha, x, cutoff = params.alpha, params.x, params.cutoff
    nu = np.arange(cutoff + 1)
    if alpha == 0.0:
        probs = np.zeros(cutoff + 1)
        probs[0] = 1.0
        return Distribution(labels=tuple(nu.tolist()), probs=probs,
                            provenance="analytic", params=params)
    # log (x, x)_nu accumulated once: sum_{j=1..nu} log(1 - x^j)
    j = np.arange(1, cutoff + 1, dtype=float)
    log_factors = np.log(-np.expm1(j * math.log(x)))
    log_poch = np.concatenate(([0.0], np.cumsum(log_factors)))
    log_w = nu * math.log(alpha) - log_poch
    log_w -= log_w.max()
    w = np.exp(log_w)
    total = float(np.sum(w))
    # geometric bound on the truncated tail: ratio -> alpha / (x,x)_inf tail
    tail = w[-1] * alpha / (1.0 - alpha)
    if tail > 1e-14 * total:
        raise ConvergenceError(
            f"cutoff {cutoff} leaves {tail / total:.2e} relative tail mass; increase cutoff"
        )
    return Distribution(labels=tuple(int(v) for v in nu), probs=w / total,
                        provenance="analytic", params=params)


def euler_mean(alpha: float, x: float, tol: float = REL_FLOOR) -> float:
    """Mean of the Euler distribution, sum_{j>=0} alpha x^j / (1 - alpha x^j)."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1) for a convergent mean, got {alpha}")
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    if alpha == 0.0:
        return 0.0
    log_alpha, log_x = math.log(alpha), math.log(x)
    total = 0.0
    j0 = 0
    while j0 < MAX_TERMS:
        j = np.arange(j0, min(j0 + _CHUNK, MAX_TERMS), dtype=float)
        expo = log_alpha + j * log_x
        terms = np.exp(expo) / (-np.expm1(expo))
        total += float(np.sum(terms))
        j0 += len(j)
        if terms[-1] < max(tol * abs(total), ABS_FLOOR):
            return total
    raise ConvergenceError(
        f"Euler-mean series did not converge within {MAX_TERMS} terms "
        f"(alpha={alpha}, x={x})"
    )


def arg_gamma(z: complex) -> float:
    """Continuous principal-branch argument of Gamma(z) via log-Gamma.

    Raises ValueError at the poles (nonpositive real integers).
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == round(z.real):
        raise ValueError(f"Gamma pole at z = {z}")
    return float(_loggamma(z).imag)
