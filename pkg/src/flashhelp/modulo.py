"""Exponents of the modulo-additive channel Y = X + Z (mod K) with a helper.

Fixed-rate help indexes the high-probability noise sequences
{z^t : P(z^t) >= e^{-t theta}}; its failure exponent and the entropy rate
of that set are Legendre-dual to Rényi entropies of the noise law.
Variable-rate help fails only on buffer overflow. The converse is the
weak sphere-packing bound min{D(Q||P) : I(Q) < R - R_h}.

Zero-probability noise symbols are removed before any dual is evaluated,
so all thresholds refer to the support of P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize, special

from . import prob
from ._optim import bisect_increasing, golden_max, root_on_halfline
from .prob import Pmf
from .values import ExponentValue

# provider(R, noise) -> exponent of an ordinary code for the no-help channel
ModuloExponentProvider = Callable[[float, Pmf], ExponentValue]

_THETA_TOL = 1e-12
# relative tolerance for P(z^t) = e^{-t theta} ties, which count as members
TIE_RTOL = 1e-10


@dataclass(frozen=True)
class ModuloParams:
    noise: Pmf

    @property
    def K(self) -> int:
        return self.noise.K

    @property
    def capacity(self) -> float:
        return mutual_information(self.noise)


def _surprisal(p: Pmf) -> np.ndarray:
    """-ln P(z) on the support of p."""
    probs = p.probs
    return -np.log(probs[probs > 0])


def _tilted(a: np.ndarray, lam: float) -> np.ndarray:
    # Q(z) proportional to exp(-lam * a(z)) = P(z)^lam
    w = -lam * a
    w = w - w.max()
    q = np.exp(w)
    return q / q.sum()


def mutual_information(p: Pmf) -> float:
    """I(Q) = ln K - H(Q): uniform input, noise Q."""
    return math.log(p.K) - prob.shannon_entropy(p)


def theta_bounds(p: Pmf) -> tuple[float, float]:
    """(theta_0, theta_inf): below theta_0 the helper set is empty, above theta_inf r saturates."""
    a = _surprisal(p)
    return float(a.min()), float(a.mean())


def r_of_theta(p: Pmf, theta: float) -> float:
    """Entropy rate of the helper set, max{H(Q) : -E_Q ln P <= theta}.

    Returns ``-inf`` when the set is empty (theta < theta_0). Evaluated through
    the dual min_{lam>=0} [lam theta + ln sum P^lam].
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    a = _surprisal(p)
    theta0, theta_inf = float(a.min()), float(a.mean())
    if theta < theta0 - _THETA_TOL * max(1.0, theta0):
        return -math.inf
    if theta >= theta_inf:
        return math.log(a.size)
    if theta <= theta0 + _THETA_TOL * max(1.0, theta0):
        return math.log(int(np.sum(a <= theta0 + _THETA_TOL * max(1.0, theta0))))

    def slope(lam: float) -> float:
        # -d/dlam of the dual objective
        return float(_tilted(a, lam) @ a) - theta

    lam = root_on_halfline(slope)
    return lam * theta + float(special.logsumexp(-lam * a))


def theta_of_r(p: Pmf, r: float) -> float:
    """Smallest theta with r_of_theta(p, theta) >= r (inverse of r_of_theta)."""
    a = _surprisal(p)
    if r > math.log(a.size) + 1e-12:
        raise ValueError(f"r={r} exceeds the log support size {math.log(a.size)}")
    theta0, theta_inf = float(a.min()), float(a.mean())
    if r <= r_of_theta(p, theta0):
        return theta0
    if r >= math.log(a.size):
        return theta_inf
    return bisect_increasing(lambda th: r_of_theta(p, th), r, theta0, theta_inf)


def theta_of_r_dual(p: Pmf, r: float) -> float:
    """sup_{s>=0} [s r + (1-s) H_{1/s}(Z)], evaluated independently of theta_of_r."""
    lp = np.log(p.probs[p.probs > 0])

    def h(s: float) -> float:
        if s == 0.0:
            return float(-lp.max())
        # (1-s) H_{1/s} = -s ln sum P^{1/s}
        return s * r - s * float(special.logsumexp(lp / s))

    hi = 1.0
    while h(2.0 * hi) > h(hi) and hi < 1e8:
        hi *= 2.0
    _, best = golden_max(h, 0.0, 2.0 * hi, tol=1e-12)
    return best


def helper_failure_exponent(p: Pmf, theta: float) -> ExponentValue:
    """min{D(Q||P) : -E_Q ln P >= theta}, the per-segment exponent of Pr{P(z^t) < e^{-t theta}}.

    Zero for theta <= H(P), infinite above ln(1/min P) on the support;
    otherwise the dual sup_{lam>=0} [lam theta - ln sum P^{1-lam}].
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    a = _surprisal(p)
    entropy = prob.shannon_entropy(p)
    if theta <= entropy:
        return ExponentValue.zero()
    theta_max = float(a.max())
    tol = _THETA_TOL * max(1.0, theta_max)
    if theta > theta_max + tol:
        return ExponentValue.infinite()
    if theta >= theta_max - tol:
        # Q uniform over the least likely symbols
        m = int(np.sum(a >= theta_max - tol))
        return ExponentValue.finite(theta_max - math.log(m))

    def slope(lam: float) -> float:
        # d/dlam of lam*theta - ln sum P^(1-lam); Q proportional to P^(1-lam)
        return theta - float(_tilted(a, 1.0 - lam) @ a)

    lam = root_on_halfline(slope)
    value = lam * theta - float(special.logsumexp(-(1.0 - lam) * a))
    return ExponentValue.finite(max(value, 0.0))


def _geometric_member(p: Pmf, beta: float) -> Pmf:
    probs = np.zeros(p.K)
    supp = p.probs > 0
    probs[supp] = _tilted(_surprisal(p), beta)
    return Pmf(probs)


def min_divergence_entropy_at_least(p: Pmf, h: float) -> ExponentValue:
    """min{D(Q||P) : H(Q) >= h}.

    The minimizer lies on the geometric family Q_beta ~ P^beta, beta in [0, 1],
    whose entropy decreases from ln|supp P| to H(P); beta is found by root
    finding on H(Q_beta) = h.
    """
    a = _surprisal(p)
    h_max = math.log(a.size)
    if h > h_max + 1e-12:
        return ExponentValue.infinite()
    if h <= prob.shannon_entropy(p):
        return ExponentValue.zero()
    if h >= h_max:
        return prob.kl_divergence(_geometric_member(p, 0.0), p)

    def gap(beta: float) -> float:
        return prob.shannon_entropy(_tilted(a, beta)) - h

    beta = optimize.brentq(gap, 0.0, 1.0, xtol=1e-15, maxiter=500)
    return prob.kl_divergence(_geometric_member(p, beta), p)


def overflow_exponent(p: Pmf, helper_rate: float, tau: float) -> ExponentValue:
    """Per-segment buffer-overflow exponent min{D(Q||P) : tau H(Q) >= R_h}.

    Multiply by tau for the exponent per full block length.
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if helper_rate < 0:
        raise ValueError("helper rate must be nonnegative")
    return min_divergence_entropy_at_least(p, helper_rate / tau)


def overflow_exponent_dual(p: Pmf, helper_rate: float, tau: float) -> float:
    """sup_{lam>=0} lam [R_h - tau H_{1/(1+lam)}(Z)].

    This equals tau times :func:`overflow_exponent`, i.e. the exponent per full
    block length. Used as a cross-check only; infinite cases return ``inf``.
    """
    a = _surprisal(p)
    if helper_rate / tau > math.log(a.size) + 1e-12:
        return math.inf

    def objective(lam: float) -> float:
        if lam == 0.0:
            return 0.0
        beta = 1.0 / (1.0 + lam)
        return lam * helper_rate - tau * (1.0 + lam) * float(special.logsumexp(-beta * a))

    def slope(lam: float) -> float:
        # derivative of objective: R_h - tau H(Q_beta), Q_beta ~ P^beta
        q = _tilted(a, 1.0 / (1.0 + lam))
        return helper_rate - tau * prob.shannon_entropy(q)

    if slope(0.0) <= 0:
        return 0.0
    lam = root_on_halfline(slope)
    if lam is None:
        return objective(1e12)
    return objective(lam)


def wsp_modulo(p: Pmf, rate: float, helper_rate: float) -> ExponentValue:
    """Weak sphere-packing bound min{D(Q||P) : ln K - H(Q) < R - R_h} for R < ln K."""
    if rate < 0 or helper_rate < 0:
        raise ValueError("rates must be nonnegative")
    if rate >= math.log(p.K):
        return ExponentValue.zero()
    if rate <= helper_rate:
        return ExponentValue.infinite()
    if rate >= helper_rate + mutual_information(p):
        return ExponentValue.zero()
    return min_divergence_entropy_at_least(p, math.log(p.K) - (rate - helper_rate))


def helper_set_member(log_prob: np.ndarray, t: int, theta: float) -> np.ndarray:
    """P(z^t) >= e^{-t theta}, ties included."""
    threshold = -t * theta
    return log_prob >= threshold - TIE_RTOL * max(1.0, abs(threshold))


def helper_set_log_size(p: Pmf, t: int, theta: float, limit: int = prob.MAX_TYPES) -> float:
    """Exact ln |{z^t : P(z^t) >= e^{-t theta}}| by summing type-class sizes."""
    counts = prob.type_array(p.K, t, limit)
    member = helper_set_member(prob.type_log_prob(counts, p), t, theta)
    if not member.any():
        return -math.inf
    return float(special.logsumexp(prob.log_multinomial_counts(counts[member])))


def modulo_e0(rho: float, p: Pmf) -> float:
    """Gallager E0 with uniform input: rho ln K - (1+rho) ln sum P^{1/(1+rho)}."""
    return rho * math.log(p.K) - (1.0 + rho) * prob.log_sum_pow(p, 1.0 / (1.0 + rho))


def modulo_random_coding_exponent(rate: float, p: Pmf) -> ExponentValue:
    """Random-coding exponent of the K-ary modulo-additive channel without help."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if rate >= mutual_information(p):
        return ExponentValue.zero()
    _, best = golden_max(lambda rho: modulo_e0(rho, p) - rho * rate, 0.0, 1.0)
    return ExponentValue.finite(max(best, 0.0))


def modulo_achievable_exponent(
    p: Pmf,
    rate: float,
    helper_rate: float,
    tau: float | None = None,
    provider: ModuloExponentProvider = modulo_random_coding_exponent,
) -> ExponentValue:
    """Exponent of the fixed-rate helper scheme with an error-free first segment.

    The first t = n tau symbols are fully cancelled (tau <= R_h/ln K lets the
    helper index every noise sequence) and carry n tau ln K nats; the rest is
    sent with an ordinary code: (1-tau) E_a((R - tau ln K)/(1-tau)).
    ``tau`` defaults to min(R_h/ln K, 1).
    """
    log_k = math.log(p.K)
    tau_max = helper_rate / log_k
    if tau is None:
        tau = min(tau_max, 1.0)
    if tau < 0 or tau > 1:
        raise ValueError("tau must lie in [0, 1]")
    if tau > tau_max * (1 + 1e-12):
        raise ValueError(f"tau={tau} > R_h/ln K={tau_max}: the helper cannot index every noise sequence")
    if rate <= tau * log_k:
        return ExponentValue.infinite()
    if tau >= 1.0:
        return ExponentValue.zero()
    inner = provider((rate - tau * log_k) / (1.0 - tau), p)
    if inner.is_infinite or tau == 0.0:
        return inner
    return ExponentValue.finite((1.0 - tau) * inner.value, inner.flags)


def tau_sweep(
    p: Pmf,
    rate: float,
    helper_rate: float,
    points: int = 101,
    provider: ModuloExponentProvider = modulo_random_coding_exponent,
) -> tuple[np.ndarray, list[ExponentValue]]:
    """Achievable exponent on a grid of tau in [0, min(R_h/ln K, 1)]."""
    taus = np.linspace(0.0, min(helper_rate / math.log(p.K), 1.0), points)
    return taus, [modulo_achievable_exponent(p, rate, helper_rate, float(t), provider) for t in taus]
