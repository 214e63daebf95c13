"""Single-user AWGN quantities with a noise-observing helper.

Covers capacities, the flash-help design formulas (quantizer step, flash
segment rate, Chernoff sphere exponent), the achievable exponent of the
two-segment scheme and the weak sphere-packing (WSP) converse.

Every exponent returned here is normalized per full block length n.
"""

from __future__ import annotations

import enum
import math
import sys
import warnings
from dataclasses import dataclass
from typing import Callable

from . import prob
from ._optim import golden_max
from .values import ExponentValue, emin

# provider(R, gamma) -> exponent of some ordinary (no-help) AWGN code family
OrdinaryExponentProvider = Callable[[float, float], ExponentValue]


class FlashRateWarning(RuntimeWarning):
    """The flash segment carries no rate for the requested design."""


class HelperMode(enum.Enum):
    FIXED = "fixed-rate"
    VARIABLE = "variable-rate"


@dataclass(frozen=True)
class AwgnParams:
    power: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not (self.power > 0 and self.sigma2 > 0):
            raise ValueError("power and noise variance must be positive")

    @property
    def gamma(self) -> float:
        return self.power / self.sigma2

    @classmethod
    def from_snr(cls, gamma: float, sigma2: float = 1.0) -> AwgnParams:
        return cls(power=gamma * sigma2, sigma2=sigma2)


@dataclass(frozen=True)
class FlashDesign:
    helper_rate: float
    tau: float
    slack: float = 0.0
    mode: HelperMode = HelperMode.FIXED

    def __post_init__(self):
        if self.helper_rate < 0:
            raise ValueError("helper rate must be nonnegative")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.mode is HelperMode.FIXED and not self.slack > 0:
            raise ValueError("fixed-rate flash help needs slack s > 0")

    @classmethod
    def from_budget(cls, helper_rate: float, tau: float, budget: float) -> FlashDesign:
        """Design with s = B / tau."""
        return cls(helper_rate, tau, budget / tau)

    def segment_length(self, n: int) -> int:
        t = round(n * self.tau)
        if t < 1:
            raise ValueError(f"block length {n} too short for tau={self.tau}")
        return t

    def step(self, sigma2: float) -> float:
        if self.mode is HelperMode.VARIABLE:
            return variable_rate_step(sigma2, self.helper_rate, self.tau)
        return quantizer_step(sigma2, self.slack, self.helper_rate, self.tau)


def capacity_awgn(gamma: float) -> float:
    """c(gamma) = ln(1 + gamma)/2."""
    if gamma < 0:
        raise ValueError("SNR must be nonnegative")
    return 0.5 * math.log1p(gamma)


def helped_capacity(gamma: float, helper_rate: float) -> float:
    return capacity_awgn(gamma) + helper_rate


def quantizer_step(sigma2: float, s: float, helper_rate: float, tau: float) -> float:
    """Cell size making e^{n R_h} cubes tile the sphere of radius sqrt(t sigma2 (1+s))."""
    if sigma2 <= 0 or s < 0 or helper_rate < 0 or tau <= 0:
        raise ValueError("quantizer_step needs sigma2 > 0, s >= 0, R_h >= 0, tau > 0")
    return math.sqrt(2.0 * math.pi * math.e * sigma2 * (1.0 + s)) * math.exp(-helper_rate / tau)


def variable_rate_step(sigma2: float, helper_rate: float, tau: float) -> float:
    return quantizer_step(sigma2, 0.0, helper_rate, tau)


def flash_rate(helper_rate: float, tau: float, s: float, power: float, sigma2: float) -> float:
    """Error-free rate R' of the with-help segment, per full block length.

    R' = R_h + (tau/2) ln(P / (sigma2 (1+s))). A nonpositive value means the
    segment carries nothing; 0.0 is returned with a FlashRateWarning.
    """
    r = helper_rate + 0.5 * tau * math.log(power / (sigma2 * (1.0 + s)))
    if r <= 0:
        warnings.warn(f"flash segment rate {r:.6g} <= 0; reporting zero", FlashRateWarning, stacklevel=2)
        return 0.0
    return r


def chernoff_sphere_exponent(s: float) -> float:
    """Per-segment Chernoff exponent (s - ln(1+s))/2 of the sphere-overflow event."""
    if not s > 0:
        raise ValueError("slack s must be positive")
    return 0.5 * (s - math.log1p(s))


def gallager_e0(rho: float, gamma: float) -> float:
    """Gallager function of the i.i.d. Gaussian ensemble, (rho/2) ln(1 + gamma/(1+rho))."""
    return 0.5 * rho * math.log1p(gamma / (1.0 + rho))


NEAR_CAPACITY_GAP = 1e-5


def default_ordinary_exponent(rate: float, gamma: float) -> ExponentValue:
    """Random-coding exponent max_{0<=rho<=1} [E0(rho) - rho R] of the Gaussian ensemble."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    gap = capacity_awgn(gamma) - rate
    if gap <= 0:
        return ExponentValue.zero()
    if gap < NEAR_CAPACITY_GAP:
        # the optimal rho ~ gap is below any search tolerance; use the series
        # E0(rho) = rho c - a rho^2 + b rho^3 + ..., maximized term by term
        a = gamma / (2.0 * (1.0 + gamma))
        b = (1.0 - (1.0 + gamma) ** -2) / 4.0
        return ExponentValue.finite(gap**2 / (4.0 * a) + b * gap**3 / (8.0 * a**3))
    _, best = golden_max(lambda rho: gallager_e0(rho, gamma) - rho * rate, 0.0, 1.0)
    return ExponentValue.finite(max(best, 0.0))


def achievable_exponent(
    rate: float,
    gamma: float,
    helper_rate: float,
    tau: float | None = None,
    s: float | None = None,
    provider: OrdinaryExponentProvider = default_ordinary_exponent,
) -> ExponentValue:
    """Exponent of the two-segment flash-help scheme.

    With ``tau`` and ``s`` given, returns
    min{tau (s - ln(1+s))/2, (1-tau) E_a(dR/(1-tau))} where dR = R - R' is
    clamped at zero (no data left for the second segment -> that branch is
    infinite). With both omitted, returns the tau -> 0, s = B/tau, B -> inf
    limit: infinite below R_h, E_a(R - R_h) up to R_h + c(gamma), zero beyond.
    """
    if (tau is None) != (s is None):
        raise ValueError("give both tau and s, or neither for the optimized limit")
    if tau is None:
        if rate < helper_rate:
            return ExponentValue.infinite()
        if rate >= helper_rate + capacity_awgn(gamma):
            return ExponentValue.zero()
        return provider(rate - helper_rate, gamma)

    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    flash_branch = ExponentValue.finite(tau * chernoff_sphere_exponent(s))
    excess = rate - flash_rate(helper_rate, tau, s, gamma, 1.0)
    if excess <= 0:
        return flash_branch
    coded_branch = provider(excess / (1.0 - tau), gamma)
    if not coded_branch.is_infinite:
        coded_branch = ExponentValue.finite((1.0 - tau) * coded_branch.value, coded_branch.flags)
    return emin(flash_branch, coded_branch)


def worst_case_variance(rate: float, helper_rate: float, power: float) -> float | None:
    """Infimum of noise variances under which R exceeds the helped capacity.

    Returns P/(e^{2(R-R_h)} - 1), or None when R <= R_h (no such variance).
    """
    if not power > 0:
        raise ValueError("power must be positive")
    if rate <= helper_rate:
        return None
    return power / math.expm1(2.0 * (rate - helper_rate))


def _wsp_branch(rate: float, capacity: float, snr: float, helper_rate: float) -> ExponentValue:
    # shared with the MAC bound: one rate constraint against one capacity
    if rate <= helper_rate:
        return ExponentValue.infinite()
    if rate >= helper_rate + capacity:
        return ExponentValue.zero()
    v = snr / math.expm1(2.0 * (rate - helper_rate))
    if math.isinf(v):
        # subnormal rate gap: the exponent is finite but beyond double range
        return ExponentValue.finite(sys.float_info.max)
    return ExponentValue.finite(prob.gaussian_kl_variance_ratio(v))


def wsp_awgn(rate: float, gamma: float, helper_rate: float) -> ExponentValue:
    """Weak sphere-packing upper bound on the helped AWGN reliability function."""
    if not gamma > 0:
        raise ValueError("SNR must be positive")
    if rate < 0 or helper_rate < 0:
        raise ValueError("rates must be nonnegative")
    return _wsp_branch(rate, capacity_awgn(gamma), gamma, helper_rate)

