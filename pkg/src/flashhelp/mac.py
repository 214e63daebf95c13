"""Two-user Gaussian multiple-access channel with a helper split between the encoders."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .awgn import _wsp_branch, capacity_awgn
from .values import ExponentValue, emin

OUTSIDE_VALIDITY = "outside_validity"


class RateClass(enum.Enum):
    INFINITE = "infinite"
    FINITE = "finite"
    ZERO = "zero"


@dataclass(frozen=True)
class MacParams:
    p1: float
    p2: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not (self.p1 > 0 and self.p2 > 0 and self.sigma2 > 0):
            raise ValueError("powers and noise variance must be positive")

    @property
    def gamma1(self) -> float:
        return self.p1 / self.sigma2

    @property
    def gamma2(self) -> float:
        return self.p2 / self.sigma2

    @classmethod
    def from_snr(cls, gamma1: float, gamma2: float, sigma2: float = 1.0) -> MacParams:
        return cls(gamma1 * sigma2, gamma2 * sigma2, sigma2)


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("rates must be nonnegative")

    @property
    def total(self) -> float:
        return self.r1 + self.r2

    def swapped(self) -> RatePair:
        return RatePair(self.r2, self.r1)


@dataclass(frozen=True)
class HelpSplit:
    h1: float
    h2: float

    def __post_init__(self):
        if self.h1 < 0 or self.h2 < 0:
            raise ValueError("help rates must be nonnegative")

    @property
    def total(self) -> float:
        return self.h1 + self.h2


def in_mac_region(rp: RatePair, mac: MacParams) -> bool:
    return in_helped_mac_region(rp, mac, 0.0)


def in_helped_mac_region(rp: RatePair, mac: MacParams, helper_rate: float) -> bool:
    """Membership in C(R_h), the closed region C_0 shifted by R_h on every face."""
    if helper_rate < 0:
        raise ValueError("helper rate must be nonnegative")
    return (
        rp.r1 <= capacity_awgn(mac.gamma1) + helper_rate
        and rp.r2 <= capacity_awgn(mac.gamma2) + helper_rate
        and rp.total <= capacity_awgn(mac.gamma1 + mac.gamma2) + helper_rate
    )


def rc_condition_holds(rp: RatePair, gamma: float) -> bool:
    """Both rates below c(gamma/2), where the symmetric closed form applies."""
    edge = capacity_awgn(gamma / 2.0)
    return rp.r1 < edge and rp.r2 < edge


def rc_exponent_symmetric(rp: RatePair, gamma: float) -> ExponentValue:
    """min{c(g/2) - R1, c(g/2) - R2, c(g) - R1 - R2}, floored at zero.

    The value carries the ``outside_validity`` flag when either rate is not
    below c(gamma/2); it is still computed from the same expression.
    """
    half = capacity_awgn(gamma / 2.0)
    value = min(half - rp.r1, half - rp.r2, capacity_awgn(gamma) - rp.total)
    flags = () if rc_condition_holds(rp, gamma) else (OUTSIDE_VALIDITY,)
    return ExponentValue.finite(max(value, 0.0), flags)


def helped_rc_exponent_symmetric(rp: RatePair, gamma: float, split: HelpSplit) -> ExponentValue:
    """Random-coding exponent of the rates left over after the help pipes.

    Each user's residual rate is R_i - R_hi clamped at zero. When both
    residuals vanish every message bit rides the pipes and the value is infinite.
    """
    residual = RatePair(max(rp.r1 - split.h1, 0.0), max(rp.r2 - split.h2, 0.0))
    if residual.r1 == 0.0 and residual.r2 == 0.0:
        return ExponentValue.infinite()
    return rc_exponent_symmetric(residual, gamma)


def optimal_help_split(rp: RatePair, helper_rate: float) -> HelpSplit:
    """Help allocation equalizing the two single-user terms of the helped exponent.

    R_h1 = (R1 - R2 + R_h)/2 clamped to [0, R_h]; R_h2 takes the rest.
    """
    if helper_rate < 0:
        raise ValueError("helper rate must be nonnegative")
    h1 = min(max(0.5 * (rp.r1 - rp.r2 + helper_rate), 0.0), helper_rate)
    return HelpSplit(h1, helper_rate - h1)


def wsp_branches(rp: RatePair, mac: MacParams, helper_rate: float) -> tuple[ExponentValue, ExponentValue, ExponentValue]:
    """(E1(R1), E2(R2), E3(R1+R2)): one single-user WSP branch per MAC constraint."""
    g1, g2 = mac.gamma1, mac.gamma2
    return (
        _wsp_branch(rp.r1, capacity_awgn(g1), g1, helper_rate),
        _wsp_branch(rp.r2, capacity_awgn(g2), g2, helper_rate),
        _wsp_branch(rp.total, capacity_awgn(g1 + g2), g1 + g2, helper_rate),
    )


def wsp_mac(rp: RatePair, mac: MacParams, helper_rate: float) -> ExponentValue:
    """min{E1(R1), E2(R2), E3(R1+R2)}: the weak sphere-packing bound for the helped MAC."""
    return emin(*wsp_branches(rp, mac, helper_rate))


def classify_rate_point(rp: RatePair, mac: MacParams, helper_rate: float) -> RateClass:
    """Which of the three exponent regions a rate pair lies in.

    Infinite when R1 + R2 <= R_h; zero unless (R1, R2) is strictly inside
    C(R_h); finite otherwise. The boundary conventions match :func:`wsp_mac`.
    """
    if rp.total <= helper_rate:
        return RateClass.INFINITE
    strictly_inside = (
        rp.r1 < capacity_awgn(mac.gamma1) + helper_rate
        and rp.r2 < capacity_awgn(mac.gamma2) + helper_rate
        and rp.total < capacity_awgn(mac.gamma1 + mac.gamma2) + helper_rate
    )
    return RateClass.FINITE if strictly_inside else RateClass.ZERO


def symmetric_gamma(mac: MacParams) -> float:
    if not math.isclose(mac.gamma1, mac.gamma2, rel_tol=1e-12):
        raise ValueError("the symmetric random-coding exponent needs gamma1 == gamma2")
    return mac.gamma1
