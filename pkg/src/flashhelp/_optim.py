"""One-dimensional search helpers shared by the exponent calculators."""

from __future__ import annotations

import math
from typing import Callable

from scipy import optimize

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Maximize a unimodal function on [lo, hi]; returns (argmax, max).

    The endpoints are compared against the interior result, so a maximizer
    sitting on the boundary is found exactly.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    best = max(((x, f(x)), (lo, f(lo)), (hi, f(hi))), key=lambda pair: pair[1])
    return best


def root_on_halfline(g: Callable[[float], float], start: float = 1.0, max_doublings: int = 200) -> float | None:
    """Root of a function decreasing on [0, inf) with g(0) > 0.

    The bracket is grown geometrically until the sign flips. Returns None when
    no sign change is found, i.e. the slope never turns (unbounded objective).
    """
    hi = start
    for _ in range(max_doublings):
        if g(hi) <= 0.0:
            break
        hi *= 2.0
    else:
        return None
    return optimize.brentq(g, 0.0, hi, xtol=1e-14, rtol=1e-15, maxiter=500)


def bisect_increasing(f: Callable[[float], float], target: float, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Smallest x in [lo, hi] with f(x) >= target, for nondecreasing f."""
    for _ in range(400):
        if hi - lo <= tol * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi
