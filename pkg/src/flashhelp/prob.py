"""Probability primitives: PMFs, entropies, divergences, types, Gaussian tails.

All logarithms are natural; every rate and entropy is in nats. The
convention ``0 ln 0 = 0`` lives in :func:`_xlogy` and nowhere else.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import special

from .values import ExponentValue

PMF_TOL = 1e-12
MAX_TYPES = 10**7


class EnumerationGuardError(RuntimeError):
    """Raised when a type enumeration would exceed the configured size limit."""


class InfiniteEntropyError(ValueError):
    """Negative Rényi order on a PMF with zero entries (the entropy diverges)."""


class UnderflowWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Pmf:
    """Probability vector over the alphabet {0, ..., K-1}."""

    probs: np.ndarray

    def __init__(self, probs: Sequence[float] | np.ndarray):
        arr = np.array(probs, dtype=float).reshape(-1)
        if arr.size < 2:
            raise ValueError("alphabet size must be at least 2")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError(f"PMF entries must be finite and nonnegative: {arr}")
        total = float(math.fsum(arr))
        if abs(total - 1.0) > PMF_TOL:
            raise ValueError(f"PMF entries sum to {total!r}, not 1 (tolerance {PMF_TOL})")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def uniform(cls, K: int) -> Pmf:
        return cls(np.full(K, 1.0 / K))

    @property
    def K(self) -> int:
        return self.probs.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    @property
    def log_probs(self) -> np.ndarray:
        """Natural logs of the entries, ``-inf`` on zero entries."""
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def reduced(self) -> Pmf:
        """The PMF restricted to its support (not a valid K-ary PMF in general)."""
        return Pmf(self.probs[self.support])

    def __len__(self) -> int:
        return self.K

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pmf):
            return NotImplemented
        return self.K == other.K and bool(np.array_equal(self.probs, other.probs))

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        return f"Pmf({self.probs.tolist()})"


@dataclass(frozen=True)
class EmpiricalType:
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("type counts must be nonnegative")
        if sum(self.counts) < 1:
            raise ValueError("type must describe a sequence of length >= 1")

    @property
    def t(self) -> int:
        return sum(self.counts)

    @property
    def K(self) -> int:
        return len(self.counts)

    def to_pmf(self) -> Pmf:
        return Pmf(np.asarray(self.counts, dtype=float) / self.t)


def _as_probs(p) -> np.ndarray:
    return p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)


def _xlogy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # x * ln(y) with 0 * ln(anything) = 0
    return special.xlogy(x, y)


def shannon_entropy(p: Pmf | np.ndarray) -> float:
    probs = _as_probs(p)
    return float(-np.sum(_xlogy(probs, probs)))


def kl_divergence(q: Pmf, p: Pmf) -> ExponentValue:
    """D(q || p) in nats; infinite when q puts mass outside the support of p."""
    qa, pa = _as_probs(q), _as_probs(p)
    if qa.shape != pa.shape:
        raise ValueError(f"alphabet mismatch: {qa.size} vs {pa.size}")
    if np.any((qa > 0) & (pa == 0)):
        return ExponentValue.infinite()
    m = qa > 0
    d = float(np.sum(qa[m] * (np.log(qa[m]) - np.log(pa[m]))))
    return ExponentValue.finite(max(d, 0.0))


def log_sum_pow(p: Pmf | np.ndarray, order: float) -> float:
    """ln sum_z p(z)^order over the support of p."""
    probs = _as_probs(p)
    lp = np.log(probs[probs > 0])
    return float(special.logsumexp(order * lp))


def renyi_entropy(p: Pmf | np.ndarray, order: float) -> float:
    """Rényi entropy of the given order, in nats.

    Order 1 is the Shannon limit and order 0 is the log support size. Negative
    orders diverge on PMFs with zero entries and raise InfiniteEntropyError.
    """
    probs = _as_probs(p)
    if order == 1.0:
        return shannon_entropy(probs)
    pos = probs[probs > 0]
    if order < 0 and pos.size < probs.size:
        raise InfiniteEntropyError(f"Rényi entropy of order {order} is infinite for a PMF with zeros")
    if order == 0.0:
        return math.log(pos.size)
    delta = order - 1.0
    lp = np.log(pos)
    if abs(delta) < 0.5:
        # ln sum p^(1+d) = log1p(sum p*expm1(d ln p)); stable near the Shannon limit
        inner = float(np.sum(pos * np.expm1(delta * lp)))
        return -math.log1p(inner) / delta
    return float(special.logsumexp(order * lp)) / (1.0 - order)


def gaussian_kl_variance_ratio(v: float) -> float:
    """D(N(0, v s^2) || N(0, s^2)) = (v - ln v - 1)/2."""
    if not v > 0:
        raise ValueError(f"variance ratio must be positive, got {v!r}")
    return 0.5 * ((v - 1.0) - math.log(v))


def count_types(K: int, t: int) -> int:
    return math.comb(t + K - 1, K - 1)


def _check_guard(K: int, t: int, limit: int) -> None:
    if K < 2 or t < 1:
        raise ValueError("need K >= 2 and t >= 1")
    n = count_types(K, t)
    if n > limit:
        raise EnumerationGuardError(f"{n} types for K={K}, t={t} exceeds the limit {limit}")


def type_array(K: int, t: int, limit: int = MAX_TYPES) -> np.ndarray:
    """All compositions of t into K nonnegative parts, one per row."""
    _check_guard(K, t, limit)

    def build(k: int, total: int) -> np.ndarray:
        if k == 1:
            return np.array([[total]], dtype=np.int64)
        blocks = []
        for first in range(total, -1, -1):
            rest = build(k - 1, total - first)
            blocks.append(np.column_stack([np.full(rest.shape[0], first, dtype=np.int64), rest]))
        return np.vstack(blocks)

    return build(K, t)


def type_enumerate(K: int, t: int, limit: int = MAX_TYPES) -> Iterator[EmpiricalType]:
    _check_guard(K, t, limit)

    def rec(k: int, total: int):
        if k == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in rec(k - 1, total - first):
                yield (first,) + rest

    for counts in rec(K, t):
        yield EmpiricalType(counts)


def log_multinomial_counts(counts: np.ndarray) -> np.ndarray:
    """Vectorized ln(t! / prod n_z!) over the last axis."""
    counts = np.asarray(counts, dtype=float)
    t = counts.sum(axis=-1)
    return special.gammaln(t + 1.0) - special.gammaln(counts + 1.0).sum(axis=-1)


def log_multinomial(tp: EmpiricalType) -> float:
    return float(log_multinomial_counts(np.asarray(tp.counts)))


def type_log_prob(counts: np.ndarray, p: Pmf) -> np.ndarray:
    """ln P(z^t) for any sequence of the given type(s); -inf if a zero symbol appears."""
    counts = np.asarray(counts, dtype=float)
    return _xlogy(counts, p.probs).sum(axis=-1)


def gaussian_sphere_tail(t: int, s: float) -> float:
    """Pr{sum_{i<=t} Z_i^2 > t sigma^2 (1+s)} for i.i.d. Gaussian Z (scale free).

    Equal to the chi-square(t) survival function at t(1+s). A result that
    underflows to 0 is returned as 0.0 together with an UnderflowWarning.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if s < 0:
        raise ValueError("slack s must be nonnegative")
    if math.isinf(s):
        return 0.0
    tail = float(special.gammaincc(t / 2.0, t * (1.0 + s) / 2.0))
    if tail == 0.0:
        warnings.warn(f"sphere tail underflowed to 0 at t={t}, s={s}", UnderflowWarning, stacklevel=2)
    return tail


def chernoff_sphere_bound(t: int, s: float) -> float:
    """exp{-(t/2)[s - ln(1+s)]}, the Chernoff bound on the sphere tail."""
    return math.exp(-0.5 * t * (s - math.log1p(s)))
