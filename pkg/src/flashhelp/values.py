"""Extended nonnegative reals used as the codomain of every exponent function."""

from __future__ import annotations

import enum
import math
from functools import total_ordering


class Kind(enum.Enum):
    ZERO = "zero"
    FINITE = "finite"
    INFINITE = "infinite"


@total_ordering
class ExponentValue:
    """A nonnegative exponent in nats, possibly exactly infinite.

    ``Zero`` and ``Finite(0.0)`` are the same value. Optional ``flags`` carry
    diagnostics (e.g. ``"outside_validity"``) and never take part in
    comparisons or hashing.
    """

    __slots__ = ("_value", "flags")

    def __init__(self, value: float, flags: frozenset[str] | set[str] | tuple = ()):
        value = float(value)
        if math.isnan(value) or value < 0.0:
            raise ValueError(f"exponent must be a nonnegative real or +inf, got {value!r}")
        self._value = value
        self.flags = frozenset(flags)

    @classmethod
    def finite(cls, value: float, flags=()) -> ExponentValue:
        if math.isinf(value):
            raise ValueError("use ExponentValue.infinite() for +inf")
        # tiny negative values come from cancellation in closed forms
        if -1e-13 < value < 0.0:
            value = 0.0
        return cls(value, flags)

    @classmethod
    def infinite(cls, flags=()) -> ExponentValue:
        return cls(math.inf, flags)

    @classmethod
    def zero(cls, flags=()) -> ExponentValue:
        return cls(0.0, flags)

    @property
    def value(self) -> float:
        return self._value

    @property
    def kind(self) -> Kind:
        if self._value == 0.0:
            return Kind.ZERO
        if math.isinf(self._value):
            return Kind.INFINITE
        return Kind.FINITE

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self._value)

    @property
    def is_zero(self) -> bool:
        return self._value == 0.0

    def with_flags(self, *flags: str) -> ExponentValue:
        return ExponentValue(self._value, self.flags | set(flags))

    def scaled(self, factor: float) -> ExponentValue:
        """Multiply by a positive constant (e.g. a segment fraction)."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return ExponentValue(self._value * factor, self.flags)

    def __float__(self) -> float:
        return self._value

    def _other(self, other) -> float:
        if isinstance(other, ExponentValue):
            return other._value
        if isinstance(other, (int, float)):
            return float(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self._value == o

    def __lt__(self, other) -> bool:
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self._value < o

    def __hash__(self) -> int:
        return hash(self._value)

    def __repr__(self) -> str:
        if self.is_infinite:
            return "ExponentValue.infinite()"
        if self.is_zero:
            return "ExponentValue.zero()"
        return f"ExponentValue.finite({self._value!r})"

    def __str__(self) -> str:
        return "inf" if self.is_infinite else repr(self._value)


def emin(*values: ExponentValue) -> ExponentValue:
    """Minimum of exponent values, merging the flags of the winner."""
    return min(values, key=lambda v: v.value)
