"""Extended-precision real scalars on top of mpmath.

Every number that crosses a public boundary in this package is an
:class:`ExtReal`: an ``mpf`` together with the precision (in bits) it was
computed at.  Binary operations run at the larger of the two precisions.
Internally the algorithms work on raw ``mpf`` values inside
``mp.workprec`` blocks and wrap the results on the way out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Union

from mpmath import mp, mpf

MIN_PRECISION = 64

Number = Union["ExtReal", mpf, int, float, str, Fraction]


def check_precision(precision: int) -> int:
    precision = int(precision)
    if precision < MIN_PRECISION:
        raise ValueError(f"precision must be >= {MIN_PRECISION} bits, got {precision}")
    return precision


def to_mpf(x: Number, precision: int) -> mpf:
    """Convert ``x`` to an ``mpf`` rounded to ``precision`` bits.

    Strings are parsed as decimals at the target precision and fractions are
    divided at that precision, so ``"0.1"`` and ``Fraction(1, 10)`` give the
    correctly rounded binary value rather than the nearest double.
    """
    with mp.workprec(precision):
        if isinstance(x, ExtReal):
            return +x.value
        if isinstance(x, Fraction):
            return mpf(x.numerator) / x.denominator
        if isinstance(x, str):
            s = x.strip()
            if "/" in s:
                return to_mpf(Fraction(s), precision)
            return mpf(s)
        return +mpf(x)


def digits_for(precision: int) -> int:
    """Significant decimal digits matching ``precision`` bits."""
    return math.ceil(precision * math.log10(2))


@total_ordering
@dataclass(frozen=True, eq=False)
class ExtReal:
    value: mpf
    precision: int

    def __post_init__(self) -> None:
        check_precision(self.precision)
        if not isinstance(self.value, mpf):
            object.__setattr__(self, "value", to_mpf(self.value, self.precision))

    @classmethod
    def of(cls, x: Number, precision: int) -> "ExtReal":
        return cls(to_mpf(x, precision), check_precision(precision))

    def at(self, precision: int) -> "ExtReal":
        """The same number rounded to a different precision."""
        return ExtReal.of(self.value, precision)

    def _coerce(self, other: Number) -> tuple[mpf, int]:
        if isinstance(other, ExtReal):
            return other.value, max(self.precision, other.precision)
        return to_mpf(other, self.precision), self.precision

    def _binop(self, other: Number, op, reflected: bool = False) -> "ExtReal":
        v, p = self._coerce(other)
        with mp.workprec(p):
            r = op(v, self.value) if reflected else op(self.value, v)
        return ExtReal(r, p)

    def __add__(self, other: Number) -> "ExtReal":
        return self._binop(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other: Number) -> "ExtReal":
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other: Number) -> "ExtReal":
        return self._binop(other, lambda a, b: a - b, reflected=True)

    def __mul__(self, other: Number) -> "ExtReal":
        return self._binop(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "ExtReal":
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other: Number) -> "ExtReal":
        return self._binop(other, lambda a, b: a / b, reflected=True)

    def __pow__(self, k: int) -> "ExtReal":
        with mp.workprec(self.precision):
            return ExtReal(self.value**k, self.precision)

    def __neg__(self) -> "ExtReal":
        return ExtReal(-self.value, self.precision)

    def __abs__(self) -> "ExtReal":
        return ExtReal(abs(self.value), self.precision)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ExtReal):
            return self.value == other.value
        if isinstance(other, (mpf, int, float)):
            return self.value == other
        return NotImplemented

    def __lt__(self, other: Number) -> bool:
        if isinstance(other, ExtReal):
            return self.value < other.value
        return self.value < to_mpf(other, self.precision)

    def __hash__(self) -> int:
        return hash(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def sign(self) -> int:
        return int(mp.sign(self.value))

    def to_string(self, digits: int | None = None) -> str:
        """Decimal string with ``digits`` significant digits (default: all)."""
        if digits is None:
            digits = digits_for(self.precision)
        return mp.nstr(self.value, digits, strip_zeros=False, min_fixed=-4, max_fixed=digits)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"ExtReal({self.to_string(20)}, precision={self.precision})"


def wrap_all(values, precision: int) -> tuple[ExtReal, ...]:
    return tuple(ExtReal.of(v, precision) for v in values)


def unwrap_all(values) -> list[mpf]:
    return [v.value if isinstance(v, ExtReal) else v for v in values]


def max_precision(values) -> int:
    return max((v.precision for v in values if isinstance(v, ExtReal)), default=MIN_PRECISION)
