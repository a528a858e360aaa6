"""Modified Bessel functions I_n(t) of integer order at extended precision.

Three routes are provided and checked against one another:

* ``bessel_i_series``: ascending power series for I_0 and I_1 (the anchor).
* ``bessel_ratio_cf``: backward continued fraction for I_{n+1}/I_n.
* ``bessel_sequence_miller``: Miller's backward recurrence for I_0..I_N,
  normalised against the series value of I_0.

All of them use the three-term relation I_{n-1} - I_{n+1} = (2n/t) I_n, under
which I_n is the minimal solution as n grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath import mp, mpf

from .errors import ConvergenceError, PrecisionExhausted
from .extreal import ExtReal, Number, check_precision, to_mpf, wrap_all

GUARD_BITS = 32
MAX_CF_DEPTH = 1 << 22
MAX_MILLER_START = 1 << 20


def _positive_t(t: Number, precision: int) -> mpf:
    tv = to_mpf(t, precision)
    if not tv > 0:
        raise ValueError(f"t must be > 0, got {t}")
    return tv


@dataclass(frozen=True)
class BesselSequence:
    t: ExtReal
    values: tuple[ExtReal, ...]
    precision: int

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> ExtReal:
        return self.values[n]


@dataclass(frozen=True)
class MomentSequence:
    """Trigonometric moments mu_0 = 1, mu_1, ..., mu_N of a real even measure."""

    t: ExtReal | None
    mu: tuple[ExtReal, ...]
    precision: int

    def __post_init__(self) -> None:
        if not self.mu:
            raise ValueError("moment sequence is empty")
        if self.mu[0].value != 1:
            raise ValueError(f"mu_0 must be exactly 1, got {self.mu[0]}")

    @classmethod
    def from_values(cls, values, precision: int, t: Number | None = None) -> "MomentSequence":
        return cls(
            None if t is None else ExtReal.of(t, precision),
            wrap_all(values, precision),
            precision,
        )

    @property
    def N(self) -> int:
        return len(self.mu) - 1

    def __len__(self) -> int:
        return len(self.mu)

    def __getitem__(self, n: int) -> ExtReal:
        return self.mu[n]


def _series_mpf(n: int, t: mpf, wp: int) -> mpf:
    with mp.workprec(wp):
        q = t * t / 4
        term = mpf(1) if n == 0 else t / 2
        total = term
        k = 0
        eps = mpf(2) ** (-wp)
        while True:
            k += 1
            term = term * q / (k * (k + n))
            total += term
            # once the term ratio is below 1/2 the remaining tail is < term
            if term < eps * total and 2 * q < (k + 1) * (k + 1 + n):
                return total


def bessel_i_series(n: int, t: Number, precision: int) -> ExtReal:
    """I_0(t) or I_1(t) from the ascending series.

    Summation stops once a term drops below one ulp of the partial sum.  The
    stopping term is added and the remaining tail is smaller than it, so the
    result is good to a few ulps at the working precision (32 guard bits).
    """
    precision = check_precision(precision)
    if n not in (0, 1):
        raise ValueError(f"series evaluation only supports n in {{0, 1}}, got {n}")
    wp = precision + GUARD_BITS
    tv = _positive_t(t, wp)
    return ExtReal.of(_series_mpf(n, tv, wp), precision)


def _cf_mpf(n: int, t: mpf, depth: int, wp: int) -> mpf:
    with mp.workprec(wp):
        two_over_t = 2 / t
        r = mpf(0)
        for k in range(n + depth, n - 1, -1):
            r = 1 / ((k + 1) * two_over_t + r)
        return r


def _ratio_cf_mpf(n: int, t: mpf, wp: int, max_depth: int = MAX_CF_DEPTH) -> mpf:
    depth = 16
    prev = _cf_mpf(n, t, depth, wp)
    tol = mpf(2) ** (12 - wp)
    while True:
        depth *= 2
        if depth > max_depth:
            raise ConvergenceError(f"continued fraction for r_{n}({t}) did not stabilise by depth {max_depth}")
        cur = _cf_mpf(n, t, depth, wp)
        with mp.workprec(wp):
            if abs(cur - prev) <= tol * cur:
                return cur
        prev = cur


def bessel_ratio_cf(n: int, t: Number, precision: int, max_depth: int = MAX_CF_DEPTH) -> ExtReal:
    """r_n = I_{n+1}(t) / I_n(t) via r_n = 1 / (2(n+1)/t + r_{n+1}).

    The tail is seeded with 0 at depth D and D is doubled until two successive
    evaluations agree to the working precision.
    """
    precision = check_precision(precision)
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    wp = precision + GUARD_BITS
    tv = _positive_t(t, wp)
    return ExtReal.of(_ratio_cf_mpf(n, tv, wp, max_depth), precision)


def _log2_miller_error(start: int, n: int, t: float) -> float:
    # I_m/K_m ~ 2 (t/2)^{2m} / (m! (m-1)!) and K_n/I_n ~ n! (n-1)! / (2 (t/2)^{2n})
    n = max(n, 1)
    lt = math.log(t / 2)
    im_km = math.log(2) + 2 * start * lt - math.lgamma(start + 1) - math.lgamma(start) + t * t / (4 * (start + 1))
    kn_in = math.lgamma(n + 1) + math.lgamma(n) - math.log(2) - 2 * n * lt
    return (im_km + max(kn_in, 0.0)) / math.log(2)


def miller_start_index(t: float, N: int, bits: int, max_start: int = MAX_MILLER_START) -> int:
    """Smallest start index whose backward sweep is accurate to ``bits`` at index N."""
    m = max(N + 2, int(math.ceil(math.e * t / 2)) + 2)
    while _log2_miller_error(m, N, t) > -bits:
        m += 1 + m // 16
        if m > max_start:
            raise PrecisionExhausted(
                f"Miller start index for t={t}, N={N} exceeds cap {max_start} at {bits} bits"
            )
    return m + 4


def _miller_mpf(t: mpf, N: int, wp: int, max_start: int = MAX_MILLER_START) -> list[mpf]:
    """Unnormalised minimal solution y_0..y_N (any positive multiple of I_n)."""
    start = miller_start_index(float(t), N, wp + 16, max_start)
    with mp.workprec(wp + start.bit_length() + 8):
        two_over_t = 2 / t
        y_next, y = mpf(0), mpf(1)
        out = [mpf(0)] * (N + 1)
        if start <= N:
            out[start] = y
        for k in range(start, 0, -1):
            y_prev = k * two_over_t * y + y_next
            y_next, y = y, y_prev
            if k - 1 <= N:
                out[k - 1] = y
        scale = 1 / out[0]
        return [v * scale for v in out]


def bessel_sequence_miller(t: Number, N: int, precision: int, max_start: int = MAX_MILLER_START) -> BesselSequence:
    """I_0(t)..I_N(t) by Miller's algorithm, normalised to the series I_0."""
    precision = check_precision(precision)
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    wp = precision + GUARD_BITS
    tv = _positive_t(t, wp)
    ratios = _miller_mpf(tv, N, wp, max_start)
    i0 = _series_mpf(0, tv, wp)
    with mp.workprec(wp):
        values = [i0 * r for r in ratios]
    return BesselSequence(ExtReal.of(tv, precision), wrap_all(values, precision), precision)


def moments_from_bessel(t: Number, N: int, precision: int) -> MomentSequence:
    """mu_n = I_n(t) / I_0(t) for n = 0..N, with mu_0 exactly 1."""
    precision = check_precision(precision)
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    wp = precision + GUARD_BITS
    tv = _positive_t(t, wp)
    ratios = _miller_mpf(tv, N, wp)
    ratios[0] = mpf(1)
    return MomentSequence(ExtReal.of(tv, precision), wrap_all(ratios, precision), precision)


def bessel_asymptotic(n: int, t: Number, precision: int = 128) -> ExtReal:
    """Leading large-order behaviour (2 pi n)^(-1/2) (e t / 2n)^n of I_n(t).

    A sanity cross-check only; nothing in the main path uses it.
    """
    precision = check_precision(precision)
    if n < 1:
        raise ValueError(f"asymptotic form needs n >= 1, got {n}")
    tv = _positive_t(t, precision)
    with mp.workprec(precision):
        v = (mp.e * tv / (2 * n)) ** n / mp.sqrt(2 * mp.pi * n)
    return ExtReal(v, precision)
