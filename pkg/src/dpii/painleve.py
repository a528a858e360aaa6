"""The discrete Painleve II recurrence in Verblunsky form.

    a_{n+1} + a_{n-1} = -2 (n+1) a_n / (t (1 - a_n^2)),   a_{-1} = -1.

The unique solution staying inside (-1, 1) starts at a_0 = I_1(t)/I_0(t).
Every other start escapes, and escapes fast: a perturbation of a_0 is
amplified roughly like K_n(t)/I_n(t).  This module iterates orbits, measures
residuals, locates the bounded start by shooting, and carries the bound
|a_{n-1}| <= t^n / (2n-1)!! together with its table of successive
approximations b_{n,k}.

The older parametrisation x_n = a_{n-1}, alpha = -2/t is used only for the
bound machinery, where the bounds are naturally stated in terms of alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from mpmath import mp, mpf

from .bessel import GUARD_BITS, _positive_t, _ratio_cf_mpf
from .errors import CalibrationError, DivisionGuardError, PrecisionExhausted
from .extreal import ExtReal, Number, check_precision, to_mpf, wrap_all

MAX_PRECISION = 1 << 15


def to_fraction(x: Number) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, ExtReal):
        x = x.value
    if isinstance(x, mpf):
        man, exp = x.man_exp
        return Fraction(man) * Fraction(2) ** exp
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class PainleveParams:
    t: ExtReal
    N: int
    precision: int

    def __post_init__(self) -> None:
        check_precision(self.precision)
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not self.t.value > 0:
            raise ValueError(f"t must be > 0, got {self.t}")

    @classmethod
    def make(cls, t: Number, N: int, precision: int = 256) -> "PainleveParams":
        precision = check_precision(precision)
        return cls(ExtReal.of(_positive_t(t, precision), precision), int(N), precision)

    @property
    def alpha(self) -> ExtReal:
        """alpha = -2/t, the parameter of the x_n form."""
        return -2 / self.t


@dataclass(frozen=True)
class VerblunskySequence:
    """a_0..a_N, all inside (-1, 1); a_{-1} = -1 is implied, never stored."""

    t: Optional[ExtReal]
    a: tuple[ExtReal, ...]
    precision: int

    def __post_init__(self) -> None:
        for n, v in enumerate(self.a):
            if not abs(v.value) < 1:
                raise ValueError(f"|a_{n}| must be < 1, got {v}")

    @classmethod
    def from_values(cls, values, precision: int, t: Number | None = None) -> "VerblunskySequence":
        return cls(
            None if t is None else ExtReal.of(t, precision),
            wrap_all(values, precision),
            precision,
        )

    @property
    def N(self) -> int:
        return len(self.a) - 1

    def values(self) -> list[mpf]:
        return [v.value for v in self.a]

    def with_value(self, n: int, value: Number) -> "VerblunskySequence":
        a = list(self.a)
        a[n] = ExtReal.of(value, self.precision)
        return VerblunskySequence(self.t, tuple(a), self.precision)

    def __len__(self) -> int:
        return len(self.a)

    def __getitem__(self, n: int) -> ExtReal:
        return self.a[n]


@dataclass(frozen=True)
class EscapeRecord:
    trial_a0: ExtReal
    exit_index: Optional[int]
    exit_side: Optional[int]
    orbit_prefix: Optional[tuple[ExtReal, ...]] = None

    @property
    def survived(self) -> bool:
        return self.exit_index is None

    @property
    def signature(self) -> Optional[int]:
        """exit_side * (-1)^exit_index.

        An orbit that crosses +1 at step m, or just misses it and is flung to
        -infinity at step m+1, gets the same signature, so the signature is
        constant on each side of the bounded start.
        """
        if self.exit_index is None:
            return None
        return self.exit_side * (-1) ** self.exit_index


@dataclass(frozen=True)
class Bracket:
    lo: ExtReal
    hi: ExtReal

    def __post_init__(self) -> None:
        if not (-1 < self.lo.value < self.hi.value < 1):
            raise ValueError(f"bracket must satisfy -1 < lo < hi < 1, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> ExtReal:
        return self.hi - self.lo

    def __contains__(self, x: Number) -> bool:
        v = x.value if isinstance(x, ExtReal) else to_mpf(x, self.lo.precision)
        return self.lo.value <= v <= self.hi.value


def precision_budget(t: Number, N: int, requested: int, guard: int = 64) -> int:
    """Bits needed to follow N steps of the unstable recurrence.

    Errors grow by about (2k/t)^2 per step, so the loss over N steps is
    2 * sum_k log2(2k/t), counting only the growing steps.
    """
    tf = float(to_mpf(t, 64))
    loss = 2 * sum(max(0.0, math.log2(2 * k / tf)) for k in range(1, N + 1))
    return max(int(requested), math.ceil(loss) + guard)


def _orbit(a0: mpf, t: mpf, N: int, wp: int, stop_on_exit: bool = True):
    """Raw orbit a_0..a_k at ``wp`` bits; returns (values, exit_index, exit_side)."""
    with mp.workprec(wp):
        a0 = +a0
        t = +t
        prev, cur = mpf(-1), a0
        values = [cur]
        exit_index = exit_side = None
        if abs(cur) >= 1:
            return values, 0, int(mp.sign(cur))
        for n in range(N):
            denom = t * (1 - cur * cur)
            if denom == 0:
                raise DivisionGuardError(n)
            nxt = -2 * (n + 1) * cur / denom - prev
            prev, cur = cur, nxt
            values.append(cur)
            if exit_index is None and abs(cur) >= 1:
                exit_index, exit_side = n + 1, int(mp.sign(cur))
                if stop_on_exit:
                    break
        return values, exit_index, exit_side


def dpii_forward(
    a0: Number,
    params: PainleveParams,
    stop_on_exit: bool = True,
    precision: int | None = None,
    keep_orbit: bool = True,
) -> EscapeRecord:
    """Iterate the recurrence from (a_{-1}, a_0) = (-1, a0) up to index N.

    With ``stop_on_exit`` the orbit ends at the first |a_n| >= 1.  Otherwise it
    keeps going and raises :class:`DivisionGuardError` if it lands exactly on
    +-1.
    """
    wp = params.precision if precision is None else check_precision(precision)
    a0v = to_mpf(a0, wp)
    if not abs(a0v) < 1:
        raise ValueError(f"|a0| must be < 1, got {a0}")
    values, idx, side = _orbit(a0v, params.t.value, params.N, wp, stop_on_exit)
    return EscapeRecord(
        ExtReal(a0v, wp),
        idx,
        side,
        wrap_all(values, wp) if keep_orbit else None,
    )


def _residual_terms(a: list[mpf], t: mpf, wp: int) -> list[mpf]:
    with mp.workprec(wp):
        half_t = t / 2
        out = []
        for n in range(len(a) - 1):
            before = a[n - 1] if n > 0 else mpf(-1)
            out.append(abs(half_t * (1 - a[n] ** 2) * (a[n + 1] + before) + (n + 1) * a[n]))
        return out


def dpii_residuals(seq: VerblunskySequence) -> list[ExtReal]:
    """|(t/2)(1 - a_n^2)(a_{n+1} + a_{n-1}) + (n+1) a_n| for n = 0..N-1."""
    if len(seq) < 2:
        raise ValueError("residual needs at least a_0 and a_1")
    if seq.t is None:
        raise ValueError("residual needs the parameter t")
    terms = _residual_terms(seq.values(), seq.t.value, seq.precision)
    return list(wrap_all(terms, seq.precision))


def dpii_residual(seq: VerblunskySequence) -> ExtReal:
    return max(dpii_residuals(seq), key=lambda r: r.value)


def _solve_at(t: mpf, N: int, wp: int) -> Optional[list[mpf]]:
    a0 = _ratio_cf_mpf(0, t, wp)
    values, idx, _ = _orbit(a0, t, N, wp)
    return None if idx is not None else values


def bessel_solution(params: PainleveParams, max_precision: int = MAX_PRECISION) -> VerblunskySequence:
    """The bounded solution a_0..a_N, started from a_0 = I_1(t)/I_0(t).

    The forward sweep runs at an elevated precision and is repeated at twice
    that precision; every delivered entry must agree between the two runs to
    the requested relative accuracy.
    """
    p = params.precision
    t = params.t.value
    wp = precision_budget(t, params.N, 0) + p + GUARD_BITS
    while wp <= max_precision:
        coarse = _solve_at(t, params.N, wp)
        fine = _solve_at(t, params.N, 2 * wp) if coarse is not None else None
        if fine is not None:
            with mp.workprec(2 * wp):
                tol = mpf(2) ** -(p + 8)
                if all(abs(c - f) <= tol * abs(f) for c, f in zip(coarse, fine)):
                    return VerblunskySequence(params.t, wrap_all(fine, p), p)
        wp *= 2
    raise PrecisionExhausted(
        f"could not certify a_0..a_{params.N} at t={params.t.to_string(20)} below {max_precision} bits"
    )


@dataclass(frozen=True)
class ShootStep:
    iteration: int
    lo: ExtReal
    hi: ExtReal
    midpoint: EscapeRecord

    @property
    def width(self) -> ExtReal:
        return self.hi - self.lo


@dataclass(frozen=True)
class ShootResult:
    bracket: Bracket
    trace: list[ShootStep]
    scan: list[EscapeRecord]
    low_signature: int
    high_signature: int
    precision: int


def _grid(start: Fraction, stop: Fraction, steps: int) -> list[Fraction]:
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if steps == 1:
        return [start]
    h = (stop - start) / (steps - 1)
    return [start + i * h for i in range(steps)]


def _calibrate(scan: list[EscapeRecord]) -> tuple[int, int, int]:
    """Fix the (low, high) signatures and the index of the first 'high' point."""
    sigs = [r.signature for r in scan]
    if None in sigs:
        raise CalibrationError("a coarse-scan orbit survived to N; scan cannot be classified")
    switches = [i for i in range(1, len(sigs)) if sigs[i] != sigs[i - 1]]
    if len(switches) != 1:
        raise CalibrationError(f"expected one signature switch in coarse scan, found {len(switches)}")
    k = switches[0]
    depth = [r.exit_index for r in scan]
    # coarse grids tie on exit index; the switch pair must reach the top depth
    if max(depth[k - 1], depth[k]) != max(depth):
        raise CalibrationError(f"survival peak {max(depth)} is not at the signature switch (scan point {k})")
    return sigs[0], sigs[-1], k


def shoot(
    params: PainleveParams,
    target_width: Number,
    scan_points: int = 64,
    edge: Number = Fraction(1, 1024),
    max_iterations: int = 10_000,
) -> ShootResult:
    """Bisect on a_0 for the start whose orbit never leaves (-1, 1).

    A coarse scan over [-1 + edge, 1 - edge] fixes which escape signature
    means "a_0 too small" and which means "too large"; bisection then keeps
    one endpoint of each kind.  The final endpoints are re-run at twice the
    precision and must keep their classification.
    """
    wp = precision_budget(params.t, params.N, params.precision)
    width_target = to_mpf(target_width, wp)
    if not width_target > 0:
        raise ValueError(f"target width must be > 0, got {target_width}")
    t = params.t.value
    edge = to_fraction(edge)

    def run(x, prec=wp) -> EscapeRecord:
        xv = to_mpf(x, prec)
        _, idx, side = _orbit(xv, t, params.N, prec)
        return EscapeRecord(ExtReal(xv, prec), idx, side)

    scan = [run(x) for x in _grid(-1 + edge, 1 - edge, scan_points)]
    low_sig, high_sig, k = _calibrate(scan)
    lo, hi = scan[k - 1].trial_a0.value, scan[k].trial_a0.value

    trace: list[ShootStep] = []
    with mp.workprec(wp):
        for it in range(1, max_iterations + 1):
            if hi - lo <= width_target:
                break
            mid = (lo + hi) / 2
            rec = run(mid)
            if rec.signature is None:
                raise PrecisionExhausted(
                    f"midpoint orbit survived to N={params.N}; raise N to resolve width {target_width}"
                )
            if rec.signature == low_sig:
                lo = mid
            else:
                hi = mid
            trace.append(ShootStep(it, ExtReal(lo, wp), ExtReal(hi, wp), rec))
        else:
            raise PrecisionExhausted(f"bisection did not reach width {target_width} in {max_iterations} steps")

    for end, sig in ((lo, low_sig), (hi, high_sig)):
        if run(end, 2 * wp).signature != sig:
            raise PrecisionExhausted(f"classification of {mp.nstr(end, 20)} changed at {2 * wp} bits")
    return ShootResult(Bracket(ExtReal(lo, wp), ExtReal(hi, wp)), trace, scan, low_sig, high_sig, wp)


def escape_map(params: PainleveParams, start: Number, stop: Number, steps: int) -> list[EscapeRecord]:
    """Escape record for each point of an equispaced a_0 grid in (-1, 1)."""
    grid = _grid(to_fraction(start), to_fraction(stop), steps)
    if not all(-1 < x < 1 for x in grid):
        raise ValueError("a0 grid must lie inside (-1, 1)")
    wp = precision_budget(params.t, params.N, params.precision)
    t = params.t.value
    out = []
    for x in grid:
        xv = to_mpf(x, wp)
        _, idx, side = _orbit(xv, t, params.N, wp)
        out.append(EscapeRecord(ExtReal(xv, wp), idx, side))
    return out


def double_factorial(n: int) -> int:
    """n!! with the convention (-1)!! = 0!! = 1."""
    if n < -1:
        raise ValueError(f"double factorial undefined for {n}")
    return math.prod(range(n, 0, -2))


def _bound_fraction(n: int, alpha: Fraction) -> Fraction:
    return (2 / abs(alpha)) ** n / double_factorial(2 * n - 1)


def theorem2_bound(n: int, alpha: Number, precision: int = 256) -> ExtReal:
    """(2/|alpha|)^n / (2n-1)!!, the bound on |x_n| (equivalently on |a_{n-1}|)."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    alpha = to_fraction(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    return ExtReal.of(_bound_fraction(n, alpha), precision)


@dataclass(frozen=True)
class BoundTable:
    """b_{n,k} for 0 <= k <= n <= N, filled by recurrence and by closed form.

    Entries are exact rationals in |alpha|, so the two fills can be compared
    for exact equality.
    """

    alpha: Fraction
    N: int
    closed: dict = field(repr=False)
    recurrence: dict = field(repr=False)

    def entry(self, n: int, k: int, precision: int = 256) -> ExtReal:
        return ExtReal.of(self.closed[n, k], precision)

    @property
    def max_discrepancy(self) -> Fraction:
        return max(abs(self.closed[key] - self.recurrence[key]) for key in self.closed)

    @property
    def agrees(self) -> bool:
        return all(self.closed[key] == self.recurrence[key] for key in self.closed)


def bound_table(alpha: Number, N: int) -> BoundTable:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    alpha = to_fraction(alpha)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    a = abs(alpha)

    @lru_cache(maxsize=None)
    def rec(n: int, k: int) -> Fraction:
        if k == 0:
            return Fraction(1)
        return (rec(n + 1, k - 1) + rec(n - 1, k - 1)) / (a * n)

    closed, recurrence = {}, {}
    for n in range(N + 1):
        for k in range(n + 1):
            closed[n, k] = (2 / a) ** k * Fraction(double_factorial(n - k - 1), double_factorial(n + k - 1))
            recurrence[n, k] = rec(n, k)
    return BoundTable(alpha, N, closed, recurrence)


@dataclass(frozen=True)
class BoundReport:
    bounds: tuple[ExtReal, ...]
    margins: tuple[ExtReal, ...]
    first_violation: Optional[int]

    @property
    def ok(self) -> bool:
        return self.first_violation is None

    @property
    def worst_ratio(self) -> ExtReal:
        """max |a_{n-1}| / bound_n; at most 1 when the bound holds."""
        return max((b - m) / b for b, m in zip(self.bounds, self.margins))


def check_bound(seq: VerblunskySequence) -> BoundReport:
    """Check |a_{n-1}| <= t^n / (2n-1)!! for n = 1..N+1.

    Margins are indexed by n - 1, i.e. margins[j] belongs to a_j.
    """
    if seq.t is None:
        raise ValueError("bound check needs the parameter t")
    p = seq.precision
    bounds, margins = [], []
    first = None
    with mp.workprec(p):
        t = seq.t.value
        for j, a in enumerate(seq.a):
            n = j + 1
            b = t**n / double_factorial(2 * n - 1)
            m = b - abs(a.value)
            bounds.append(ExtReal(b, p))
            margins.append(ExtReal(m, p))
            if first is None and m < 0:
                first = n
    return BoundReport(tuple(bounds), tuple(margins), first)


def stirling_ratio(n: int, alpha: Number, precision: int = 256) -> ExtReal:
    """bound_n * sqrt(2) * (|alpha| n / e)^n, which tends to 1."""
    b = theorem2_bound(n, alpha, precision)
    with mp.workprec(precision):
        av = abs(to_mpf(to_fraction(alpha), precision))
        v = b.value * mp.sqrt(2) * (av * n / mp.e) ** n
    return ExtReal(v, precision)
