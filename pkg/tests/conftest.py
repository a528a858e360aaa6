from fractions import Fraction

import pytest
from mpmath import mp, mpf


def series_oracle(n: int, t, terms: int = 120) -> tuple[Fraction, Fraction]:
    """Exact rational partial sum of the I_n series and a bound on the tail.

    Independent of the package: plain fractions, fixed term count, and a
    geometric tail bound (twice the first omitted term once the ratio < 1/2).
    """
    t = Fraction(t)
    q = t * t / 4
    term = Fraction(1) if n == 0 else t / 2
    total = term
    for k in range(1, terms):
        term = term * q / (k * (k + n))
        total += term
    nxt = term * q / (terms * (terms + n))
    assert 2 * q < terms * (terms + n)
    return total, 2 * nxt


def frac_to_mpf(x: Fraction, prec: int) -> mpf:
    with mp.workprec(prec):
        return mpf(x.numerator) / x.denominator


def rel_err(x, y, prec: int = 2048):
    x = getattr(x, "value", x)
    y = getattr(y, "value", y)
    with mp.workprec(prec):
        return abs(x - y) / abs(y)


def abs_err(x, y, prec: int = 2048):
    x = getattr(x, "value", x)
    y = getattr(y, "value", y)
    with mp.workprec(prec):
        return abs(x - y)


@pytest.fixture(autouse=True)
def _reset_mp():
    prec = mp.prec
    yield
    mp.prec = prec


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
