"""Orthogonal polynomials on the unit circle with real Verblunsky coefficients.

Polynomials are dense ascending coefficient vectors.  With real coefficients
the reversed polynomial Phi_n^*(z) = z^n Phi_n(1/z) is just the reversed
vector, and the Szego step reads

    Phi_{n+1}(z) = z Phi_n(z) - a_n Phi_n^*(z).

The verifiers at the bottom check identities that hold either for every
admissible coefficient sequence (the expansion of Phi_n^*) or only for
solutions of the discrete Painleve II recurrence (the derivative identity).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from mpmath import mp, mpf

from .bessel import GUARD_BITS, MomentSequence, _positive_t, _series_mpf
from .errors import ConvergenceError, PositivityError
from .extreal import ExtReal, Number, check_precision, to_mpf, unwrap_all, wrap_all
from .painleve import VerblunskySequence

MAX_NODES = 1 << 16


@dataclass(frozen=True)
class MonicPolynomial:
    coeffs: tuple[ExtReal, ...]

    def __post_init__(self) -> None:
        if not self.coeffs or self.coeffs[-1].value != 1:
            raise ValueError("monic polynomial needs leading coefficient exactly 1")

    @classmethod
    def from_values(cls, values, precision: int) -> "MonicPolynomial":
        return cls(wrap_all(values, precision))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def values(self) -> list[mpf]:
        return [c.value for c in self.coeffs]

    def __call__(self, z: Number) -> ExtReal:
        p = max(c.precision for c in self.coeffs)
        zv = to_mpf(z, p)
        with mp.workprec(p):
            return ExtReal(mp.polyval(self.values()[::-1], zv), p)


def _szego(phi: list[mpf], a: mpf) -> list[mpf]:
    n = len(phi) - 1
    rev = phi[::-1]
    out = [-a * rev[0]]
    out += [phi[j - 1] - a * rev[j] for j in range(1, n + 1)]
    out.append(phi[n])
    return out


def szego_step(phi: MonicPolynomial, a_n: ExtReal | Number) -> MonicPolynomial:
    """Phi_{n+1} from Phi_n and a_n; the constant term comes out as -a_n."""
    p = max(c.precision for c in phi.coeffs)
    if isinstance(a_n, ExtReal):
        p = max(p, a_n.precision)
    a = to_mpf(a_n, p)
    if not abs(a) < 1:
        raise ValueError(f"|a_n| must be < 1, got {a_n}")
    with mp.workprec(p):
        return MonicPolynomial.from_values(_szego(phi.values(), a), p)


def reversed_polynomial(phi: MonicPolynomial | Sequence[ExtReal]) -> tuple[ExtReal, ...]:
    """Coefficients of z^n conj(phi)(1/z): the reversed vector for real input."""
    coeffs = phi.coeffs if isinstance(phi, MonicPolynomial) else tuple(phi)
    return coeffs[::-1]


def _polynomials(a: list[mpf], wp: int) -> list[list[mpf]]:
    with mp.workprec(wp):
        phis = [[mpf(1)]]
        for an in a:
            phis.append(_szego(phis[-1], an))
        return phis


def opuc_polynomials(seq: VerblunskySequence) -> list[MonicPolynomial]:
    """Phi_0..Phi_{N+1} generated from a_0..a_N."""
    return [MonicPolynomial.from_values(c, seq.precision) for c in _polynomials(seq.values(), seq.precision)]


@dataclass(frozen=True)
class KappaSequence:
    kappa_sq: tuple[ExtReal, ...]

    def __len__(self) -> int:
        return len(self.kappa_sq)

    def __getitem__(self, n: int) -> ExtReal:
        return self.kappa_sq[n]


def _kappa_sq(a: list[mpf], wp: int) -> list[mpf]:
    with mp.workprec(wp):
        out = [mpf(1)]
        for an in a:
            out.append(out[-1] / (1 - an * an))
        return out


def kappa_from_verblunsky(seq: VerblunskySequence) -> KappaSequence:
    """kappa_0^2 = 1 and kappa_{n+1}^2 = kappa_n^2 / (1 - a_n^2), up to n = N+1."""
    return KappaSequence(wrap_all(_kappa_sq(seq.values(), seq.precision), seq.precision))


def kappa_product_form(seq: VerblunskySequence) -> KappaSequence:
    """kappa_n^2 = prod_{k<n} (1 - a_k^2)^{-1}, evaluated as one product each."""
    a = seq.values()
    with mp.workprec(seq.precision):
        out = [1 / mp.fprod([1 - a[k] ** 2 for k in range(n)]) for n in range(len(a) + 1)]
    return KappaSequence(wrap_all(out, seq.precision))


@dataclass(frozen=True)
class BSequence:
    """B_n for n = 2..N+1; ``B[i]`` holds B_{i+2}."""

    t: ExtReal
    B: tuple[ExtReal, ...]
    kappa_form: tuple[ExtReal, ...]

    def __getitem__(self, n: int) -> ExtReal:
        if n < 2:
            raise IndexError(f"B_n starts at n = 2, got {n}")
        return self.B[n - 2]

    def max_form_discrepancy(self) -> ExtReal:
        """Largest relative gap between the product form and the kappa-ratio form."""
        return max((abs(b - k) / b for b, k in zip(self.B, self.kappa_form)), key=lambda x: x.value)


def b_sequence(seq: VerblunskySequence) -> BSequence:
    """B_n = (t/2)(1 - a_{n-2}^2)(1 - a_{n-1}^2) = (t/2) kappa_{n-2}^2 / kappa_n^2."""
    if seq.t is None:
        raise ValueError("B_n needs the parameter t")
    p = seq.precision
    a = seq.values()
    ksq = _kappa_sq(a, p)
    with mp.workprec(p):
        half_t = seq.t.value / 2
        prod = [half_t * (1 - a[n - 2] ** 2) * (1 - a[n - 1] ** 2) for n in range(2, len(a) + 1)]
        ratio = [half_t * ksq[n - 2] / ksq[n] for n in range(2, len(a) + 1)]
    return BSequence(seq.t, wrap_all(prod, p), wrap_all(ratio, p))


def _apply_functional(coeffs: list[mpf], mu: list[mpf], shift: int = 0) -> mpf:
    return mp.fsum(c * mu[j + shift] for j, c in enumerate(coeffs))


def levinson_verblunsky(moments: MomentSequence) -> VerblunskySequence:
    """Recover a_0..a_{N-1} from mu_0..mu_N.

    Integrating the Szego step against the measure, with the integral of
    Phi_n^* equal to 1/kappa_n^2, gives a_n = kappa_n^2 * L(z Phi_n), where L
    maps z^j to mu_j.  Each step costs O(n) and no matrix is formed.
    """
    if moments.N < 1:
        raise ValueError("need at least mu_0 and mu_1")
    p = moments.precision
    wp = p + GUARD_BITS
    mu = unwrap_all(moments.mu)
    a = []
    with mp.workprec(wp):
        phi = [mpf(1)]
        ksq = mpf(1)
        for n in range(moments.N):
            an = ksq * _apply_functional(phi, mu, shift=1)
            if not abs(an) < 1:
                raise PositivityError(n, mp.nstr(an, 20))
            a.append(an)
            phi = _szego(phi, an)
            ksq = ksq / (1 - an * an)
    return VerblunskySequence(moments.t, wrap_all(a, p), p)


@dataclass(frozen=True)
class MeasureSpec:
    """The probability measure v(theta) dtheta with v = e^{t cos theta} / (2 pi I_0(t))."""

    t: ExtReal
    precision: int

    @classmethod
    def make(cls, t: Number, precision: int = 256) -> "MeasureSpec":
        precision = check_precision(precision)
        return cls(ExtReal.of(_positive_t(t, precision), precision), precision)

    def _norm(self, wp: int) -> mpf:
        with mp.workprec(wp):
            return 1 / (2 * mp.pi * _series_mpf(0, self.t.value, wp))

    def density(self, theta: Number) -> ExtReal:
        wp = self.precision + GUARD_BITS
        th = to_mpf(theta, wp)
        with mp.workprec(wp):
            v = mp.exp(self.t.value * mp.cos(th)) * self._norm(wp)
        return ExtReal.of(v, self.precision)

    def trapezoid_moments(self, N: int, nodes: int) -> list[mpf]:
        """mu_0..mu_N by the M-node periodic trapezoid rule, renormalised to mu_0 = 1."""
        if nodes < 1:
            raise ValueError("need at least one node")
        wp = self.precision + GUARD_BITS
        with mp.workprec(wp):
            norm = self._norm(wp)
            h = 2 * mp.pi / nodes
            cos_table = [mp.cos(h * j) for j in range(nodes)]
            weights = [h * mp.exp(self.t.value * c) * norm for c in cos_table]
            # cos(n theta_j) = cos_table[n*j mod M]
            raw = [mp.fsum(weights[j] * cos_table[(n * j) % nodes] for j in range(nodes)) for n in range(N + 1)]
            return [r / raw[0] for r in raw]


def moments_by_quadrature(
    spec: MeasureSpec,
    N: int,
    tolerance: Number,
    max_nodes: int = MAX_NODES,
) -> MomentSequence:
    """Moments of the measure by node doubling until successive rules agree."""
    tol = to_mpf(tolerance, spec.precision)
    nodes = 16
    while nodes < 2 * N + 2:
        nodes *= 2
    prev = spec.trapezoid_moments(N, nodes)
    while True:
        nodes *= 2
        if nodes > max_nodes:
            raise ConvergenceError(f"quadrature moments did not converge to {tolerance} within {max_nodes} nodes")
        cur = spec.trapezoid_moments(N, nodes)
        with mp.workprec(spec.precision + GUARD_BITS):
            if max(abs(c - q) for c, q in zip(cur, prev)) < tol:
                break
        prev = cur
    cur[0] = mpf(1)
    return MomentSequence(spec.t, wrap_all(cur, spec.precision), spec.precision)


def _max_abs(values) -> mpf:
    return max((abs(v) for v in values), default=mpf(0))


def lemma1_residuals(seq: VerblunskySequence) -> list[ExtReal]:
    """max |coeff| of Phi_n' - n Phi_{n-1} - B_n Phi_{n-2}, for n = 1..N+1."""
    if len(seq) < 2:
        raise ValueError("need at least a_0 and a_1")
    if seq.t is None:
        raise ValueError("derivative identity needs the parameter t")
    p = seq.precision
    a = seq.values()
    phis = _polynomials(a, p)
    out = []
    with mp.workprec(p):
        half_t = seq.t.value / 2
        for n in range(1, len(phis)):
            phi = phis[n]
            diff = [j * phi[j] - n * phis[n - 1][j - 1] for j in range(1, n + 1)]
            if n >= 2:
                b = half_t * (1 - a[n - 2] ** 2) * (1 - a[n - 1] ** 2)
                for j, c in enumerate(phis[n - 2]):
                    diff[j] -= b * c
            out.append(_max_abs(diff))
    return list(wrap_all(out, p))


def verify_lemma1(seq: VerblunskySequence) -> ExtReal:
    """Largest coefficient of Phi_n' - n Phi_{n-1} - B_n Phi_{n-2} over all n.

    Zero up to roundoff exactly when the coefficients solve the Painleve
    recurrence with parameter ``seq.t``.
    """
    return max(lemma1_residuals(seq), key=lambda r: r.value)


def verify_phi_star_expansion(seq: VerblunskySequence) -> ExtReal:
    """Compare Phi_n^* with -sum_k (kappa_k^2/kappa_n^2) a_{k-1} Phi_k, a_{-1} = -1.

    Holds for every admissible real sequence, not just Painleve solutions.
    """
    p = seq.precision
    a = seq.values()
    phis = _polynomials(a, p)
    ksq = _kappa_sq(a, p)
    worst = mpf(0)
    with mp.workprec(p):
        for n, phi in enumerate(phis):
            rhs = [mpf(0)] * (n + 1)
            for k in range(n + 1):
                a_prev = mpf(-1) if k == 0 else a[k - 1]
                w = ksq[k] / ksq[n] * a_prev
                for j, c in enumerate(phis[k]):
                    rhs[j] -= w * c
            worst = max(worst, _max_abs(r - s for r, s in zip(phi[::-1], rhs)))
    return ExtReal(worst, p)


def moment_recurrence_residuals(moments: MomentSequence, t: Number) -> list[ExtReal]:
    """(n-1) mu_{n-1} + (t/2)(mu_n - mu_{n-2}) for n = 2..N (signed)."""
    if moments.N < 2:
        raise ValueError("need at least mu_0, mu_1, mu_2")
    p = moments.precision
    mu = unwrap_all(moments.mu)
    tv = to_mpf(t, p)
    with mp.workprec(p):
        out = [(n - 1) * mu[n - 1] + tv / 2 * (mu[n] - mu[n - 2]) for n in range(2, moments.N + 1)]
    return list(wrap_all(out, p))


def verify_moment_recurrence(moments: MomentSequence, t: Number) -> ExtReal:
    return max((abs(r) for r in moment_recurrence_residuals(moments, t)), key=lambda r: r.value)


@dataclass(frozen=True)
class GramReport:
    deviation: tuple[tuple[ExtReal, ...], ...]
    nodes: Optional[int]

    @property
    def max_deviation(self) -> ExtReal:
        return max((d for row in self.deviation for d in row), key=lambda d: d.value)


def gram_check(
    seq: VerblunskySequence,
    spec: MeasureSpec,
    N: int | None = None,
    M: int | None = None,
    tolerance: Number | None = None,
) -> GramReport:
    """|<Phi_n, Phi_m> - delta_{mn}/kappa_n^2| for m, n <= N under the measure.

    The inner products use trapezoid moments: a fixed M-node rule if ``M`` is
    given, otherwise node doubling down to ``tolerance``.  For an even measure
    <z^j, z^k> = mu_{|j-k|}, so each entry is a double sum over coefficients.
    """
    N = len(seq) if N is None else N
    if N > len(seq):
        raise ValueError(f"N={N} needs a_0..a_{N - 1}, sequence has {len(seq)} entries")
    p = seq.precision
    if M is not None:
        mu = spec.trapezoid_moments(N, M)
    else:
        tol = tolerance if tolerance is not None else mpf(2) ** (32 - p)
        mu = unwrap_all(moments_by_quadrature(spec, N, tol).mu)
    a = seq.values()[:N]
    phis = _polynomials(a, p)
    ksq = _kappa_sq(a, p)
    rows = []
    with mp.workprec(p + GUARD_BITS):
        for n in range(N + 1):
            row = []
            for m in range(N + 1):
                ip = mp.fsum(
                    cj * ck * mu[abs(j - k)] for j, cj in enumerate(phis[n]) for k, ck in enumerate(phis[m])
                )
                target = 1 / ksq[n] if m == n else 0
                row.append(ExtReal.of(abs(ip - target), p))
            rows.append(tuple(row))
    return GramReport(tuple(rows), M)
