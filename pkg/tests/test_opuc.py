import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import matrix, mp, mpf

from dpii.bessel import MomentSequence, bessel_ratio_cf, moments_from_bessel
from dpii.errors import ConvergenceError, PositivityError
from dpii.extreal import ExtReal
from dpii.opuc import (
    MeasureSpec,
    MonicPolynomial,
    b_sequence,
    gram_check,
    kappa_from_verblunsky,
    kappa_product_form,
    lemma1_residuals,
    levinson_verblunsky,
    moment_recurrence_residuals,
    moments_by_quadrature,
    opuc_polynomials,
    reversed_polynomial,
    szego_step,
    verify_lemma1,
    verify_moment_recurrence,
    verify_phi_star_expansion,
)
from dpii.painleve import PainleveParams, VerblunskySequence, bessel_solution

from conftest import abs_err, rel_err

P = 256

with mp.workprec(300):
    R0_1 = mpf("0.446389965896534507047681795192642669776253147")
    MU2_1 = mpf("0.107220068206930985904636409614714660447493705")

admissible = st.lists(
    st.floats(min_value=-0.95, max_value=0.95, allow_nan=False),
    min_size=1,
    max_size=14,
)


def one():
    return MonicPolynomial.from_values([1], P)


@pytest.fixture(scope="module")
def solution40():
    return bessel_solution(PainleveParams.make(2, 40, 512))


def toeplitz_verblunsky(mu, N, prec=600):
    """a_0..a_{N-1} by solving the orthogonality conditions as a linear system."""
    out = []
    with mp.workprec(prec):
        for n in range(1, N + 1):
            # sum_j c_j mu_{|j-k|} = 0 for k < n, c_n = 1
            A = matrix(n, n)
            b = matrix(n, 1)
            for k in range(n):
                for j in range(n):
                    A[k, j] = mu[abs(j - k)]
                b[k] = -mu[abs(n - k)]
            c = mp.lu_solve(A, b)
            out.append(-c[0])
    return out


# --- Szego recursion ------------------------------------------------------


def test_first_two_steps():
    phi1 = szego_step(one(), "0.5")
    assert phi1.values() == [mpf("-0.5"), 1]
    phi2 = szego_step(phi1, "0.25")
    # z^2 - a0 (1 - a1) z - a1
    assert phi2.values() == [mpf("-0.25"), mpf("-0.375"), 1]


def test_reflectionless_step_shifts():
    phi = MonicPolynomial.from_values(["0.3", "-0.2", 1], P)
    assert szego_step(phi, 0).coeffs == (ExtReal.of(0, P),) + phi.coeffs


def test_step_rejects_inadmissible():
    with pytest.raises(ValueError):
        szego_step(one(), "1")


def test_monic_invariant():
    with pytest.raises(ValueError):
        MonicPolynomial.from_values([1, 2], P)


@settings(max_examples=50, deadline=None)
@given(admissible)
def test_constant_term_is_minus_a(a):
    phis = opuc_polynomials(VerblunskySequence.from_values(a, P))
    for n, phi in enumerate(phis[1:]):
        assert phi.coeffs[0].value == -ExtReal.of(a[n], P).value
        assert phi.coeffs[-1].value == 1
        assert phi.degree == n + 1


def test_reversed_examples():
    assert [c.value for c in reversed_polynomial(one())] == [1]
    phi1 = szego_step(one(), "0.5")
    assert [c.value for c in reversed_polynomial(phi1)] == [1, mpf("-0.5")]


@settings(max_examples=30, deadline=None)
@given(admissible)
def test_reversal_is_involution(a):
    for phi in opuc_polynomials(VerblunskySequence.from_values(a, P)):
        assert reversed_polynomial(reversed_polynomial(phi)) == phi.coeffs


def test_evaluation_at_zero():
    phi = szego_step(szego_step(one(), "0.5"), "0.25")
    assert phi(0).value == mpf("-0.25")


# --- kappa and B ------------------------------------------------------------


def test_kappa_zero_sequence():
    k = kappa_from_verblunsky(VerblunskySequence.from_values([0] * 5, P))
    assert all(x.value == 1 for x in k.kappa_sq)


def test_kappa_first_entries():
    seq = VerblunskySequence.from_values(["0.5", "0.25"], P)
    k = kappa_from_verblunsky(seq)
    assert k[0].value == 1
    with mp.workprec(P):
        assert k[1].value == 1 / (1 - mpf("0.25"))
        assert k[2].value == k[1].value / (1 - mpf("0.0625"))


@settings(max_examples=40, deadline=None)
@given(admissible)
def test_kappa_ladder_matches_product(a):
    seq = VerblunskySequence.from_values(a, P)
    ladder = kappa_from_verblunsky(seq).kappa_sq
    prod = kappa_product_form(seq).kappa_sq
    vals = [x.value for x in ladder]
    assert all(y >= x > 0 for x, y in zip(vals, vals[1:]))
    for x, y in zip(ladder, prod):
        assert rel_err(x, y) < mpf(2) ** (16 - P)


def test_b_forms_agree(solution40):
    B = b_sequence(solution40)
    assert B.max_form_discrepancy().value < mpf(2) ** (16 - 512)
    assert all(b.value > 0 for b in B.B)
    with mp.workprec(512):
        a0, a1 = solution40[0].value, solution40[1].value
        assert B[2].value == 1 * (1 - a0**2) * (1 - a1**2)
    with pytest.raises(IndexError):
        B[1]


# --- Levinson ------------------------------------------------------------------


def test_levinson_lebesgue_gives_zeros():
    mu = MomentSequence.from_values([1] + [0] * 8, P)
    assert all(a.value == 0 for a in levinson_verblunsky(mu).a)


def test_levinson_first_coefficient():
    seq = levinson_verblunsky(moments_from_bessel(2, 12, P))
    assert len(seq) == 12
    assert rel_err(seq[0], bessel_ratio_cf(0, 2, P)) < mpf(2) ** (16 - P)


@pytest.mark.parametrize("t", ["0.5", 2, 5])
def test_levinson_against_linear_system(t):
    mu = moments_from_bessel(t, 12, P)
    got = levinson_verblunsky(mu)
    ref = toeplitz_verblunsky([m.value for m in mu.mu], 12)
    for g, r in zip(got.a, ref):
        assert abs_err(g, r) < mpf(2) ** (24 - P)


@pytest.mark.parametrize("t", [1, 2, 5])
def test_levinson_reproduces_painleve_solution(t):
    lev = levinson_verblunsky(moments_from_bessel(t, 31, 512))
    sol = bessel_solution(PainleveParams.make(t, 30, 512))
    assert len(lev) == len(sol) == 31
    for x, y in zip(lev.a, sol.a):
        assert abs_err(x, y) < mpf("1e-100")


def test_levinson_positivity_failure():
    # Toeplitz [[1, .9, .1], [.9, 1, .9], [.1, .9, 1]] is indefinite
    mu = MomentSequence.from_values([1, "0.9", "0.1"], P)
    with pytest.raises(PositivityError) as err:
        levinson_verblunsky(mu)
    assert err.value.index == 1


# --- quadrature ----------------------------------------------------------------


def test_density_positive_symmetric_normalised():
    spec = MeasureSpec.make(2, P)
    for th in ("0", "0.7", "2", "3.14"):
        v = spec.density(th)
        assert v.value > 0
        with mp.workprec(P):
            assert rel_err(v, spec.density(2 * mp.pi - mpf(th))) < mpf(2) ** (8 - P)
    with mp.workprec(P):
        M = 64
        total = sum(spec.density(2 * mp.pi * j / M).value for j in range(M)) * 2 * mp.pi / M
    assert abs(total - 1) < mpf(2) ** (16 - P)


@pytest.mark.parametrize("t", [1, 2])
def test_quadrature_matches_bessel(t):
    q = moments_by_quadrature(MeasureSpec.make(t, P), 30, mpf(10) ** -60)
    b = moments_from_bessel(t, 30, P)
    assert q[0].value == 1
    for x, y in zip(q.mu, b.mu):
        assert abs_err(x, y) < mpf(10) ** -60


def test_quadrature_uniform_limit():
    q = moments_by_quadrature(MeasureSpec.make("1e-20", 128), 5, "1e-30")
    assert q[0].value == 1
    assert all(abs(m.value) < mpf("1e-19") for m in q.mu[1:])


def test_quadrature_node_cap():
    with pytest.raises(ConvergenceError):
        moments_by_quadrature(MeasureSpec.make(2, P), 10, "1e-70", max_nodes=64)


# --- verifiers -----------------------------------------------------------------


def test_lemma1_on_solution(solution40):
    assert verify_lemma1(solution40).value < mpf(2) ** (64 - 512)


def test_lemma1_negative_control(solution40):
    bad = solution40.with_value(1, solution40[1] + "1e-2")
    res = lemma1_residuals(bad)
    assert verify_lemma1(bad).value >= mpf("1e-3")
    # the n = 2 residual is exactly |a0(1-a1) - 2a0 + (t/2)(1-a0^2)(1-a1^2)|
    with mp.workprec(512):
        a0, a1 = bad[0].value, bad[1].value
        aux = abs(a0 * (1 - a1) - 2 * a0 + (1 - a0**2) * (1 - a1**2))
    assert abs_err(res[1], aux) < mpf(2) ** -500


def test_lemma1_n2_identity_follows_from_first_step():
    # pick a0, build a1 from 2a0 = t(1-a0^2)(1-a1); n = 2 residual vanishes
    t = mpf(3)
    with mp.workprec(P):
        a0 = mpf("0.4")
        a1 = 1 - 2 * a0 / (t * (1 - a0**2))
    seq = VerblunskySequence.from_values([a0, a1], P, t=t)
    assert lemma1_residuals(seq)[1].value < mpf(2) ** (8 - P)


def test_phi_star_small_cases():
    seq = VerblunskySequence.from_values(["0.5"], P)
    assert verify_phi_star_expansion(seq).value < mpf(2) ** (4 - P)


def test_phi_star_on_solution(solution40):
    assert verify_phi_star_expansion(solution40).value < mpf("1e-60")


@settings(max_examples=40, deadline=None)
@given(admissible)
def test_generality_split(a):
    seq = VerblunskySequence.from_values(a, 512, t=2)
    assert verify_phi_star_expansion(seq).value < mpf("1e-60")


def test_lemma1_fails_for_random_sequence():
    seq = VerblunskySequence.from_values(["0.3", "0.2", "-0.1", "0.05"], 512, t=2)
    assert verify_lemma1(seq).value > mpf("1e-3")
    assert verify_phi_star_expansion(seq).value < mpf("1e-60")


def test_moment_recurrence_bessel():
    mu = moments_from_bessel(2, 60, 512)
    assert verify_moment_recurrence(mu, 2).value < mpf(2) ** (32 - 512)


def test_moment_recurrence_n2_at_t1():
    with mp.workprec(300):
        assert abs(R0_1 + (MU2_1 - 1) / 2) < mpf(10) ** -44
    mu = moments_from_bessel(1, 2, P)
    assert verify_moment_recurrence(mu, 1).value < mpf(2) ** (32 - P)


def test_moment_recurrence_linear_response():
    t = 2
    mu = moments_from_bessel(t, 8, P)
    base = moment_recurrence_residuals(mu, t)
    eps = mpf(2) ** -20
    vals = [m.value for m in mu.mu]
    with mp.workprec(P):
        vals[3] += eps
    moved = moment_recurrence_residuals(MomentSequence.from_values(vals, P), t)
    # index i holds n = i + 2; mu_3 enters n = 3, 4, 5 with weights t/2, 3, -t/2
    delta = {n: moved[n - 2].value - base[n - 2].value for n in range(2, 9)}
    with mp.workprec(P):
        assert abs(delta[3] - eps * t / 2) < mpf(2) ** (8 - P)
        assert abs(delta[4] - 3 * eps) < mpf(2) ** (8 - P)
        assert abs(delta[5] + eps * t / 2) < mpf(2) ** (8 - P)
        assert all(abs(delta[n]) < mpf(2) ** (8 - P) for n in (2, 6, 7, 8))


def test_gram_small_entries(solution40):
    spec = MeasureSpec.make(2, 512)
    g = gram_check(solution40, spec, 1, M=256)
    assert g.deviation[0][0].value < mpf(2) ** -500
    assert g.deviation[1][0].value < mpf(2) ** -500


def test_gram_full_matrix(solution40):
    g = gram_check(solution40, MeasureSpec.make(2, 512), 10)
    assert len(g.deviation) == 11
    assert g.max_deviation.value < mpf("1e-25")


def test_gram_with_too_few_nodes_is_visible(solution40):
    g = gram_check(solution40, MeasureSpec.make(2, 512), 10, M=12)
    assert g.max_deviation.value > mpf("1e-10")
