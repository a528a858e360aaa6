"""The bounded solution of discrete Painleve II, three ways, at high precision."""

__version__ = "0.1.0"

from .bessel import (
    BesselSequence,
    MomentSequence,
    bessel_asymptotic,
    bessel_i_series,
    bessel_ratio_cf,
    bessel_sequence_miller,
    moments_from_bessel,
)
from .errors import (
    CalibrationError,
    ConvergenceError,
    DivisionGuardError,
    NumericsError,
    PositivityError,
    PrecisionExhausted,
)
from .extreal import ExtReal
from .opuc import (
    BSequence,
    KappaSequence,
    MeasureSpec,
    MonicPolynomial,
    b_sequence,
    gram_check,
    kappa_product_form,
    kappa_from_verblunsky,
    levinson_verblunsky,
    lemma1_residuals,
    moments_by_quadrature,
    opuc_polynomials,
    reversed_polynomial,
    szego_step,
    verify_lemma1,
    verify_moment_recurrence,
    verify_phi_star_expansion,
)
from .painleve import (
    BoundTable,
    Bracket,
    EscapeRecord,
    PainleveParams,
    ShootResult,
    VerblunskySequence,
    bessel_solution,
    bound_table,
    check_bound,
    dpii_forward,
    dpii_residual,
    dpii_residuals,
    escape_map,
    shoot,
    stirling_ratio,
    theorem2_bound,
)
