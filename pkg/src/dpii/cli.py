"""Command-line front end: ``dpii solve | shoot | verify | stability``.

Output is CSV (``#``-prefixed metadata lines, then a header row) or JSON
(``{"metadata": ..., "rows": [...]}``).  Numbers are written as decimal
strings with as many significant digits as the precision carries, so two
runs with the same arguments produce identical bytes.

Exit codes: 0 ok, 1 a verify check failed, 2 invalid arguments,
3 precision exhausted, 4 shooting calibration failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from mpmath import mp, mpf

from . import __version__
from .bessel import moments_from_bessel
from .errors import CalibrationError, ConvergenceError, PositivityError, PrecisionExhausted
from .extreal import MIN_PRECISION, ExtReal, digits_for, to_mpf
from .opuc import (
    MeasureSpec,
    b_sequence,
    gram_check,
    kappa_from_verblunsky,
    kappa_product_form,
    levinson_verblunsky,
    verify_lemma1,
    verify_moment_recurrence,
    verify_phi_star_expansion,
)
from .painleve import (
    PainleveParams,
    VerblunskySequence,
    bessel_solution,
    bound_table,
    check_bound,
    dpii_residual,
    dpii_residuals,
    escape_map,
    shoot,
    stirling_ratio,
    to_fraction,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_PRECISION, EXIT_CALIBRATION = 0, 1, 2, 3, 4

SOLVE_COLUMNS = ["n", "a_n", "mu_n", "kappa_sq_n", "bound_n", "residual_n"]
SHOOT_COLUMNS = ["iteration", "lo", "hi", "width", "exit_index", "exit_side"]
VERIFY_COLUMNS = ["check", "residual", "threshold", "status"]
STABILITY_COLUMNS = ["a0", "exit_index", "exit_side"]
STIRLING_ORDERS = (25, 50, 100, 200)


@dataclass
class RunConfig:
    command: str
    t: Optional[str]
    N: int
    precision: int
    method: str = "bessel"
    fmt: str = "csv"
    out: Optional[str] = None
    width: str = "1e-25"
    start: Optional[str] = None
    stop: Optional[str] = None
    steps: int = 101
    input: Optional[str] = None

    def validate(self) -> None:
        if self.t is not None:
            try:
                t = Fraction(self.t)
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"--t must be a number, got {self.t!r}") from None
            if t <= 0:
                raise ValueError(f"--t must satisfy t > 0 (got {self.t}); only the t > 0 domain is supported")
        elif self.input is None:
            raise ValueError("--t is required")
        if self.N < 1:
            raise ValueError(f"--n must be >= 1, got {self.N}")
        if self.precision < MIN_PRECISION:
            raise ValueError(f"--precision must be >= {MIN_PRECISION}, got {self.precision}")
        if self.command == "solve" and self.method not in ("bessel", "levinson"):
            raise ValueError(f"solve supports --method bessel or levinson, got {self.method}")
        if self.command == "shoot" and not Fraction(self.width) > 0:
            raise ValueError(f"--width must be > 0, got {self.width}")
        if self.command == "stability":
            if self.steps < 1:
                raise ValueError(f"--steps must be >= 1, got {self.steps}")
            for name, v in (("--from", self.start), ("--to", self.stop)):
                if v is None:
                    raise ValueError(f"{name} is required")
                if not -1 < Fraction(v) < 1:
                    raise ValueError(f"{name} must lie inside (-1, 1), got {v}")

    @property
    def digits(self) -> int:
        return digits_for(self.precision)

    def params(self) -> PainleveParams:
        return PainleveParams.make(self.t, self.N, self.precision)


def fmt_num(x, digits: int) -> str:
    if isinstance(x, ExtReal):
        return x.to_string(digits)
    return ExtReal.of(x, max(MIN_PRECISION, 4 * digits)).to_string(digits)


def render(metadata: dict, columns: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        doc = {"metadata": metadata, "rows": [dict(zip(columns, r)) for r in rows]}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    for key, value in metadata.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _metadata(cfg: RunConfig, **extra) -> dict:
    meta = {"command": cfg.command, "t": cfg.t, "N": cfg.N, "precision": cfg.precision}
    meta.update(extra)
    meta["version"] = __version__
    return meta


def solution_table(cfg: RunConfig) -> tuple[dict, list[list]]:
    # one extra coefficient so the residual at n = N is defined
    params = PainleveParams.make(cfg.t, cfg.N + 1, cfg.precision)
    if cfg.method == "bessel":
        seq = bessel_solution(params)
    else:
        seq = levinson_verblunsky(moments_from_bessel(cfg.t, cfg.N + 2, cfg.precision))
    mu = moments_from_bessel(cfg.t, cfg.N, cfg.precision)
    ksq = kappa_from_verblunsky(seq)
    res = dpii_residuals(seq)
    bounds = check_bound(seq).bounds
    d = cfg.digits
    rows = [
        [n, fmt_num(seq[n], d), fmt_num(mu[n], d), fmt_num(ksq[n], d), fmt_num(bounds[n], d), fmt_num(res[n], d)]
        for n in range(cfg.N + 1)
    ]
    return _metadata(cfg, method=cfg.method), rows


def cmd_solve(cfg: RunConfig) -> tuple[str, int]:
    meta, rows = solution_table(cfg)
    return render(meta, SOLVE_COLUMNS, rows, cfg.fmt), EXIT_OK


def cmd_shoot(cfg: RunConfig) -> tuple[str, int]:
    result = shoot(cfg.params(), cfg.width)
    d = cfg.digits
    rows = [
        [
            s.iteration,
            fmt_num(s.lo, d),
            fmt_num(s.hi, d),
            fmt_num(s.width, d),
            s.midpoint.exit_index,
            s.midpoint.exit_side,
        ]
        for s in result.trace
    ]
    b = result.bracket
    rows.append(["final", fmt_num(b.lo, d), fmt_num(b.hi, d), fmt_num(b.width, d), "", ""])
    meta = _metadata(
        cfg,
        method="shoot",
        target_width=cfg.width,
        working_precision=result.precision,
        low_signature=result.low_signature,
        high_signature=result.high_signature,
    )
    return render(meta, SHOOT_COLUMNS, rows, cfg.fmt), EXIT_OK


def read_solution(path: str) -> tuple[Optional[str], list[str]]:
    """Read ``t`` and the a_n column from a file written by ``solve``."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        t = doc.get("metadata", {}).get("t")
        return (None if t is None else str(t)), [r["a_n"] for r in doc["rows"]]
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    return meta.get("t"), [row["a_n"] for row in csv.DictReader(body)]


def verification_checks(seq: VerblunskySequence, cfg: RunConfig) -> list[tuple[str, mpf, mpf, bool]]:
    """The nine named checks as (name, residual, threshold, passed)."""
    p = seq.precision
    roundoff = mpf(2) ** (64 - p)
    N = len(seq) - 1
    checks = []

    def add(name, residual, threshold, passed=None):
        residual = to_mpf(residual, p)
        threshold = to_mpf(threshold, p)
        checks.append((name, residual, threshold, residual < threshold if passed is None else passed))

    add("lemma1", verify_lemma1(seq), roundoff)
    add("phi_star", verify_phi_star_expansion(seq), roundoff)
    moments = moments_from_bessel(cfg.t, max(N, 2), p)
    add("moment_recurrence", verify_moment_recurrence(moments, cfg.t), roundoff)

    ladder = kappa_from_verblunsky(seq)
    product = kappa_product_form(seq)
    with mp.workprec(p):
        kappa_gap = max(abs(x.value - y.value) / y.value for x, y in zip(ladder.kappa_sq, product.kappa_sq))
    kappa_gap = max(kappa_gap, b_sequence(seq).max_form_discrepancy().value)
    add("kappa", kappa_gap, roundoff)

    spec = MeasureSpec.make(cfg.t, p)
    gram = gram_check(seq, spec, min(N + 1, len(seq)), tolerance=mpf(2) ** (40 - p))
    add("gram", gram.max_deviation, roundoff)

    report = check_bound(seq)
    add("bound", report.worst_ratio, 1, report.ok)
    add("dpii_residual", dpii_residual(seq), roundoff)

    alpha = -2 / to_fraction(cfg.t)
    table = bound_table(alpha, N)
    add("bound_table_induction", table.max_discrepancy, 0, table.agrees)

    sp = max(p, 256)
    ratios = [stirling_ratio(n, alpha, sp).value for n in STIRLING_ORDERS]
    with mp.workprec(sp):
        gaps = [abs(r - 1) for r in ratios]
    monotone = all(g1 < g0 for g0, g1 in zip(gaps, gaps[1:]))
    add("stirling_ratio", gaps[-1], "0.01", monotone and gaps[-1] < to_mpf("0.01", sp))
    return checks


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    if cfg.input is not None:
        t, a = read_solution(cfg.input)
        if t is not None:
            cfg.t = t
        if cfg.t is None:
            raise ValueError("input file carries no t; pass --t")
        cfg.N = len(a) - 1
        seq = VerblunskySequence.from_values(a, cfg.precision, t=cfg.params().t)
    else:
        seq = bessel_solution(cfg.params())
    checks = verification_checks(seq, cfg)
    d = 6
    rows = [[name, fmt_num(r, d), fmt_num(th, d), "pass" if ok else "fail"] for name, r, th, ok in checks]
    meta = _metadata(cfg, source=cfg.input or "bessel")
    code = EXIT_OK if all(c[3] for c in checks) else EXIT_CHECK_FAILED
    return render(meta, VERIFY_COLUMNS, rows, cfg.fmt), code


def cmd_stability(cfg: RunConfig) -> tuple[str, int]:
    records = escape_map(cfg.params(), cfg.start, cfg.stop, cfg.steps)
    d = cfg.digits
    rows = [
        [
            fmt_num(r.trial_a0, d),
            "survived" if r.survived else r.exit_index,
            "-" if r.survived else r.exit_side,
        ]
        for r in records
    ]
    meta = _metadata(cfg, start=cfg.start, stop=cfg.stop, steps=cfg.steps)
    return render(meta, STABILITY_COLUMNS, rows, cfg.fmt), EXIT_OK


COMMANDS = {"solve": cmd_solve, "shoot": cmd_shoot, "verify": cmd_verify, "stability": cmd_stability}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpii", description="Bounded solution of discrete Painleve II: tabulate, shoot, verify, map escapes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--t", help="parameter t > 0 (decimal or p/q)")
    common.add_argument("--n", dest="N", type=int, default=20, help="largest index N")
    common.add_argument("--precision", type=int, default=256, help="precision in bits")
    common.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
    common.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("solve", parents=[common], help="tabulate the bounded solution")
    p.add_argument("--method", default="bessel", help="bessel or levinson")

    p = sub.add_parser("shoot", parents=[common], help="bisect on a_0 for the bounded solution")
    p.add_argument("--width", default="1e-25", help="target bracket width")

    p = sub.add_parser("verify", parents=[common], help="run the identity and bound checks")
    p.add_argument("--input", help="verify a solution file written by solve instead of computing one")

    p = sub.add_parser("stability", parents=[common], help="escape index over a grid of a_0")
    p.add_argument("--from", dest="start", help="first grid point")
    p.add_argument("--to", dest="stop", help="last grid point")
    p.add_argument("--steps", type=int, default=101, help="number of grid points")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__})
    try:
        cfg.validate()
        text, code = COMMANDS[cfg.command](cfg)
    except ValueError as exc:
        print(f"dpii: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PrecisionExhausted, PositivityError, ConvergenceError) as exc:
        print(f"dpii: precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except CalibrationError as exc:
        print(f"dpii: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
