"""Command-line entry point: ``sepm <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 tolerance unreachable,
1 when ``verify-identities`` finds a failing identity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import mpmath

from . import dunkl, hssampler, identities, inversion, pformula
from .dunkl import MomentSequence, SupportInterval, Variable
from .ratcore import (
    PoleAtLiveTerm,
    UnpairableArguments,
    format_rational,
    rational,
    to_decimal,
)
from .states import Field, InvalidDensityMatrix, OutOfRange

log = logging.getLogger("sepmoments")

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_TOLERANCE = 4

FIGURE_ALPHAS = "1/2,1,3/2,2"
FIGURE_INTERVAL = "-1/108:1/432"


class DomainError(ValueError):
    pass


def exact(text: str):
    try:
        return rational(text, allow_decimal=False)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def loose(text: str):
    try:
        return rational(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def interval(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"interval must look like 'lo:hi', got {text!r}")
    lo, hi = (exact(p) for p in parts)
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return lo, hi


def alpha_list(text: str):
    return [exact(p) for p in text.split(",") if p]


def _check_interval(variable: Variable, lo, hi) -> None:
    support = SupportInterval.preset(variable)
    if not support.contains(lo, hi):
        raise DomainError(
            f"interval [{format_rational(lo)}, {format_rational(hi)}] is outside the "
            f"{variable.value} support [{format_rational(support.lower)}, {format_rational(support.upper)}]"
        )


def _emit(data, output: str | None) -> None:
    text = json.dumps(data, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _load_or_compute(args) -> MomentSequence:
    if getattr(args, "input", None):
        seq = MomentSequence.load(args.input)
        if args.degree is not None and args.degree > seq.degree:
            raise DomainError(f"file holds {seq.degree + 1} moments, degree {args.degree} requested")
        return seq
    if args.alpha is None:
        raise DomainError("either --input or --alpha is required")
    if args.alpha <= 0:
        raise DomainError("alpha must be positive")
    return dunkl.moments(Variable(args.variable), args.degree, args.alpha, workers=args.threads)


# -- subcommands -------------------------------------------------------------

def cmd_pvalue(args) -> int:
    if args.alpha <= 0:
        raise DomainError("alpha must be positive")
    res = pformula.p_separability(args.alpha, args.tol, max_terms=args.max_terms, prec=args.prec)
    digits = args.digits
    print(f"alpha: {format_rational(res.alpha)}")
    print(f"value: {to_decimal(res.partial_sum, digits)}")
    print(f"tail_bound: {res.tail_bound:.3e}")
    print(f"terms: {res.terms}")
    print(f"exact_terms: {str(res.exact).lower()}")
    print(f"rational: {format_rational(res.rational_guess) if res.rational_guess is not None else 'none'}")
    return 0


def cmd_moments(args) -> int:
    seq = _load_or_compute(args)
    if args.output:
        seq.save(args.output)
        log.info("wrote %d moments to %s", seq.degree + 1, args.output)
    else:
        _emit(seq.to_dict(), None)
    return 0


def _write_profile(rows, output) -> None:
    handle = open(output, "w", newline="") if output else sys.stdout
    try:
        writer = csv.writer(handle)
        writer.writerow(["x", "density"])
        for x, y in rows:
            writer.writerow([to_decimal(x, 20), mpmath.nstr(y, 20)])
    finally:
        if output:
            handle.close()


def cmd_reconstruct(args) -> int:
    seq = _load_or_compute(args)
    degree = seq.degree if args.degree is None else args.degree
    rec = inversion.legendre_coefficients(seq, degree)
    lo, hi = args.interval or (seq.support.lower, seq.support.upper)
    _check_interval(seq.variable, lo, hi)
    _write_profile(inversion.density_profile(rec, lo, hi, points=args.points), args.output)
    return 0


def cmd_probability(args) -> int:
    seq = _load_or_compute(args)
    degree = seq.degree if args.degree is None else args.degree
    lo, hi = args.interval
    _check_interval(seq.variable, lo, hi)
    rec = inversion.legendre_coefficients(seq, degree)
    est = inversion.interval_probability(rec, lo, hi)
    report = {
        "alpha": format_rational(seq.alpha),
        "variable": seq.variable.value,
        "degree": degree,
        "interval": [format_rational(lo), format_rational(hi)],
        "estimate": to_decimal(est, args.digits),
    }
    target = inversion.target_probability(seq.alpha, seq.variable, lo, hi)
    if target is not None:
        report["target"] = format_rational(target)
        report["ratio_to_target"] = to_decimal(est / target, args.digits)
    p = pformula.p_separability(seq.alpha)
    if p.rational_guess is not None:
        report["P_alpha"] = format_rational(p.rational_guess)
        report["ratio_to_P_alpha"] = to_decimal(est / p.rational_guess, args.digits)
    _emit(report, args.output)
    return 0


def cmd_mc(args) -> int:
    stats = args.stats.split(",") if args.stats else list(hssampler.DEFAULT_STATISTICS)
    report = hssampler.estimate(Field(args.field), args.samples, args.seed, stats,
                                workers=args.threads, experimental=args.experimental)
    _emit(report.to_dict(), args.output)
    return 0


def cmd_figure1(args) -> int:
    lo, hi = args.interval
    _check_interval(Variable.DIFF, lo, hi)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for a in args.alphas:
        seq = dunkl.diff_moments(args.degree, a, workers=args.threads)
        rec = inversion.legendre_coefficients(seq, args.degree)
        rows = inversion.density_profile(rec, lo, hi, points=args.points)
        path = out_dir / f"figure1_alpha_{format_rational(a).replace('/', '_')}.csv"
        _write_profile(rows, str(path))
        peak = max(y for _, y in rows)
        print(f"alpha={format_rational(a)} peak={mpmath.nstr(peak, 12)} file={path}")
    return 0


def cmd_verify(args) -> int:
    results = identities.all_suites()
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 1


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count (default: $SEPM_THREADS or CPU count)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pvalue", help="separability probability P(alpha)")
    p.add_argument("--alpha", type=exact, required=True)
    p.add_argument("--tol", type=loose, default=pformula.DEFAULT_TOL)
    p.add_argument("--digits", type=int, default=30)
    p.add_argument("--prec", type=int, default=pformula.DEFAULT_PREC)
    p.add_argument("--max-terms", type=int, default=pformula.DEFAULT_MAX_TERMS)
    p.set_defaults(func=cmd_pvalue)

    def moment_source(p, degree_required):
        p.add_argument("--alpha", type=exact)
        p.add_argument("--variable", choices=[v.value for v in Variable], default="diff")
        p.add_argument("--degree", type=int, required=degree_required)
        p.add_argument("--input", help="MomentSequence JSON file instead of --alpha")

    p = sub.add_parser("moments", help="exact moment sequence to JSON")
    moment_source(p, True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("reconstruct", help="density profile CSV")
    moment_source(p, False)
    p.add_argument("--interval", type=interval)
    p.add_argument("--points", type=int, default=inversion.GRID_POINTS)
    p.add_argument("--output")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("probability", help="mass of the reconstruction over an interval")
    moment_source(p, False)
    p.add_argument("--interval", type=interval, required=True)
    p.add_argument("--digits", type=int, default=15)
    p.add_argument("--output")
    p.set_defaults(func=cmd_probability)

    p = sub.add_parser("mc", help="Monte Carlo estimates")
    p.add_argument("--field", choices=[f.value for f in Field], default="complex")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--stats", help="comma-separated statistic names")
    p.add_argument("--experimental", action="store_true", help="allow the quaternionic sampler")
    p.add_argument("--output")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("figure1", help="density profiles of D for several alpha")
    p.add_argument("--alphas", type=alpha_list, default=alpha_list(FIGURE_ALPHAS))
    p.add_argument("--degree", type=int, default=50,
                   help="highest moment index (50 means the first 51 moments)")
    p.add_argument("--interval", type=interval, default=interval(FIGURE_INTERVAL))
    p.add_argument("--points", type=int, default=inversion.GRID_POINTS)
    p.add_argument("--output-dir", default="figure1")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("verify-identities", help="run the exact identity suites")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except pformula.ToleranceUnreachable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (DomainError, OutOfRange, InvalidDensityMatrix, UnpairableArguments,
            PoleAtLiveTerm, hssampler.UnknownStatistic, hssampler.ExperimentalFieldError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
