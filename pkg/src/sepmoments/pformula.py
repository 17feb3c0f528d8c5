"""Separability probability P(alpha) as a telescoping series.

P(alpha) = sum_{i >= 0} f(alpha + i), where f(alpha) = P(alpha) - P(alpha+1)
is a polynomial times a ratio of gamma functions. For alpha in Z/2 every term
is an exact rational, so partial sums are exact and only the tail is bounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import mpmath
from gmpy2 import mpq

from .ratcore import (
    ExactScalar,
    UnpairableArguments,
    gamma_ratio,
    gamma_ratio_float,
    rational,
    to_decimal,
    to_mpf,
)

Q_COEFFS = (63000, 410694, 1042015, 1289125, 779750, 185000)  # ascending powers
ASYMPTOTIC_RATIO = mpq(27, 64)
RATIO_ACTIVATION = mpq(1, 2)
RATIO_CAP = mpq(3, 5)
RATIO_MARGIN = mpq(1, 100)
DEFAULT_TOL = mpq(1, 10 ** 15)
DEFAULT_MAX_TERMS = 10_000
DEFAULT_PREC = 256
DEFAULT_DENOMINATOR_CAP = 10 ** 8


class ToleranceUnreachable(RuntimeError):
    pass


def q_poly_expanded(alpha) -> ExactScalar:
    a = rational(alpha)
    return sum((c * a ** k for k, c in enumerate(Q_COEFFS)), mpq(0))


def q_poly_nested(alpha) -> ExactScalar:
    a = rational(alpha)
    return a * (5 * a * (25 * a * (2 * a * (740 * a + 3119) + 10313) + 208403) + 410694) + 63000


def q_poly(alpha) -> ExactScalar:
    expanded = q_poly_expanded(alpha)
    nested = q_poly_nested(alpha)
    if expanded != nested:
        raise AssertionError(f"q forms disagree at alpha={alpha}: {expanded} vs {nested}")
    return expanded


def _gamma_args(a):
    numer = [3 * a + mpq(5, 2), 5 * a + 2]
    denom = [a + 1, 2 * a + 3, 5 * a + mpq(13, 2)]
    return numer, denom


def f_term(alpha) -> ExactScalar:
    """f(alpha) = P(alpha) - P(alpha + 1), exact for alpha in Z/2.

    Raises UnpairableArguments when the value is not rational.
    """
    a = rational(alpha)
    if a <= 0:
        raise ValueError("alpha must be positive")
    if (4 * a).denominator != 1:
        # 2^(-4 alpha - 6) alone is already irrational
        raise UnpairableArguments(f"f({a}) is not an exact rational")
    numer, denom = _gamma_args(a)
    return q_poly(a) * mpq(2) ** int(-4 * a - 6) * gamma_ratio(numer, denom) / 3


def f_term_float(alpha, prec: int = DEFAULT_PREC):
    a = rational(alpha)
    numer, denom = _gamma_args(a)
    with mpmath.workprec(prec):
        af = to_mpf(a, prec)
        return to_mpf(q_poly(a), prec) * mpmath.power(2, -4 * af - 6) \
            * gamma_ratio_float(numer, denom, prec) / 3


@dataclass(frozen=True)
class PResult:
    alpha: ExactScalar
    value: Decimal
    tail_bound: Decimal
    terms: int
    exact: bool
    partial_sum: ExactScalar | None = None
    rational_guess: ExactScalar | None = None

    def __str__(self) -> str:
        guess = "" if self.rational_guess is None else f" ~ {self.rational_guess}"
        return f"P({self.alpha}) = {self.value} (+tail <= {self.tail_bound:.3e}){guess}"


def _digits_for(prec: int) -> int:
    return int(prec * 0.30103) + 2


def p_separability(alpha, tol=DEFAULT_TOL, *, max_terms: int = DEFAULT_MAX_TERMS,
                   prec: int = DEFAULT_PREC,
                   denominator_cap: int = DEFAULT_DENOMINATOR_CAP) -> PResult:
    """Sum f(alpha + i) until the certified geometric tail bound drops below tol.

    The bound is armed once the consecutive-term ratio has dropped below 1/2;
    from then on r = min(3/5, max(observed ratios, 27/64) + 1/100) bounds the
    remaining ratios and the tail after term t_M is t_M r / (1 - r).
    """
    a = rational(alpha)
    if a <= 0:
        raise ValueError("alpha must be positive")
    tol = rational(_to_fraction(tol) if isinstance(tol, (float, Decimal)) else tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    exact = (2 * a).denominator == 1

    def term(i):
        return f_term(a + i) if exact else rational(_to_fraction(f_term_float(a + i, prec)))

    total = mpq(0)
    prev = None
    armed = False
    worst = ASYMPTOTIC_RATIO
    tail = None
    for i in range(max_terms):
        t = term(i)
        total += t
        if prev is not None:
            ratio = t / prev
            if ratio < RATIO_ACTIVATION:
                armed = True
            if armed:
                worst = max(worst, ratio)
                r = min(RATIO_CAP, worst + RATIO_MARGIN)
                tail = t * r / (1 - r)
                if tail < tol:
                    break
        prev = t
    else:
        raise ToleranceUnreachable(f"P({a}) did not reach tol={float(tol):.3g} in {max_terms} terms")

    digits = _digits_for(prec)
    with localcontext() as ctx:
        ctx.prec = digits
        value = Decimal(to_decimal(total, digits))
        tail_dec = Decimal(to_decimal(tail, digits + 20)).normalize()
    guess = rational_reconstruct(total, tail, denominator_cap=denominator_cap)
    return PResult(a, value, tail_dec, i + 1, exact, total, guess)


def _simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Smallest-denominator rational in the closed interval [lo, hi], 0 < lo."""
    fl = lo.numerator // lo.denominator
    if Fraction(fl) == lo:
        return Fraction(fl)
    if fl + 1 <= hi:
        return Fraction(fl + 1)
    # same integer part: recurse on reciprocals of the fractional parts
    inner = _simplest_between(1 / (hi - fl), 1 / (lo - fl))
    return fl + 1 / inner


def rational_reconstruct(value, bound, *, denominator_cap: int = DEFAULT_DENOMINATOR_CAP):
    """The smallest-denominator rational within +-bound of value, or None.

    ``value`` and ``bound`` may be exact rationals, Decimals or decimal strings.
    """
    v = _to_fraction(value)
    eps = _to_fraction(bound)
    if eps <= 0:
        raise ValueError("bound must be positive")
    lo, hi = v - eps, v + eps
    if lo <= 0 <= hi:
        return mpq(0)
    sign = 1
    if hi < 0:
        lo, hi, sign = -hi, -lo, -1
    best = _simplest_between(lo, hi)
    if best.denominator > denominator_cap:
        return None
    return mpq(sign * best.numerator, best.denominator)


def _to_fraction(x) -> Fraction:
    if isinstance(x, (Decimal, str, float)):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    r = rational(x)
    return Fraction(int(r.numerator), int(r.denominator))
