"""Exact rational arithmetic: Pochhammer symbols, gamma ratios, terminating
hypergeometric series and a few small exact linear-algebra helpers.

All exact values are ``gmpy2.mpq`` instances, which are kept in lowest terms
with a positive denominator after every operation.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
import mpmath
from gmpy2 import mpq, mpz

ExactScalar = type(mpq())

ZERO = mpq(0)
ONE = mpq(1)


class UnpairableArguments(ValueError):
    """Gamma arguments cannot be telescoped into an exact rational."""


class PoleAtLiveTerm(ArithmeticError):
    """A lower hypergeometric parameter hit zero while the term was nonzero."""


class ZeroDenominator(ZeroDivisionError):
    pass


def rational(value, *, allow_decimal: bool = True) -> ExactScalar:
    """Coerce ``value`` to an exact rational.

    Accepts ints, Fractions, mpq and strings like ``"3"``, ``"-1/16"``.
    Decimal strings (``"0.5"``) are accepted unless ``allow_decimal`` is
    false. Floats are rejected: they are almost never what the caller means.
    """
    if isinstance(value, ExactScalar):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, (int, type(mpz()))):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, float):
        raise TypeError(f"refusing to convert float {value!r} to an exact rational")
    if isinstance(value, str):
        text = value.strip()
        if not allow_decimal and any(ch in text for ch in ".eE"):
            raise ValueError(f"expected an exact rational like '1/2', got {value!r}")
        try:
            return mpq(Fraction(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def format_rational(x) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is 1."""
    x = rational(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def is_integer(x) -> bool:
    return rational(x).denominator == 1


def pochhammer(x, m: int) -> ExactScalar:
    """Rising factorial x(x+1)...(x+m-1); 1 when m == 0."""
    if m < 0:
        raise ValueError("pochhammer order must be nonnegative")
    x = rational(x)
    result = ONE
    for i in range(m):
        result *= x + i
        if not result:
            return ZERO
    return result


def _class_key(x: ExactScalar) -> ExactScalar:
    # fractional part in [0, 1)
    return x - gmpy2.f_div(x.numerator, x.denominator)


def gamma_ratio(numer_args: Sequence, denom_args: Sequence) -> ExactScalar:
    """Exact value of prod Gamma(numer) / prod Gamma(denom).

    Arguments are grouped by fractional part and paired within each group;
    each pair telescopes to a Pochhammer product. Unpaired arguments are
    allowed only if they are positive integers (they contribute a factorial).
    Anything else would leave a transcendental factor such as sqrt(pi), and
    raises :class:`UnpairableArguments`.
    """
    numer = [rational(a) for a in numer_args]
    denom = [rational(a) for a in denom_args]
    for a in numer + denom:
        if a <= 0:
            raise UnpairableArguments(f"gamma argument {a} is not positive")

    groups: dict = defaultdict(lambda: ([], []))
    for a in numer:
        groups[_class_key(a)][0].append(a)
    for a in denom:
        groups[_class_key(a)][1].append(a)

    result = ONE
    for key, (top, bottom) in groups.items():
        top.sort()
        bottom.sort()
        if len(top) != len(bottom) and key != 0:
            raise UnpairableArguments(
                f"{len(top)} numerator vs {len(bottom)} denominator arguments "
                f"with fractional part {key}"
            )
        for a, b in zip(top, bottom):
            # Gamma(a)/Gamma(b) with a - b an integer
            diff = int(a - b)
            if diff >= 0:
                result *= pochhammer(b, diff)
            else:
                result /= pochhammer(a, -diff)
        pairs = min(len(top), len(bottom))
        for a in top[pairs:]:
            result *= gmpy2.fac(int(a) - 1)
        for b in bottom[pairs:]:
            result /= gmpy2.fac(int(b) - 1)
    return result


def gamma_ratio_float(numer_args: Sequence, denom_args: Sequence, prec: int = 256):
    """High-precision floating fallback for :func:`gamma_ratio` (inexact)."""
    if prec < 256:
        raise ValueError("fallback precision must be at least 256 bits")
    with mpmath.workprec(prec):
        value = mpmath.mpf(1)
        for a in numer_args:
            value *= mpmath.gamma(_as_mpf(a))
        for b in denom_args:
            value /= mpmath.gamma(_as_mpf(b))
        return +value


def _as_mpf(x):
    if isinstance(x, mpmath.mpf):
        return x
    x = rational(x)
    return mpmath.mpf(int(x.numerator)) / int(x.denominator)


@dataclass(frozen=True)
class HypergeometricSpec:
    """Parameters of pFq(upper; lower; argument)."""

    upper_params: tuple
    lower_params: tuple
    argument: ExactScalar = ONE
    max_terms: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "upper_params", tuple(rational(a) for a in self.upper_params))
        object.__setattr__(self, "lower_params", tuple(rational(b) for b in self.lower_params))
        object.__setattr__(self, "argument", rational(self.argument))

    @property
    def terminates(self) -> bool:
        return any(a <= 0 and is_integer(a) for a in self.upper_params)


def eval_terminating_hypergeometric(spec: HypergeometricSpec) -> ExactScalar:
    """Sum a terminating pFq exactly.

    Terms are accumulated upward and the sum stops at the first index where an
    upper-parameter Pochhammer vanishes.
    """
    if not spec.terminates and spec.max_terms is None:
        raise ValueError("series does not terminate and no max_terms cap was given")
    z = spec.argument
    if not z:
        return ONE
    total = ONE
    term = ONE
    j = 0
    while spec.max_terms is None or j + 1 < spec.max_terms:
        num = z
        for a in spec.upper_params:
            num *= a + j
        if not num:
            break
        den = mpq(j + 1)
        for b in spec.lower_params:
            den *= b + j
        if not den:
            raise PoleAtLiveTerm(
                f"lower parameter vanishes at term {j + 1} of "
                f"{len(spec.upper_params)}F{len(spec.lower_params)} "
                f"with upper={list(map(format_rational, spec.upper_params))}, "
                f"lower={list(map(format_rational, spec.lower_params))}"
            )
        term = term * num / den
        total += term
        j += 1
    return total


def eval_hypergeometric_limit(
    spec: HypergeometricSpec,
    upper_slopes: Sequence,
    lower_slopes: Sequence,
) -> ExactScalar:
    """Limit as eps -> 0 of the series with parameters ``p + slope * eps``.

    Each term is a ratio of products of linear factors ``c + d*eps``; only the
    leading power of eps is tracked. Terms of positive order vanish in the
    limit but are carried forward, since a later vanishing lower factor can
    bring them back to order zero. A zero-slope upper parameter that is a
    nonpositive integer must terminate the series.
    """
    up = list(zip(spec.upper_params, map(rational, upper_slopes)))
    lo = list(zip(spec.lower_params, map(rational, lower_slopes)))
    if len(up) != len(spec.upper_params) or len(lo) != len(spec.lower_params):
        raise ValueError("one slope per parameter is required")
    if not any(a <= 0 and is_integer(a) and not d for a, d in up):
        raise ValueError("limit evaluation needs a fixed terminating upper parameter")
    z = spec.argument
    if not z:
        return ONE
    total = ONE
    coeff, order = ONE, 0
    j = 0
    while True:
        num = z
        for a, d in up:
            c = a + j
            if c:
                num *= c
            elif d:
                num *= d
                order += 1
            else:
                return total
        den = mpq(j + 1)
        for b, d in lo:
            c = b + j
            if c:
                den *= c
            elif d:
                den *= d
                order -= 1
            else:
                raise PoleAtLiveTerm(f"fixed lower parameter {format_rational(b)} vanishes")
        coeff = coeff * num / den
        j += 1
        if order < 0:
            raise PoleAtLiveTerm(f"term {j} diverges in the parameter limit")
        if order == 0:
            total += coeff


def hyp(upper: Iterable, lower: Iterable, argument=ONE) -> ExactScalar:
    """Shorthand for a terminating series at the given argument."""
    return eval_terminating_hypergeometric(HypergeometricSpec(tuple(upper), tuple(lower), argument))


def to_decimal(x, digits: int) -> str:
    """Round ``x`` to ``digits`` fractional digits, half-to-even."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    x = rational(x)
    negative = x < 0
    num, den = abs(x.numerator), x.denominator
    q, r = divmod(num * mpz(10) ** digits, den)
    twice = 2 * r
    if twice > den or (twice == den and q % 2 == 1):
        q += 1
    s = str(q).rjust(digits + 1, "0")
    out = f"{s[:-digits]}.{s[-digits:]}"
    if negative and q:
        out = "-" + out
    return out


def to_mpf(x, prec: int = 256):
    """Convert an exact rational to an mpmath float at ``prec`` bits."""
    x = rational(x)
    with mpmath.workprec(prec):
        return mpmath.mpf(int(x.numerator)) / int(x.denominator)


def binomial(n: int, k: int) -> ExactScalar:
    return mpq(gmpy2.comb(n, k))


# -- small exact linear algebra ------------------------------------------------

def exact_det(matrix: Sequence[Sequence]) -> ExactScalar:
    """Determinant of a square rational matrix by fraction-exact elimination."""
    a = [[rational(v) for v in row] for row in matrix]
    n = len(a)
    det = ONE
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            return ZERO
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        p = a[col][col]
        det *= p
        for r in range(col + 1, n):
            factor = a[r][col] / p
            if factor:
                row_r, row_c = a[r], a[col]
                for c in range(col + 1, n):
                    row_r[c] -= factor * row_c[c]
    return det


def charpoly(matrix: Sequence[Sequence]) -> list:
    """Coefficients [1, c1, ..., cn] of det(tI - A) via Faddeev-LeVerrier."""
    a = [[rational(v) for v in row] for row in matrix]
    n = len(a)
    coeffs = [ONE]
    m = [[ZERO] * n for _ in range(n)]  # M_0 = 0
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        prev = m
        m = [[sum((a[i][l] * prev[l][j] for l in range(n)), ZERO) for j in range(n)]
             for i in range(n)]
        for i in range(n):
            m[i][i] += coeffs[-1]
        # c_k = -tr(A M_k) / k
        tr = sum((a[i][l] * m[l][i] for i in range(n) for l in range(n)), ZERO)
        coeffs.append(-tr / k)
    return coeffs


def is_psd_exact(matrix: Sequence[Sequence]) -> bool:
    """Exact PSD test for a real symmetric rational matrix.

    A symmetric matrix has only real eigenvalues, and they are all >= 0 iff
    the coefficients of det(tI - A) alternate in sign (zeros allowed).
    """
    coeffs = charpoly(matrix)
    return all(c * (-1) ** k >= 0 for k, c in enumerate(coeffs))
