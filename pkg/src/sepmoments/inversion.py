"""Legendre-polynomial moment inversion on a bounded interval.

Given exact power moments mu_0..mu_N of a distribution on [a, b], the
density is approximated by

    f_N(x) = sum_i lambda_i P_i(t(x)),   t(x) = (2x - a - b) / (b - a),

with lambda_i = (2i + 1) / (b - a) * E[P_i(t(X))]. Every step is carried out
in exact rationals: the map from power moments to Legendre coefficients is
catastrophically ill-conditioned in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import mpmath
from gmpy2 import mpq, mpz

from . import dunkl
from .dunkl import MomentSequence, SupportInterval, Variable
from .ratcore import ONE, ZERO, ExactScalar, rational, to_mpf

GRID_POINTS = 1001


@lru_cache(maxsize=4)
def _legendre_table(N: int) -> tuple:
    """Integer-scaled monomial coefficients of P_0..P_N.

    Row i is (scale, coeffs) with P_i(t) = sum_m coeffs[m] t^m / scale.
    """
    prev = [ONE]
    cur = [ZERO, ONE]
    exact = [prev, cur]
    for i in range(1, N):
        # (i+1) P_{i+1} = (2i+1) t P_i - i P_{i-1}
        nxt = [ZERO] * (i + 2)
        for m, c in enumerate(cur):
            nxt[m + 1] += (2 * i + 1) * c
        for m, c in enumerate(prev):
            nxt[m] -= i * c
        nxt = [c / (i + 1) for c in nxt]
        exact.append(nxt)
        prev, cur = cur, nxt
    rows = []
    for coeffs in exact[: N + 1]:
        scale = mpz(1)
        for c in coeffs:
            scale = gmpy2.lcm(scale, c.denominator)
        rows.append((scale, tuple(mpz(c * scale) for c in coeffs)))
    return tuple(rows)


def legendre_monomial_coefficients(N: int) -> list[list[ExactScalar]]:
    """c[i][m] with P_i(t) = sum_m c[i][m] t^m, for i = 0..N."""
    return [[mpq(c, scale) for c in coeffs] for scale, coeffs in _legendre_table(N)]


def legendre_values(N: int, t) -> list:
    """P_0(t)..P_N(t) by the three-term recurrence (exact for rational t)."""
    vals = [ONE, t] if not isinstance(t, mpmath.mpf) else [mpmath.mpf(1), t]
    for i in range(1, N):
        vals.append(((2 * i + 1) * t * vals[i] - i * vals[i - 1]) / (i + 1))
    return vals[: N + 1]


@dataclass(frozen=True)
class ReconstructionResult:
    degree: int
    support: SupportInterval
    coefficients: tuple
    source_alpha: ExactScalar | None = None
    variable: Variable | None = None

    def t_of(self, x):
        a, b = self.support.lower, self.support.upper
        return (2 * x - a - b) / (b - a)


def _transformed_moments(mu, support: SupportInterval, N: int) -> list:
    """E[t(X)^m] for m = 0..N by binomial expansion of the affine map."""
    a, b = support.lower, support.upper
    slope = 2 / (b - a)
    shift = -(a + b) / (b - a)
    scaled = [mu[j] * slope ** j for j in range(N + 1)]
    shift_pow = [ONE]
    for _ in range(N):
        shift_pow.append(shift_pow[-1] * shift)
    out = []
    for m in range(N + 1):
        total = ZERO
        binom = mpz(1)
        for j in range(m + 1):
            total += binom * scaled[j] * shift_pow[m - j]
            binom = binom * (m - j) // (j + 1)
        out.append(total)
    return out


def legendre_coefficients(moments: MomentSequence, degree: int | None = None) -> ReconstructionResult:
    """Exact Legendre coefficients lambda_0..lambda_N from power moments."""
    N = moments.degree if degree is None else degree
    if N > moments.degree:
        raise ValueError(f"degree {N} exceeds the {moments.degree + 1} available moments")
    if N < 0:
        raise ValueError("degree must be nonnegative")
    support = moments.support
    et = _transformed_moments(moments.moments, support, N)
    width = support.width
    lam = []
    for i, (scale, coeffs) in enumerate(_legendre_table(N)):
        # only monomials of the same parity as i are present
        acc = ZERO
        for m in range(i % 2, i + 1, 2):
            acc += coeffs[m] * et[m]
        lam.append(acc * (2 * i + 1) / (scale * width))
    return ReconstructionResult(N, support, tuple(lam), moments.alpha, moments.variable)


def _antiderivative_values(N: int, t) -> list:
    """A_i(t) with A_0 = t and A_i = (P_{i+1} - P_{i-1}) / (2i + 1)."""
    p = legendre_values(N + 1, t)
    return [t] + [(p[i + 1] - p[i - 1]) / (2 * i + 1) for i in range(1, N + 1)]


def interval_probability(rec: ReconstructionResult, c, d) -> ExactScalar:
    """Exact integral of f_N over [c, d]."""
    c, d = rational(c), rational(d)
    if not rec.support.contains(c, d):
        raise ValueError(
            f"interval [{c}, {d}] is not inside the support "
            f"[{rec.support.lower}, {rec.support.upper}]"
        )
    lo = _antiderivative_values(rec.degree, rec.t_of(c))
    hi = _antiderivative_values(rec.degree, rec.t_of(d))
    total = sum((lam * (u - v) for lam, u, v in zip(rec.coefficients, hi, lo)), ZERO)
    return total * rec.support.width / 2


def evaluate_density(rec: ReconstructionResult, x):
    """f_N(x). Exact for rational x; mpmath floats are evaluated in mpmath."""
    if isinstance(x, mpmath.mpf):
        t = (2 * x - to_mpf(rec.support.lower) - to_mpf(rec.support.upper)) / to_mpf(rec.support.width)
        lam = [to_mpf(v) for v in rec.coefficients]
    else:
        x = rational(x)
        if not rec.support.lower <= x <= rec.support.upper:
            raise ValueError(f"x = {x} outside the support")
        t = rec.t_of(x)
        lam = rec.coefficients
    vals = legendre_values(rec.degree, t)
    return sum((l * p for l, p in zip(lam, vals)), ZERO if not isinstance(t, mpmath.mpf) else mpmath.mpf(0))


def density_profile(rec: ReconstructionResult, lower=None, upper=None,
                    points: int = GRID_POINTS, prec: int = 256) -> list[tuple]:
    """(x, f_N(x)) on an equispaced grid, in mpmath floats at ``prec`` bits."""
    lower = rec.support.lower if lower is None else rational(lower)
    upper = rec.support.upper if upper is None else rational(upper)
    if not rec.support.contains(lower, upper):
        raise ValueError("profile interval outside the support")
    with mpmath.workprec(prec):
        a, b = to_mpf(rec.support.lower, prec), to_mpf(rec.support.upper, prec)
        lam = [to_mpf(v, prec) for v in rec.coefficients]
        out = []
        for k in range(points):
            x = lower + (upper - lower) * mpq(k, points - 1)
            t = to_mpf(rec.t_of(x), prec)
            vals = legendre_values(rec.degree, t)
            out.append((x, mpmath.fsum(l * p for l, p in zip(lam, vals))))
    return out


def target_probability(alpha, variable: Variable, c, d) -> ExactScalar | None:
    """Known exact mass for the positive half-support and the full support, else None."""
    from .pformula import p_separability

    variable = Variable(variable)
    c, d = rational(c), rational(d)
    support = SupportInterval.preset(variable)
    if (c, d) == (0, support.upper):
        p = p_separability(rational(alpha)).rational_guess
        if p is None:
            return None
        return p / 2 if variable is Variable.DIFF else p
    if (c, d) == (support.lower, support.upper):
        return ONE
    return None


@dataclass(frozen=True)
class ConvergenceRow:
    degree: int
    estimate: ExactScalar
    error: ExactScalar | None


def convergence_table(alpha, variable: Variable, degrees, target: tuple,
                      target_value=None, moments: MomentSequence | None = None) -> list[ConvergenceRow]:
    """Interval estimates for each degree, with |estimate - target_value|."""
    degrees = sorted(degrees)
    c, d = (rational(v) for v in target)
    if moments is None:
        moments = dunkl.moments(variable, degrees[-1], alpha)
    if target_value is None:
        target_value = target_probability(alpha, variable, c, d)
    rows = []
    for N in degrees:
        est = interval_probability(legendre_coefficients(moments, N), c, d)
        err = abs(est - target_value) if target_value is not None else None
        rows.append(ConvergenceRow(N, est, err))
    return rows
