"""Hilbert-Schmidt determinantal moments of generalized two-qubit states.

Exact formulas for moments of |rho|, |rho^PT| and D = |rho^PT| - |rho| as
functions of the Dyson-like index ``alpha``, together with the independent
routes (alternating sums, binomial recombination) used to cross-check them.
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

from gmpy2 import mpq

from .ratcore import (
    ONE,
    ZERO,
    ExactScalar,
    HypergeometricSpec,
    ZeroDenominator,
    binomial,
    eval_hypergeometric_limit,
    format_rational,
    hyp,
    is_psd_exact,
    pochhammer,
    rational,
)

HALF = mpq(1, 2)


class Variable(str, enum.Enum):
    PT_DET = "pt_det"
    DIFF = "diff"


@dataclass(frozen=True)
class SupportInterval:
    lower: ExactScalar
    upper: ExactScalar

    def __post_init__(self):
        object.__setattr__(self, "lower", rational(self.lower))
        object.__setattr__(self, "upper", rational(self.upper))
        if not self.lower < self.upper:
            raise ValueError(f"empty support [{self.lower}, {self.upper}]")

    @property
    def width(self) -> ExactScalar:
        return self.upper - self.lower

    def contains(self, c, d) -> bool:
        return self.lower <= c < d <= self.upper

    @classmethod
    def preset(cls, variable: Variable) -> "SupportInterval":
        if Variable(variable) is Variable.PT_DET:
            return cls(mpq(-1, 16), mpq(1, 256))
        return cls(mpq(-1, 16), mpq(1, 432))


@dataclass(frozen=True)
class MomentSequence:
    """Exact power moments mu_0..mu_N of one statistic at a given alpha."""

    variable: Variable
    alpha: ExactScalar
    support: SupportInterval
    moments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "variable", Variable(self.variable))
        object.__setattr__(self, "alpha", rational(self.alpha))
        object.__setattr__(self, "moments", tuple(rational(m) for m in self.moments))
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def degree(self) -> int:
        return len(self.moments) - 1

    def check_invariants(self, hankel_order: int = 6) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        mu = self.moments
        if not mu or mu[0] != 1:
            problems.append("mu_0 != 1")
        bound = max(abs(self.support.lower), abs(self.support.upper))
        for n, m in enumerate(mu):
            if abs(m) > bound ** n:
                problems.append(f"|mu_{n}| exceeds {format_rational(bound)}^{n}")
        for order in range(min(hankel_order, (len(mu) - 1) // 2) + 1):
            hankel = [[mu[i + j] for j in range(order + 1)] for i in range(order + 1)]
            if not is_psd_exact(hankel):
                problems.append(f"Hankel matrix of order {order} is not PSD")
        return problems

    def to_dict(self) -> dict:
        return {
            "alpha": format_rational(self.alpha),
            "variable": self.variable.value,
            "support": [format_rational(self.support.lower), format_rational(self.support.upper)],
            "moments": [format_rational(m) for m in self.moments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MomentSequence":
        lo, hi = data["support"]
        return cls(
            variable=Variable(data["variable"]),
            alpha=rational(data["alpha"]),
            support=SupportInterval(rational(lo), rational(hi)),
            moments=tuple(rational(m) for m in data["moments"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "MomentSequence":
        return cls.from_dict(json.loads(Path(path).read_text()))


# -- formulas ----------------------------------------------------------------

def g(k: int, n: int, alpha) -> ExactScalar:
    """Pochhammer ratio with <|rho|^k> = g(0, k) and g(0,k) g(k,n) = g(0,k+n)."""
    a = rational(alpha)
    num = pochhammer(k + 1, n) * pochhammer(k + 1 + a, n) * pochhammer(k + 1 + 2 * a, n)
    den = mpq(2) ** (6 * n) * pochhammer(k + 3 * a + mpq(3, 2), n) \
        * pochhammer(2 * k + 6 * a + mpq(5, 2), 2 * n)
    return num / den


def h(k: int, n: int, alpha) -> ExactScalar:
    """Terminating 5F4 with <|rho^PT|^n |rho|^k> = g(0, k+n) h(k, n).

    For n > k (and for k = 0) some terms are 0/0 at integer k: the upper
    (-k)_i and a lower (-(k+n)/2)_i or (-(k+n-1)/2)_i vanish together. The
    series is taken as its limit in k, which is what makes the mixed-moment
    identities hold for every k >= 0.
    """
    if k < 0 or n < 0:
        raise ValueError("h(k, n) needs k, n >= 0")
    a = rational(alpha)
    s = k + n
    spec = HypergeometricSpec(
        (-n, -k, a, a + HALF, -2 * k - 2 * n - 1 - 5 * a),
        (-s - a, -s - 2 * a, mpq(-s, 2), mpq(1 - s, 2)),
    )
    return eval_hypergeometric_limit(spec, _H_UPPER_SLOPES, _H_LOWER_SLOPES)


# d(param)/dk for the parameters of h
_H_UPPER_SLOPES = (0, -1, 0, 0, -2)
_H_LOWER_SLOPES = (-1, -1, -HALF, -HALF)


def h_literal(k: int, n: int, alpha) -> ExactScalar:
    """Term-by-term evaluation of the same 5F4 at integer k, no limit taken.

    Agrees with :func:`h` only when n <= k and k >= 1.
    """
    a = rational(alpha)
    s = k + n
    upper = (-n, -k, a, a + HALF, -2 * k - 2 * n - 1 - 5 * a)
    lower = (-s - a, -s - 2 * a, mpq(-s, 2), mpq(1 - s, 2))
    return hyp(upper, lower)


def det_moment(k: int, alpha) -> ExactScalar:
    """<|rho|^k>."""
    return g(0, k, alpha)


def mixed_moment(n: int, k: int, alpha) -> ExactScalar:
    """<|rho^PT|^n |rho|^k>."""
    return g(0, k + n, alpha) * h(k, n, alpha)


def pt_moment(n: int, alpha) -> ExactScalar:
    """<|rho^PT|^n> from the two-term 5F4 closed form (1 at n = 0)."""
    if n == 0:
        return ONE
    a = rational(alpha)
    common = pochhammer(3 * a + mpq(3, 2), n) * pochhammer(6 * a + mpq(5, 2), 2 * n)
    first = pochhammer(1, n) * pochhammer(a + 1, n) * pochhammer(2 * a + 1, n) \
        / (mpq(2) ** (6 * n) * common)
    front = pochhammer(-2 * n - 1 - 5 * a, n) * pochhammer(a, n) * pochhammer(a + HALF, n) \
        / (mpq(2) ** (4 * n) * common)
    if not front:
        return first
    upper = (mpq(2 - n, 2), mpq(1 - n, 2), -n, a + 1, 2 * a + 1)
    lower = (1 - n, n + 2 + 5 * a, 1 - n - a, HALF - n - a)
    return first + front * hyp(upper, lower)


def f2(n: int, k: int, alpha) -> ExactScalar:
    """<|rho|^k D^n> / <|rho|^k>, D = |rho^PT| - |rho|, via the balanced 4F3."""
    a = rational(alpha)
    front = mpq(-1, 16) ** n * pochhammer(a, n) * pochhammer(a + HALF, n) \
        * pochhammer(2 * k + n + 5 * a + 2, n) \
        / (pochhammer(k + 3 * a + mpq(3, 2), n) * pochhammer(2 * k + 6 * a + mpq(5, 2), 2 * n))
    if not front:
        return ZERO
    upper = (mpq(-n, 2), mpq(1 - n, 2), k + 1 + a, k + 1 + 2 * a)
    lower = (1 - n - a, HALF - n - a, n + 2 * k + 2 + 5 * a)
    return front * hyp(upper, lower)


def f2_oracle(n: int, k: int, alpha) -> ExactScalar:
    """Same quantity as :func:`f2`, from the alternating sum over h."""
    total = ZERO
    for j in range(n + 1):
        term = binomial(n, j) * h(k + n - j, j, alpha)
        total += term if (n - j) % 2 == 0 else -term
    return g(k, n, alpha) * total


def pt_moment_recombined(n: int, alpha) -> ExactScalar:
    """<(D + |rho|)^n> expanded into mixed moments <D^j |rho|^(n-j)>."""
    return sum(
        (binomial(n, j) * g(0, n - j, alpha) * f2(j, n - j, alpha) for j in range(n + 1)),
        ZERO,
    )


def lemma_sum(n: int, m: int, x) -> ExactScalar:
    x = rational(x)
    total = ZERO
    for j in range(n + 1):
        total += pochhammer(-n, j) / pochhammer(1, j) * pochhammer(-j, m) * pochhammer(x + j, m)
    return total


def lemma_closed_form(n: int, m: int, x) -> ExactScalar:
    x = rational(x)
    if m > n:
        return ZERO
    denom = pochhammer(x, n)
    if not denom:
        raise ZeroDenominator(f"(x)_n vanishes at x={format_rational(x)}, n={n}")
    sign = 1 if m % 2 == 0 else -1
    return sign * pochhammer(x, 2 * m) / denom * pochhammer(-n, m) * pochhammer(-m, n - m)


# -- sequences ---------------------------------------------------------------

def _map_ordered(fn, indices, workers: int | None):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, indices, chunksize=8))
    return [fn(i) for i in indices]


def _diff_moment(n, alpha):
    return f2(n, 0, alpha)


def diff_moments(N: int, alpha, workers: int | None = None) -> MomentSequence:
    """Moments of D = |rho^PT| - |rho| for n = 0..N."""
    a = rational(alpha)
    mu = _map_ordered(partial(_diff_moment, alpha=a), range(N + 1), workers)
    return MomentSequence(Variable.DIFF, a, SupportInterval.preset(Variable.DIFF), tuple(mu))


def pt_moments(N: int, alpha, workers: int | None = None) -> MomentSequence:
    """Moments of |rho^PT| for n = 0..N."""
    a = rational(alpha)
    mu = _map_ordered(partial(pt_moment, alpha=a), range(N + 1), workers)
    return MomentSequence(Variable.PT_DET, a, SupportInterval.preset(Variable.PT_DET), tuple(mu))


def moments(variable: Variable, N: int, alpha, workers: int | None = None) -> MomentSequence:
    if Variable(variable) is Variable.DIFF:
        return diff_moments(N, alpha, workers)
    return pt_moments(N, alpha, workers)
