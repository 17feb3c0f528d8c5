"""Exact identity suites over the moment formulas.

Each suite returns a :class:`SuiteResult`; all comparisons are exact equality
of rationals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from gmpy2 import mpq

from . import dunkl
from .ratcore import ZeroDenominator

ALPHAS_MULT = (mpq(1, 2), mpq(1), mpq(3, 2), mpq(2), mpq(4))
ALPHAS = (mpq(1, 2), mpq(1), mpq(2))


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and not self.failures

    def check(self, ok: bool, label) -> None:
        self.checked += 1
        if not ok:
            self.failures.append(label)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"; first failures: {self.failures[:3]}" if self.failures else ""
        return f"{status} {self.name}: {self.checked} checks{extra}"


def multiplication_relation(kmax: int = 20, nmax: int = 20, alphas=ALPHAS_MULT) -> SuiteResult:
    res = SuiteResult("g(0,k) g(k,n) = g(0,k+n)")
    for a in alphas:
        g0 = [dunkl.g(0, k, a) for k in range(kmax + nmax + 1)]
        for k in range(kmax + 1):
            for n in range(nmax + 1):
                res.check(g0[k] * dunkl.g(k, n, a) == g0[k + n], (k, n, str(a)))
    return res


def f2_routes(nmax: int = 6, kmax: int = 4, alphas=ALPHAS) -> SuiteResult:
    res = SuiteResult("F2 closed form = alternating sum over h")
    for a in alphas:
        for n in range(1, nmax + 1):
            for k in range(1, kmax + 1):
                res.check(dunkl.f2(n, k, a) == dunkl.f2_oracle(n, k, a), (n, k, str(a)))
    return res


def pt_recombination(nmax: int = 8, alphas=ALPHAS) -> SuiteResult:
    res = SuiteResult("<|rho^PT|^n> = sum_j C(n,j) g(0,n-j) F2(j,n-j)")
    for a in alphas:
        for n in range(1, nmax + 1):
            res.check(dunkl.pt_moment(n, a) == dunkl.pt_moment_recombined(n, a), (n, str(a)))
    return res


def random_rationals(count: int, seed: int = 2013) -> list:
    """Rationals that avoid the poles of (x)_n for n <= 8."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        x = mpq(rng.randint(-40, 40), rng.randint(2, 17))
        if x.denominator > 1:
            out.append(x)
    return out


def lemma(nmax: int = 8, mmax: int = 8, xs=None) -> SuiteResult:
    res = SuiteResult("Chu-Vandermonde lemma, sum = closed form")
    xs = random_rationals(5) if xs is None else xs
    for x in xs:
        for n in range(nmax + 1):
            for m in range(mmax + 1):
                lhs = dunkl.lemma_sum(n, m, x)
                try:
                    rhs = dunkl.lemma_closed_form(n, m, x)
                except ZeroDenominator:
                    res.check(False, (n, m, str(x), "pole"))
                    continue
                res.check(lhs == rhs, (n, m, str(x)))
                if m > n:
                    res.check(lhs == 0, (n, m, str(x), "nonzero"))
    return res


def all_suites() -> list[SuiteResult]:
    return [multiplication_relation(), f2_routes(), pt_recombination(), lemma()]
