"""Exact rational combinations of logarithms of primes.

Entropies of rational Bernoulli measures are finite sums of c * log(q) with rational
c, so identities between them can be asserted exactly instead of to a tolerance.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple, Union

Rational = Union[int, Fraction]


@lru_cache(maxsize=4096)
def _factor(n: int) -> Tuple[Tuple[int, int], ...]:
    factors: Dict[int, int] = {}
    q = 2
    while q * q <= n:
        while n % q == 0:
            factors[q] = factors.get(q, 0) + 1
            n //= q
        q += 1
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return tuple(sorted(factors.items()))


@dataclass(frozen=True)
class ExactLog:
    terms: Tuple[Tuple[int, Fraction], ...] = ()

    @classmethod
    def _build(cls, coefficients: Dict[int, Fraction]) -> "ExactLog":
        return cls(tuple(sorted((q, c) for q, c in coefficients.items() if c != 0)))

    @classmethod
    def log_int(cls, n: int) -> "ExactLog":
        if n < 1:
            raise ValueError(f"log of non-positive integer {n}")
        return cls._build({q: Fraction(e) for q, e in _factor(n)})

    @classmethod
    def neg_log(cls, p: Fraction) -> "ExactLog":
        """-log p for a rational 0 < p <= 1"""
        p = Fraction(p)
        if p <= 0:
            raise ValueError("-log of a non-positive probability")
        return cls.log_int(p.denominator) - cls.log_int(p.numerator)

    def _coefficients(self) -> Dict[int, Fraction]:
        return dict(self.terms)

    def __add__(self, other: "ExactLog") -> "ExactLog":
        merged = self._coefficients()
        for q, c in other.terms:
            merged[q] = merged.get(q, Fraction(0)) + c
        return ExactLog._build(merged)

    def __sub__(self, other: "ExactLog") -> "ExactLog":
        return self + other * -1

    def __mul__(self, scalar: Rational) -> "ExactLog":
        return ExactLog._build({q: c * scalar for q, c in self.terms})

    __rmul__ = __mul__

    def __float__(self) -> float:
        return math.fsum(float(c) * math.log(q) for q, c in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*log({q})" for q, c in self.terms)


ZERO = ExactLog()
