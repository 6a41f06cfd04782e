"""Recovering a multiset of rationals from its first q power sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath


class IrrationalMeasures(ValueError):
    """The power sums do not come from a multiset of rationals."""

    def __init__(self, msg, numeric_roots=()):
        super().__init__(msg)
        self.numeric_roots = list(numeric_roots)


def power_sums(values: Sequence, q: int = None) -> list:
    q = len(values) if q is None else q
    return [sum(Fraction(v) ** k for v in values) for k in range(1, q + 1)]


def elementary_from_power_sums(z: Sequence) -> list:
    """Newton's identities: e_0..e_q from z_1..z_q."""
    q = len(z)
    e = [Fraction(1)]
    for k in range(1, q + 1):
        acc = sum(((-1) ** (i - 1)) * e[k - i] * Fraction(z[i - 1]) for i in range(1, k + 1))
        e.append(acc / k)
    return e


def _horner(coeffs, x):
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * x + c
    return acc


def _deflate(coeffs, r):
    """Divide by (x - r); coefficients highest degree first."""
    out = [coeffs[0]]
    for c in coeffs[1:-1]:
        out.append(c + out[-1] * r)
    return out


def _to_fraction(x) -> Fraction:
    # man_exp drops the sign, the raw tuple keeps it
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    return (-1) ** sign * Fraction(int(man)) * Fraction(2) ** int(exp)


def _poly_rem(a, b):
    a = list(a)
    while len(a) >= len(b) and any(a):
        f = a[0] / b[0]
        for i in range(len(b)):
            a[i] -= f * b[i]
        a.pop(0)
    while a and a[0] == 0:
        a.pop(0)
    return a


def _poly_gcd(a, b):
    while b:
        a, b = b, _poly_rem(a, b)
    return [c / a[0] for c in a]


def _poly_div(a, b):
    a = list(a)
    out = []
    while len(a) >= len(b):
        f = a[0] / b[0]
        out.append(f)
        for i in range(len(b)):
            a[i] -= f * b[i]
        a.pop(0)
    return out


def _simple_roots(coeffs) -> list:
    """Rational roots of a square-free polynomial that splits over Q."""
    lcm = math.lcm(*(c.denominator for c in coeffs))
    ints = [int(c * lcm) for c in coeffs]
    g = math.gcd(*ints)
    ints = [x // g for x in ints]
    lead = abs(ints[0])
    deg = len(ints) - 1
    if deg == 1:
        return [Fraction(-ints[1], ints[0])]
    digits = max(len(str(abs(x))) for x in ints)
    dps = max(50, 3 * (digits + 10))
    try:
        with mpmath.workdps(dps):
            approx = mpmath.polyroots(ints, maxsteps=200 + 20 * deg, extraprec=dps)
    except mpmath.libmp.NoConvergence as exc:
        raise IrrationalMeasures("root isolation did not converge") from exc
    roots = []
    for z in approx:
        cand = _to_fraction(mpmath.re(z)).limit_denominator(lead)
        if _horner(coeffs, cand) != 0:
            raise IrrationalMeasures("polynomial has a non-rational root", [complex(w) for w in approx])
        roots.append(cand)
    return roots


def rational_roots(coeffs: Sequence) -> list:
    """All roots, with multiplicity, of a polynomial that splits over the rationals.

    The square-free part is solved numerically at high precision; a rational
    root of a primitive integer polynomial has denominator dividing the
    leading coefficient, so rounding with that bound and checking exactly
    recovers it.  Multiplicities come from exact division.
    """
    coeffs = [Fraction(c) for c in coeffs]
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
    if len(coeffs) <= 1:
        return []
    deriv = [c * (len(coeffs) - 1 - i) for i, c in enumerate(coeffs[:-1])]
    squarefree = _poly_div(coeffs, _poly_gcd(coeffs, deriv))
    roots = []
    rest = coeffs
    for r in _simple_roots(squarefree):
        while len(rest) > 1 and _horner(rest, r) == 0:
            roots.append(r)
            rest = _deflate(rest, r)
    if len(rest) > 1:
        raise IrrationalMeasures("polynomial does not split over the rationals")
    return sorted(roots)


@dataclass
class PowerSumSystem:
    z: list
    recovered: list = field(default_factory=list)

    def solve(self) -> list:
        e = elementary_from_power_sums(self.z)
        q = len(self.z)
        coeffs = [((-1) ** k) * e[k] for k in range(q + 1)]
        roots = rational_roots(coeffs) if q else []
        if power_sums(roots, q) != [Fraction(x) for x in self.z]:
            raise IrrationalMeasures("recovered roots do not reproduce the power sums")
        self.recovered = roots
        return roots


def multiset_from_power_sums(z: Sequence) -> list:
    return PowerSumSystem(list(z)).solve()
