"""Sparse multivariate polynomials with rational coefficients.

A polynomial in ``nvars`` variables is a dict mapping exponent tuples to
nonzero :class:`Fraction` coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Poly = dict


def constant(nvars: int, c=1) -> Poly:
    return {(0,) * nvars: Fraction(c)} if c else {}


def linear(nvars: int, var: int, shift) -> Poly:
    """The polynomial ``x_var - shift``."""
    e = [0] * nvars
    e[var] = 1
    out = {tuple(e): Fraction(1)}
    if shift:
        out[(0,) * nvars] = -Fraction(shift)
    return out


def monomial(exps: Sequence[int], c=1) -> Poly:
    return {tuple(exps): Fraction(c)}


def mul(p: Poly, r: Poly) -> Poly:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in r.items():
            e = tuple(x + y for x, y in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0}


def prod(polys: Iterable[Poly], nvars: int) -> Poly:
    out = constant(nvars)
    for p in polys:
        out = mul(out, p)
    return out


def evaluate(p: Poly, point: Sequence):
    total = 0
    for e, c in p.items():
        term = c
        for x, k in zip(point, e):
            if k:
                term *= x ** k
        total += term
    return total


def univariate_from_roots(roots: Sequence, squared: bool = False) -> Poly:
    """prod (x - r), or prod (x - r)^2 when ``squared``."""
    factors = [linear(1, 0, r) for r in roots]
    if squared:
        factors = factors + factors
    return prod(factors, 1)
