"""Seeded random expressions and fields for property checks.

Coefficients are short sums of rational multiples of low-degree monomials,
optionally times ``exp``/``sin``/``cos`` of a coordinate difference, so values
stay bounded on the default sampling box.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .expr import ONE, Chart, Expr, T, const, cos, exp, mul, sin, sub, sum_exprs
from .multifield import Form, Multivector

_COEFFS = [Fraction(k, 2) for k in range(-4, 5) if k]


def random_expr(chart: Chart, rng: np.random.Generator, terms: int = 3, max_degree: int = 2, time: bool = False) -> Expr:
    z = chart.coords
    out = []
    for _ in range(int(rng.integers(1, terms + 1))):
        c = const(_COEFFS[int(rng.integers(len(_COEFFS)))])
        mono = ONE
        for _ in range(int(rng.integers(0, max_degree + 1))):
            mono = mul(mono, z[int(rng.integers(chart.dim))])
        if time and rng.random() < 0.3:
            mono = mul(mono, T)
        kind = rng.random()
        if kind < 0.25:
            a, b = rng.choice(chart.dim, size=2, replace=chart.dim < 2)
            mono = mul(mono, exp(sub(z[a], z[b])))
        elif kind < 0.35:
            mono = mul(mono, sin(z[int(rng.integers(chart.dim))]))
        elif kind < 0.45:
            mono = mul(mono, cos(z[int(rng.integers(chart.dim))]))
        out.append(mul(c, mono))
    return sum_exprs(out)


def _random_field(cls, chart: Chart, degree: int, rng: np.random.Generator, density: float, **kw):
    from itertools import combinations

    keys = list(combinations(range(chart.dim), degree))
    coeffs = {}
    for key in keys:
        if degree == 0 or rng.random() < density:
            coeffs[key] = random_expr(chart, rng, **kw)
    if not coeffs and keys:
        coeffs[keys[int(rng.integers(len(keys)))]] = random_expr(chart, rng, **kw)
    return cls(chart, degree, coeffs)


def random_multivector(chart: Chart, degree: int, rng: np.random.Generator, density: float = 0.5, **kw) -> Multivector:
    return _random_field(Multivector, chart, degree, rng, density, **kw)


def random_form(chart: Chart, degree: int, rng: np.random.Generator, density: float = 0.5, **kw) -> Form:
    return _random_field(Form, chart, degree, rng, density, **kw)
