"""Shared generators for random exact forms.

Deterministic ``random.Random`` generators are used for the large acceptance
sweeps (hypothesis would dominate the runtime there); hypothesis strategies
built on the same helpers drive the per-module property tests.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

import hypothesis.strategies as st

from cubeforms.forms import Cube, Polynomial, PolyForm


def random_rational(rng: random.Random, bound: int = 10, max_den: int = 8) -> Fraction:
    den = rng.randint(1, max_den)
    num = rng.randint(-bound * den, bound * den)
    return Fraction(num, den)


def random_polynomial(rng: random.Random, nvars: int, max_degree: int = 3,
                      max_terms: int = 4, bound: int = 10) -> Polynomial:
    coeffs = {}
    for _ in range(rng.randint(1, max_terms)):
        exp = tuple(rng.randint(0, max_degree) for _ in range(nvars))
        coeffs[exp] = coeffs.get(exp, Fraction(0)) + random_rational(rng, bound)
    return Polynomial(nvars, coeffs)


def random_form(rng: random.Random, n: int, k: int, max_degree: int = 3,
                max_terms: int = 3, bound: int = 10) -> PolyForm:
    terms = {}
    indices = list(combinations(range(1, n + 1), k))
    for idx in indices:
        if rng.random() < 0.85 or len(indices) == 1:
            p = random_polynomial(rng, n, max_degree, max_terms, bound)
            if not p.is_zero:
                terms[idx] = p
    return PolyForm(n, k, terms)


def random_closed_form(rng: random.Random, n: int, k: int,
                       max_degree: int = 3) -> PolyForm:
    """Exactly closed random k-form.

    For k = n any form is closed and is drawn directly; otherwise closed
    forms are differentials of random (k-1)-forms (on a box every closed
    polynomial form is exact, so this loses no generality up to the
    constant-coefficient part, which is mixed in separately).
    """
    if k == n and rng.random() < 0.5:
        return random_form(rng, n, k, max_degree)
    eta = random_form(rng, n, k - 1, max_degree)
    w = eta.d()
    if rng.random() < 0.3:
        const_terms = {}
        for idx in combinations(range(1, n + 1), k):
            if rng.random() < 0.5:
                c = random_rational(rng)
                if c:
                    const_terms[idx] = Polynomial.constant(n, c)
        w = w + PolyForm(n, k, const_terms)
    return w


def random_polynomial_map(rng: random.Random, n_from: int, n_to: int,
                          max_degree: int = 2) -> list[Polynomial]:
    return [random_polynomial(rng, n_from, max_degree, max_terms=3, bound=3)
            for _ in range(n_to)]


# ---------------------------------------------------------------------------
# Hypothesis strategies
# ---------------------------------------------------------------------------

rationals = st.fractions(min_value=-10, max_value=10, max_denominator=8)


@st.composite
def polynomials(draw, nvars: int, max_degree: int = 3, max_terms: int = 4):
    coeffs = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exp = tuple(draw(st.integers(0, max_degree)) for _ in range(nvars))
        coeffs[exp] = coeffs.get(exp, Fraction(0)) + draw(rationals)
    return Polynomial(nvars, coeffs)


@st.composite
def polyforms(draw, n: int | None = None, k: int | None = None,
              max_degree: int = 3, allow_top: bool = True):
    if n is None:
        n = draw(st.integers(1, 4))
    if k is None:
        k = draw(st.integers(0, n if allow_top else n - 1))
    terms = {}
    for idx in combinations(range(1, n + 1), k):
        if draw(st.booleans()):
            p = draw(polynomials(n, max_degree))
            if not p.is_zero:
                terms[idx] = p
    return PolyForm(n, k, terms)


@st.composite
def cubes(draw, n: int):
    lo, hi = [], []
    for _ in range(n):
        a = draw(st.fractions(min_value=-2, max_value=1, max_denominator=4))
        width = draw(st.fractions(min_value=Fraction(1, 4), max_value=1,
                                  max_denominator=4))
        lo.append(a)
        hi.append(a + width)
    return Cube(tuple(lo), tuple(hi))
