"""Rigorous sup-norm bounds for polynomial forms on rational boxes.

The coefficient seminorm of a form (max over multi-indices of the sup of
|coefficient| over the box) is bracketed from two sides:

* upper bound: the maximum absolute Bernstein coefficient of each coefficient
  polynomial after an exact affine change of variables onto the unit box.
  This is conservative, exact-rational, and tightens under bisection; an
  optional ``subdivisions`` level bisects every axis that many times.
* lower bound: exact evaluation on a uniform rational sample grid, with the
  maximizing sample point kept as a reproducible witness.

The Bernstein transform is run in scaled integer arithmetic: with integer
coefficients c (common denominator pulled out), the scaled coefficients

    B_beta = sum_{alpha <= beta} prod_i  C(d_i - alpha_i, beta_i - alpha_i) * c_alpha

are integers, and the true Bernstein coefficient is B_beta / prod_i C(d_i, beta_i).
Only the final maximum touches Fraction arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lcm
from typing import Sequence

import numpy as np

from .forms import Cube, DimensionMismatch, Polynomial, PolyForm


@dataclass(frozen=True)
class NormBound:
    """Two-sided enclosure of a sup seminorm.

    ``lower`` is attained: it is |coefficient(witness)| for some coefficient
    of the bounded form (witness is None only for derived bounds such as
    sums, and for the zero form).
    """

    lower: Fraction
    upper: Fraction
    witness: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"NormBound lower {self.lower} > upper {self.upper}")

    def __add__(self, other: "NormBound") -> "NormBound":
        return NormBound(self.lower + other.lower, self.upper + other.upper, None)

    def __str__(self) -> str:
        return f"[{self.lower}, {self.upper}]"


# ---------------------------------------------------------------------------
# Bernstein machinery
# ---------------------------------------------------------------------------


def _to_unit_box(p: Polynomial, cube: Cube) -> Polynomial:
    """Exact substitution x_i = lo_i + width_i * t_i, mapping [0,1]^n onto cube."""
    if all(a == 0 for a in cube.lo) and all(b == 1 for b in cube.hi):
        return p
    comps = []
    for i in range(1, cube.n + 1):
        t = Polynomial.variable(cube.n, i)
        comps.append(t * cube.width(i) + Polynomial.constant(cube.n, cube.lo[i - 1]))
    return p.compose(comps)


def _dense_integer_coeffs(p: Polynomial) -> tuple[np.ndarray, int, tuple[int, ...]]:
    """Dense integer coefficient tensor plus the common denominator."""
    degs = p.degrees()
    shape = tuple(d + 1 for d in degs)
    den = lcm(*(c.denominator for c in p.coeffs.values())) if p.coeffs else 1
    arr = np.zeros(shape, dtype=object)
    for exp, c in p.coeffs.items():
        arr[exp] = c.numerator * (den // c.denominator)
    return arr, den, degs

def _apply_axis(arr: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(arr, axis, 0)
    flat = moved.reshape(mat.shape[1], -1)
    out = np.dot(mat, flat)
    return np.moveaxis(out.reshape((mat.shape[0],) + moved.shape[1:]), 0, axis)


def _scaled_bernstein(p: Polynomial) -> tuple[np.ndarray, int, tuple[int, ...]]:
    """Integer tensor B with b_beta = B_beta / (den * prod C(d_i, beta_i))."""
    arr, den, degs = _dense_integer_coeffs(p)
    for axis, d in enumerate(degs):
        if d == 0:
            continue
        mat = np.zeros((d + 1, d + 1), dtype=object)
        for j in range(d + 1):
            for a in range(j + 1):
                mat[j, a] = comb(d - a, j - a)
        arr = _apply_axis(arr, mat, axis)
    return arr, den, degs


def bernstein_coefficients(p: Polynomial, cube: Cube) -> np.ndarray:
    """Bernstein coefficients of p over the cube, as a Fraction tensor.

    Shape is (d_1+1, ..., d_n+1) for the per-variable degrees d_i of p.
    The enclosure property max|b| >= sup|p| holds on the cube, with equality
    at the corners (b at a corner index equals the corner value of p).
    """
    if p.nvars != cube.n:
        raise DimensionMismatch("polynomial/cube arity mismatch")
    q = _to_unit_box(p, cube)
    scaled, den, degs = _scaled_bernstein(q)
    out = np.empty(scaled.shape, dtype=object)
    for beta in np.ndindex(scaled.shape):
        d = den
        for deg, b in zip(degs, beta):
            d *= comb(deg, b)
        out[beta] = Fraction(int(scaled[beta]), d)
    return out


def bernstein_degree_elevate(p: Polynomial, cube: Cube,
                             degrees: Sequence[int] | None = None) -> list[Fraction]:
    """Row-major Bernstein coefficients of p on the cube.

    With ``degrees`` given (componentwise >= the natural degrees of p), the
    coefficients are produced in that elevated basis; elevation never
    increases the maximum absolute coefficient, so higher degrees give
    tighter range enclosures.
    """
    if degrees is None:
        return list(bernstein_coefficients(p, cube).flat)
    if len(degrees) != p.nvars:
        raise DimensionMismatch("one target degree per variable required")
    q = _to_unit_box(p, cube)
    nat = q.degrees()
    if any(t < d for t, d in zip(degrees, nat)):
        raise ValueError(f"target degrees {tuple(degrees)} below natural {nat}")
    arr = np.zeros(tuple(t + 1 for t in degrees), dtype=object)
    den = lcm(*(c.denominator for c in q.coeffs.values())) if q.coeffs else 1
    for exp, c in q.coeffs.items():
        arr[exp] = c.numerator * (den // c.denominator)
    for axis, d in enumerate(degrees):
        if d == 0:
            continue
        mat = np.zeros((d + 1, d + 1), dtype=object)
        for j in range(d + 1):
            for a in range(j + 1):
                mat[j, a] = comb(d - a, j - a)
        arr = _apply_axis(arr, mat, axis)
    coeffs = []
    for beta in np.ndindex(arr.shape):
        dd = den
        for deg, b in zip(degrees, beta):
            dd *= comb(deg, b)
        coeffs.append(Fraction(int(arr[beta]), dd))
    return coeffs


def _bisect(cube_lo, cube_hi):
    """All 2^n half-boxes of the unit-box coordinates [lo, hi] per axis."""
    mids = [(a + b) / 2 for a, b in zip(cube_lo, cube_hi)]
    for choice in itertools.product((0, 1), repeat=len(cube_lo)):
        lo = tuple(m if c else a for a, m, c in zip(cube_lo, mids, choice))
        hi = tuple(b if c else m for b, m, c in zip(cube_hi, mids, choice))
        yield lo, hi


def polynomial_sup_bound(p: Polynomial, cube: Cube, subdivisions: int = 0) -> Fraction:
    """Rigorous upper bound for sup |p| over the cube via Bernstein coefficients."""
    if p.is_zero:
        return Fraction(0)
    if p.nvars != cube.n:
        raise DimensionMismatch("polynomial/cube arity mismatch")
    q = _to_unit_box(p, cube)
    boxes = [(tuple(Fraction(0) for _ in range(cube.n)),
              tuple(Fraction(1) for _ in range(cube.n)))]
    for _ in range(subdivisions):
        boxes = [half for box in boxes for half in _bisect(*box)]
    best_num, best_den = 0, 1
    for lo, hi in boxes:
        if all(a == 0 for a in lo) and all(b == 1 for b in hi):
            local = q
        else:
            local = _to_unit_box(q, Cube(lo, hi))
        scaled, den, degs = _scaled_bernstein(local)
        for beta in np.ndindex(scaled.shape):
            num = abs(int(scaled[beta]))
            d = den
            for deg, b in zip(degs, beta):
                d *= comb(deg, b)
            if num * best_den > best_num * d:
                best_num, best_den = num, d
    return Fraction(best_num, best_den)


# ---------------------------------------------------------------------------
# Sample grids for witnessed lower bounds
# ---------------------------------------------------------------------------


def sample_grid(cube: Cube, grid_per_axis: int) -> list[tuple[Fraction, ...]]:
    """Uniform rational grid; includes the corners for grid_per_axis >= 2.

    grid_per_axis = 1 samples only the center.  Refining g -> 2g - 1 nests
    the grids, so witnessed lower bounds are monotone along that chain.
    """
    if grid_per_axis < 1:
        raise ValueError("grid_per_axis must be >= 1")
    axes = []
    for i in range(1, cube.n + 1):
        if grid_per_axis == 1:
            axes.append([cube.midpoint(i)])
        else:
            lo, w = cube.lo[i - 1], cube.width(i)
            axes.append([lo + w * Fraction(j, grid_per_axis - 1)
                         for j in range(grid_per_axis)])
    return [tuple(pt) for pt in itertools.product(*axes)]


# ---------------------------------------------------------------------------
# Seminorms
# ---------------------------------------------------------------------------


def sup_norm(w: PolyForm, cube: Cube, grid_per_axis: int = 2,
             subdivisions: int = 0) -> NormBound:
    """Two-sided bound for the coefficient sup seminorm of w over the cube.

    Upper: max over multi-indices of the Bernstein bound of the coefficient.
    Lower: max over multi-indices and rational grid samples, with witness.
    For polynomial coefficients the essential sup equals the sup, so the pair
    encloses the seminorm.
    """
    if w.n != cube.n:
        raise DimensionMismatch(f"form on R^{w.n} vs cube in R^{cube.n}")
    if w.is_zero:
        return NormBound(Fraction(0), Fraction(0), cube.center())
    upper = Fraction(0)
    for p in w.terms.values():
        b = polynomial_sup_bound(p, cube, subdivisions)
        if b > upper:
            upper = b
    lower = Fraction(-1)
    witness: tuple[Fraction, ...] | None = None
    for point in sample_grid(cube, grid_per_axis):
        for p in w.terms.values():
            v = abs(p.evaluate(point))
            if v > lower:
                lower, witness = v, point
    return NormBound(lower, upper, witness)


def flat_seminorm(w: PolyForm, cube: Cube, grid_per_axis: int = 2,
                  subdivisions: int = 0) -> NormBound:
    """Bound for the combined seminorm |w| + |dw| (componentwise sum)."""
    a = sup_norm(w, cube, grid_per_axis, subdivisions)
    b = sup_norm(w.d(), cube, grid_per_axis, subdivisions)
    return a + b
