#!/usr/bin/env python3
"""Two-sided sup-norm enclosures: rigorous uppers, witnessed lowers.

The running example is p(x) = x(1-x) on [0, 1], whose true sup is 1/4.
Its Bernstein coefficients (0, 1/2, 0) give the conservative upper bound
1/2; subdividing the box once already recovers the exact 1/4.
"""

from fractions import Fraction as F

from cubeforms import Cube, Polynomial, PolyForm, bernstein_degree_elevate, flat_seminorm, sup_norm

unit = Cube.unit(1)
p = Polynomial(1, {(1,): F(1), (2,): F(-1)})     # x - x^2
form = PolyForm.from_polynomial(p)

print("Bernstein coefficients of x(1-x), degree 2:", bernstein_degree_elevate(p, unit))
print("elevated to degree 6:", bernstein_degree_elevate(p, unit, degrees=(6,)))
print("(elevation tightens the max toward the true sup 1/4)\n")

for subdivisions in (0, 1, 2):
    b = sup_norm(form, unit, grid_per_axis=5, subdivisions=subdivisions)
    print(f"subdivisions={subdivisions}:  enclosure [{b.lower}, {b.upper}]"
          f"   witness x = {b.witness[0]}")

# the lower bound is always attained at its witness, so a reported bound can
# be replayed by evaluating the polynomial there
b = sup_norm(form, unit, grid_per_axis=5)
print("\nwitness check: |p(witness)| =", abs(p.evaluate(b.witness)), "== lower")

# multilinear coefficients are exactly enclosed once the grid has corners
square = Cube.unit(2)
bilinear = PolyForm.from_polynomial(
    Polynomial(2, {(1, 1): F(3), (0, 0): F(-1, 2)}))
tight = sup_norm(bilinear, square, grid_per_axis=2)
print(f"\nbilinear form on the square: lower == upper == {tight.upper}")

# the combined seminorm adds the derivative's norm
w = PolyForm(2, 1, {(2,): Polynomial.variable(2, 1)})   # x dy
print("\n|x dy|            =", sup_norm(w, square).upper)
print("|x dy| + |d(x dy)| =", flat_seminorm(w, square).upper)
