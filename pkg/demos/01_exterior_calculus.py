#!/usr/bin/env python3
"""Exact exterior calculus on the unit square, step by step.

Every coefficient below is a rational polynomial and every identity is
checked by structural equality, never by a tolerance.
"""

from fractions import Fraction as F

from cubeforms import Cube, Polynomial, PolyForm, pullback

n = 2
x = Polynomial.variable(n, 1)
y = Polynomial.variable(n, 2)

# -- building blocks --------------------------------------------------------

f = PolyForm.from_polynomial(x * y)          # a 0-form
w = PolyForm(n, 1, {(2,): x})                # x dy
closed = PolyForm(n, 1, {(1,): y, (2,): x})  # y dx + x dy = d(xy)

print("f          =", f)
print("w          =", w)
print("df         =", f.d())
print("dw         =", w.d())
print("d(y dx + x dy) =", closed.d(), "   (closed: d of an exact form)")

# -- the two defining identities, exactly -----------------------------------

dx, dy = PolyForm.dx(n, 1), PolyForm.dx(n, 2)
print("\ndx ^ dy    =", dx.wedge(dy))
print("dy ^ dx    =", dy.wedge(dx), "   (anticommutes)")
print("d(d(f)) is zero:", f.d().d().is_zero)

a = PolyForm(n, 1, {(1,): x * x})
b = PolyForm.from_polynomial(y)
leibniz_lhs = a.wedge(b).d()
leibniz_rhs = a.d().wedge(b) + a.wedge(b.d()) * (-1)
print("Leibniz d(a^b) = da^b - a^db holds exactly:", leibniz_lhs == leibniz_rhs)

# -- splitting along the last axis: the engine of the primitive recursion ---

w1, w2 = closed.split_last()
print("\nsplit of y dx + x dy along dy:  w1 =", w1, ",  w2 =", w2)
print("reconstructs:", w1.wedge(dy) + w2 == closed)

wbar = w1.fiber_integrate(2, F(1, 2))
print("fiber integral of w1 from y = 1/2:", wbar)
print("vanishes on the anchor slice:", wbar.restrict(2, F(1, 2)).is_zero)

# -- pullback commutes with d, exactly --------------------------------------

phi = [x * x - y, x * y]                     # a polynomial map R^2 -> R^2
lhs = pullback(phi, closed.d())
rhs = pullback(phi, closed).d()
print("\npullback(phi, dw) == d(pullback(phi, w)):", lhs == rhs)
print("pullback of x dy along phi:", pullback(phi, w))
