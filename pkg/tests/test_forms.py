"""Exterior algebra: frozen examples and exact structural identities."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from cubeforms.forms import Cube, DimensionMismatch, FormsError, Polynomial, PolyForm, pullback

from conftest import polyforms, polynomials, random_form, random_polynomial_map

import random


def var(n, i):
    return Polynomial.variable(n, i)


def const(n, c):
    return Polynomial.constant(n, c)


class TestAdd:
    def test_dx_plus_dx(self):
        dx = PolyForm.dx(2, 1)
        assert dx + dx == PolyForm(2, 1, {(1,): const(2, 2)})

    def test_additive_identity(self):
        w = PolyForm(2, 1, {(2,): var(2, 1)})
        assert w + PolyForm.zero(2, 1) == w

    def test_cancellation_gives_canonical_zero(self):
        w = PolyForm(2, 1, {(2,): var(2, 1)})
        total = w + (-w)
        assert total.is_zero
        assert total.terms == {}

    def test_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            PolyForm.dx(2, 1) + PolyForm.dx(3, 1)
        with pytest.raises(DimensionMismatch):
            PolyForm.dx(2, 1) + PolyForm.zero(2, 2)


class TestWedge:
    def test_repeated_index_annihilates(self):
        dx = PolyForm.dx(2, 1)
        assert dx.wedge(dx).is_zero

    def test_anticommutativity_of_one_forms(self):
        dx, dy = PolyForm.dx(2, 1), PolyForm.dx(2, 2)
        assert dx.wedge(dy) == PolyForm(2, 2, {(1, 2): const(2, 1)})
        assert dy.wedge(dx) == PolyForm(2, 2, {(1, 2): const(2, -1)})

    def test_bilinearity(self):
        xdx = PolyForm(2, 1, {(1,): var(2, 1)})
        ydy = PolyForm(2, 1, {(2,): var(2, 2)})
        assert xdx.wedge(ydy) == PolyForm(2, 2, {(1, 2): var(2, 1) * var(2, 2)})

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_graded_anticommutativity(self, data):
        n = data.draw(st.integers(1, 4))
        ka = data.draw(st.integers(0, n))
        kb = data.draw(st.integers(0, n))
        a = data.draw(polyforms(n=n, k=ka))
        b = data.draw(polyforms(n=n, k=kb))
        sign = (-1) ** (ka * kb)
        assert a.wedge(b) == b.wedge(a) * sign


class TestExteriorDerivative:
    def test_d_of_product(self):
        f = PolyForm.from_polynomial(var(2, 1) * var(2, 2))
        assert f.d() == PolyForm(2, 1, {(1,): var(2, 2), (2,): var(2, 1)})

    def test_closed_one_form(self):
        w = PolyForm(2, 1, {(1,): var(2, 2), (2,): var(2, 1)})
        assert w.d().is_zero

    def test_x_dy(self):
        w = PolyForm(2, 1, {(2,): var(2, 1)})
        assert w.d() == PolyForm(2, 2, {(1, 2): const(2, 1)})

    @settings(max_examples=100, deadline=None)
    @given(polyforms())
    def test_dd_zero(self, w):
        assert w.d().d().is_zero

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_leibniz(self, data):
        n = data.draw(st.integers(1, 3))
        ka = data.draw(st.integers(0, n))
        a = data.draw(polyforms(n=n, k=ka, max_degree=2))
        b = data.draw(polyforms(n=n, k=data.draw(st.integers(0, n)), max_degree=2))
        lhs = a.wedge(b).d()
        rhs = a.d().wedge(b) + a.wedge(b.d()) * ((-1) ** ka)
        assert lhs == rhs


class TestSplitLast:
    def test_mixed_form(self):
        w = PolyForm(2, 1, {(2,): var(2, 1), (1,): var(2, 2)})
        w1, w2 = w.split_last()
        assert w1 == PolyForm.from_polynomial(var(2, 1))
        assert w2 == PolyForm(2, 1, {(1,): var(2, 2)})

    def test_top_form(self):
        w = PolyForm(2, 2, {(1, 2): const(2, 1)})
        w1, w2 = w.split_last()
        assert w1 == PolyForm.dx(2, 1)
        assert w2.is_zero

    def test_no_last_differential(self):
        w = PolyForm(2, 1, {(1,): var(2, 2)})
        w1, w2 = w.split_last()
        assert w1.is_zero
        assert w2 == w

    @settings(max_examples=100, deadline=None)
    @given(polyforms())
    def test_reconstruction(self, w):
        w1, w2 = w.split_last()
        if w.k == 0:
            assert w1.is_zero and w2 == w
        else:
            assert w1.wedge(PolyForm.dx(w.n, w.n)) + w2 == w
        for part in (w1, w2):
            assert all(w.n not in idx for idx in part.terms)


class TestRestrict:
    def test_vanishing_slice(self):
        p = Polynomial(2, {(0, 0): F(1, 2), (0, 1): F(-1)})
        w = PolyForm(2, 1, {(1,): p})
        assert w.restrict(2, F(1, 2)).is_zero

    def test_unit_slice(self):
        w = PolyForm(2, 1, {(1,): var(2, 2)})
        assert w.restrict(2, 1) == PolyForm.dx(1, 1)

    def test_polynomial_substitution(self):
        p = var(2, 1) ** 2 + var(2, 2)
        w = PolyForm(2, 1, {(1,): p})
        assert w.restrict(2, 0) == PolyForm(1, 1, {(1,): var(1, 1) ** 2})

    def test_rejects_contained_differential(self):
        w = PolyForm(2, 1, {(2,): var(2, 1)})
        with pytest.raises(FormsError):
            w.restrict(2, 0)

    def test_index_shift(self):
        w = PolyForm(3, 1, {(3,): const(3, 1)})
        restricted = w.restrict(1, 0)
        assert restricted == PolyForm(2, 1, {(2,): const(2, 1)})


class TestFiberIntegrate:
    def test_zero_form_coefficient(self):
        w = PolyForm.from_polynomial(var(2, 1))
        out = w.fiber_integrate(2, 0)
        assert out == PolyForm.from_polynomial(var(2, 1) * var(2, 2))

    def test_constant_one_form(self):
        w = PolyForm(2, 1, {(1,): const(2, 1)})
        out = w.fiber_integrate(2, F(1, 2))
        expected = Polynomial(2, {(0, 1): F(1), (0, 0): F(-1, 2)})
        assert out == PolyForm(2, 1, {(1,): expected})

    def test_zero(self):
        assert PolyForm.zero(2, 1).fiber_integrate(2, 0).is_zero

    @settings(max_examples=80, deadline=None)
    @given(st.data())
    def test_right_inverse_of_partial(self, data):
        n = data.draw(st.integers(1, 3))
        k = data.draw(st.integers(0, n - 1))
        w = data.draw(polyforms(n=n, k=k, max_degree=3)).split_last()[1]
        bar = w.fiber_integrate(n, F(1, 2))
        back = PolyForm(n, k, {idx: p.partial(n) for idx, p in bar.terms.items()})
        assert back == w
        assert all(p.subs_value(n, F(1, 2)).is_zero for p in bar.terms.values())


class TestIncludeFromFace:
    def test_round_trip_with_restrict(self):
        w = PolyForm(1, 1, {(1,): var(1, 1)})
        lifted = w.include_from_face()
        assert lifted.n == 2
        assert lifted.restrict(2, F(1, 3)) == w

    def test_constant(self):
        c = PolyForm.from_polynomial(const(1, 5))
        assert c.include_from_face() == PolyForm.from_polynomial(const(2, 5))

    def test_zero(self):
        assert PolyForm.zero(2, 1).include_from_face().is_zero


class TestPullback:
    def test_coordinate_swap(self):
        phi = [var(2, 2), var(2, 1)]
        assert pullback(phi, PolyForm.dx(2, 1)) == PolyForm.dx(2, 2)

    def test_chain_rule(self):
        phi = [var(1, 1) ** 2]
        out = pullback(phi, PolyForm.dx(1, 1))
        assert out == PolyForm(1, 1, {(1,): 2 * var(1, 1)})

    def test_arity_mismatch(self):
        with pytest.raises(DimensionMismatch):
            pullback([var(1, 1)], PolyForm.dx(2, 1))

    def test_commutes_with_d_random(self):
        rng = random.Random(42)
        for _ in range(50):
            n = rng.randint(1, 3)
            m = rng.randint(1, 3)
            k = rng.randint(0, m)
            phi = random_polynomial_map(rng, n, m)
            w = random_form(rng, m, k, max_degree=2, max_terms=2, bound=3)
            assert pullback(phi, w.d()) == pullback(phi, w).d()

    def test_commutes_with_wedge_random(self):
        rng = random.Random(43)
        for _ in range(30):
            n = rng.randint(1, 3)
            m = rng.randint(1, 3)
            phi = random_polynomial_map(rng, n, m)
            a = random_form(rng, m, rng.randint(0, m), max_degree=2, max_terms=2, bound=3)
            b = random_form(rng, m, rng.randint(0, m), max_degree=2, max_terms=2, bound=3)
            assert pullback(phi, a.wedge(b)) == pullback(phi, a).wedge(pullback(phi, b))


class TestCube:
    def test_degenerate_rejected(self):
        with pytest.raises(FormsError):
            Cube((F(0), F(0)), (F(1), F(0)))

    def test_midpoint_and_width(self):
        c = Cube((F(0), F(1)), (F(2), F(3)))
        assert c.midpoint(2) == 2
        assert c.width(1) == 2

    def test_drop_axis(self):
        c = Cube((F(0), F(1)), (F(2), F(3)))
        assert c.drop_axis(2) == Cube((F(0),), (F(2),))


class TestDegreeBounds:
    def test_degree_above_ambient_is_zero(self):
        w = PolyForm(2, 1, {(1,): var(2, 2)})
        assert w.wedge(w.wedge(PolyForm.dx(2, 2))).is_zero

    def test_zero_form_empty_index(self):
        w = PolyForm.from_polynomial(var(3, 2))
        assert list(w.terms) == [()]
        assert w.k == 0
