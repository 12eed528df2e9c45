"""Simplex integration, Stokes consistency, and the flatness auditor."""

import random

import numpy as np
import pytest

from cubeforms.forms import Cube, Polynomial, PolyForm
from cubeforms.gridforms import GridForm, sample
from cubeforms.simplices import (FlatnessReport, Simplex, SimplexError, boundary,
                                 flatness_check, integrate_over_boundary,
                                 integrate_over_simplex)

from conftest import random_form

UNIT2 = Cube.unit(2)


def sign_grid_2d(res=128, axis=(2,)):
    xs = (np.arange(res) + 0.5) / res
    vals = np.tile(np.sign(xs - 0.5)[:, None], (1, res))
    return GridForm(UNIT2, 1, res, {axis: vals})


class TestSimplex:
    def test_volume_of_standard_triangle(self):
        tri = Simplex(((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)))
        assert abs(tri.volume() - 0.5) < 1e-15

    def test_degenerate_rejected(self):
        with pytest.raises(SimplexError):
            Simplex(((0.0, 0.0), (1.0, 1.0), (2.0, 2.0)))

    def test_too_many_vertices(self):
        with pytest.raises(SimplexError):
            Simplex(((0.0,), (1.0,), (0.5,)))

    def test_boundary_signs(self):
        seg = Simplex(((0.0, 0.0), (1.0, 0.0)))
        faces = boundary(seg)
        assert [s for s, _ in faces] == [1, -1]
        assert faces[0][1].vertices == ((1.0, 0.0),)
        assert faces[1][1].vertices == ((0.0, 0.0),)


class TestIntegration:
    def test_dx_over_segment(self):
        seg = Simplex(((0.0, 0.0), (1.0, 0.0)))
        assert abs(integrate_over_simplex(PolyForm.dx(2, 1), seg) - 1.0) < 1e-14

    def test_area_form_over_triangle(self):
        tri = Simplex(((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)))
        area = PolyForm(2, 2, {(1, 2): Polynomial.constant(2, 1)})
        assert abs(integrate_over_simplex(area, tri) - 0.5) < 1e-14

    def test_odd_permutation_flips_sign(self):
        tri = Simplex(((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)))
        flipped = Simplex(((1.0, 0.0), (0.0, 0.0), (0.0, 1.0)))
        area = PolyForm(2, 2, {(1, 2): Polynomial.constant(2, 1)})
        a = integrate_over_simplex(area, tri)
        b = integrate_over_simplex(area, flipped)
        assert abs(a + b) < 1e-14

    def test_degree_dimension_mismatch(self):
        seg = Simplex(((0.0, 0.0), (1.0, 0.0)))
        area = PolyForm(2, 2, {(1, 2): Polynomial.constant(2, 1)})
        with pytest.raises(SimplexError):
            integrate_over_simplex(area, seg)

    def test_grid_simplex_outside_domain(self):
        g = sample(PolyForm.dx(2, 1), UNIT2, 16)
        seg = Simplex(((0.5, 0.5), (1.5, 0.5)))
        with pytest.raises(SimplexError):
            integrate_over_simplex(g, seg)

    def test_closed_loop_of_constant_form(self):
        tri = Simplex(((0.1, 0.2), (0.8, 0.3), (0.4, 0.9)))
        assert abs(integrate_over_boundary(PolyForm.dx(2, 1), tri)) < 1e-14

    def test_boundary_of_boundary_pairing(self):
        tri = Simplex(((0.1, 0.2), (0.8, 0.3), (0.4, 0.9)))
        f = PolyForm.from_polynomial(Polynomial.variable(2, 1) * Polynomial.variable(2, 2))
        total = 0.0
        for sign, edge in boundary(tri):
            total += sign * integrate_over_boundary(f, edge)
        assert abs(total) < 1e-14

    def test_segment_endpoint_evaluation(self):
        f = PolyForm.from_polynomial(Polynomial.variable(2, 1) ** 2)
        seg = Simplex(((0.25, 0.0), (0.75, 0.5)))
        value = integrate_over_boundary(f, seg)
        assert abs(value - (0.75 ** 2 - 0.25 ** 2)) < 1e-14


class TestStokes:
    def test_polynomial_forms_random_triangles(self):
        rng = random.Random(23)
        for _ in range(40):
            w = random_form(rng, 2, 1, max_degree=3, max_terms=3, bound=5)
            while True:
                pts = tuple((rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95))
                            for _ in range(3))
                try:
                    sigma = Simplex(pts)
                    break
                except SimplexError:
                    continue
            lhs = integrate_over_boundary(w, sigma)
            rhs = integrate_over_simplex(w.d(), sigma)
            assert abs(lhs - rhs) <= 1e-6 * (1 + sigma.volume())

    def test_three_dimensional_segments(self):
        rng = random.Random(29)
        for _ in range(20):
            w = random_form(rng, 3, 0, max_degree=2, max_terms=3, bound=5)
            a = tuple(rng.uniform(0.1, 0.9) for _ in range(3))
            b = tuple(rng.uniform(0.1, 0.9) for _ in range(3))
            seg = Simplex((a, b))
            lhs = integrate_over_boundary(w, seg)
            rhs = integrate_over_simplex(w.d(), seg)
            assert abs(lhs - rhs) <= 1e-9


class TestFlatness:
    def test_sampled_smooth_ratios_near_derivative_norm(self):
        g = sample(PolyForm(2, 1, {(2,): Polynomial.variable(2, 1)}), UNIT2, 128)
        report = flatness_check(g, 300, seed=3, scale_range=(0.02, 0.3))
        assert 0.9 <= report.max_ratio <= 1.1

    def test_jump_across_transversal_blows_up(self):
        # the acceptance suite runs the full-size audit; this one checks the
        # blow-up signature at module scale
        report = flatness_check(sign_grid_2d(), 1000, seed=7, scale_range=(0.01, 0.3))
        small = report.scale_deciles[0]["max"]
        large = report.scale_deciles[9]["max"]
        assert small > 5 * large
        assert report.max_ratio > 100

    def test_jump_along_exact_direction_stays_flat(self):
        report = flatness_check(sign_grid_2d(axis=(1,)), 600, seed=4,
                                scale_range=(0.02, 0.3))
        assert report.max_ratio <= 0.05

    def test_deterministic_given_seed(self):
        g = sample(PolyForm.dx(2, 2), UNIT2, 32)
        a = flatness_check(g, 50, seed=11, scale_range=(0.05, 0.2))
        b = flatness_check(g, 50, seed=11, scale_range=(0.05, 0.2))
        assert [s.ratio for s in a.samples] == [s.ratio for s in b.samples]
        assert a.max_ratio == b.max_ratio

    def test_empty_report(self):
        g = sample(PolyForm.dx(2, 2), UNIT2, 16)
        report = flatness_check(g, 0, seed=1, scale_range=(0.05, 0.2))
        assert report.samples == []
        assert report.max_ratio == 0.0

    def test_verdict_against_threshold(self):
        g = sample(PolyForm(2, 1, {(2,): Polynomial.variable(2, 1)}), UNIT2, 64)
        report = flatness_check(g, 40, seed=2, scale_range=(0.05, 0.2), nprime=0.5)
        assert report.verdict is False  # ratios sit near |dw| = 1
        report2 = flatness_check(g, 40, seed=2, scale_range=(0.05, 0.2), nprime=1.1)
        assert report2.verdict is True

    def test_coefficient_bound_recorded(self):
        g = sample(PolyForm(2, 1, {(2,): Polynomial.variable(2, 1)}), UNIT2, 64)
        report = flatness_check(g, 10, seed=5, scale_range=(0.05, 0.2))
        assert abs(report.coefficient_bound - g.coefficient_bound()) < 1e-15
