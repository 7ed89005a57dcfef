"""
Unit tests for embedding.py: the embedding of polytopes and the DC / quasidifferential routes.
"""
import math
import unittest

import numpy as np

from DirectedSubdiff.case_studies import convex_max_example, convex_max_reference, random_max_affine, random_polytope
from DirectedSubdiff.directed_sets import DirectedInterval, DirectedSet, di_from_interval, ds_equal, ds_norm
from DirectedSubdiff.embedding import (
    EmbeddedSet, dc_directed_subdifferential, dc_of_directional_derivative, embed,
    qd_directed_subdifferential, qd_pair_from_dc,
)
from DirectedSubdiff.errors import DimensionError, NotPolyhedralError
from DirectedSubdiff.expr_core import parse
from DirectedSubdiff.geometry import Polytope, make_sphere_grid, minkowski_sum, project, support_function, supporting_face

DIAMOND = Polytope([[1, 0], [-1, 0], [0, 1], [0, -1]])
ORIGIN = Polytope([[0, 0]])


class TestEmbed(unittest.TestCase):
    def test_interval(self):
        embedded = embed(Polytope([[2.0], [-1.0], [0.5]]), make_sphere_grid(1))
        self.assertEqual(embedded.interval, di_from_interval(-1.0, 2.0))

    def test_diamond_on_diagonal_and_off_diagonal(self):
        grid = make_sphere_grid(2, 16)
        J = embed(DIAMOND, grid)
        self.assertIsInstance(J, EmbeddedSet)
        self.assertIs(J.source, DIAMOND)
        half = math.sqrt(0.5)
        # direction pi/4
        self.assertEqual(J.support(2), half)
        lower = J.lower(2).interval
        self.assertAlmostEqual(lower.lower_endpoint, -half, places=15)
        self.assertAlmostEqual(lower.upper_endpoint, half, places=15)
        # direction pi/8 has l1 > |l2|: a point interval at l2
        l2 = math.sin(math.pi / 8)
        self.assertAlmostEqual(J.support(1), math.cos(math.pi / 8), places=15)
        lower = J.lower(1).interval
        self.assertAlmostEqual(lower.lower_endpoint, l2, places=15)
        self.assertAlmostEqual(lower.upper_endpoint, l2, places=15)

    def test_matches_closed_form_everywhere(self):
        grid = make_sphere_grid(2, 360)
        J = embed(DIAMOND, grid)
        for i, l in enumerate(grid.directions):
            support, interval = convex_max_reference(l)
            self.assertAlmostEqual(J.support(i), support, delta=1e-10)
            lower = J.lower(i).interval
            self.assertAlmostEqual(lower.a1_neg, interval.a1_neg, delta=1e-10)
            self.assertAlmostEqual(lower.a1_pos, interval.a1_pos, delta=1e-10)

    def test_singleton(self):
        c = np.array([1.0, -2.0, 0.5])
        grid = make_sphere_grid(3, (4, 6), sub_resolution=8)
        J = embed(Polytope([c]), grid)
        for i, l in enumerate(grid.directions):
            self.assertEqual(J.support(i), support_function(Polytope([c]), l))
            self.assertAlmostEqual(J.support(i), float(c @ l), places=14)
            expected = embed(Polytope([project(l, c)]), grid.sub_grid)
            self.assertTrue(ds_equal(J.lower(i), expected, tol=1e-14))

    def test_support_and_face_consistency(self):
        rng = np.random.default_rng(12)
        grid = make_sphere_grid(2, 24)
        for _ in range(10):
            C = random_polytope(2, rng)
            J = embed(C, grid)
            for i, l in enumerate(grid.directions):
                self.assertEqual(J.support(i), support_function(C, l))
                face = Polytope(project(l, supporting_face(C, l).vertices))
                self.assertTrue(ds_equal(J.lower(i), embed(face, grid.sub_grid), tol=1e-12))

    def test_matches_direction_by_direction_assembly_in_space(self):
        rng = np.random.default_rng(13)
        grid = make_sphere_grid(3, (6, 10), sub_resolution=24)
        for _ in range(5):
            C = random_polytope(3, rng)
            supports = [support_function(C, l) for l in grid.directions]
            lowers = [embed(Polytope(project(l, supporting_face(C, l).vertices)), grid.sub_grid)
                      for l in grid.directions]
            expected = DirectedSet.from_entries(grid, supports, lowers)
            J = embed(C, grid)
            np.testing.assert_array_equal(J.supports, expected.supports)
            self.assertTrue(ds_equal(J, expected, tol=1e-12))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            embed(DIAMOND, make_sphere_grid(3, (3, 4), sub_resolution=8))

    def test_positive_linearity(self):
        rng = np.random.default_rng(21)
        grid = make_sphere_grid(2, 24)
        scalars = [0.0, 0.5, 1.0, 2.0]
        for _ in range(100):
            A = random_polytope(2, rng)
            B = random_polytope(2, rng)
            lam, mu = float(rng.choice(scalars)), float(rng.choice(scalars))
            lhs = embed(minkowski_sum(A.scale(lam), B.scale(mu)), grid)
            rhs = lam * embed(A, grid) + mu * embed(B, grid)
            self.assertLessEqual(ds_norm(lhs - rhs), 1e-9)

    def test_positive_linearity_in_space(self):
        rng = np.random.default_rng(22)
        grid = make_sphere_grid(3, (4, 8), sub_resolution=16)
        for _ in range(5):
            A = random_polytope(3, rng)
            B = random_polytope(3, rng)
            lhs = embed(minkowski_sum(A, B.scale(0.5)), grid)
            rhs = embed(A, grid) + 0.5 * embed(B, grid)
            self.assertLessEqual(ds_norm(lhs - rhs), 1e-9)


class TestRoutes(unittest.TestCase):
    def setUp(self):
        self.grid = make_sphere_grid(2, 48)

    def test_dc_route_of_convex_max(self):
        f = convex_max_example()
        zero = parse("0", 2)
        value = dc_directed_subdifferential(f, zero, [0.0, 0.0], self.grid)
        self.assertTrue(ds_equal(value, embed(DIAMOND, self.grid), tol=0.0))

    def test_equal_parts_give_zero(self):
        g = parse("max(x1 - x2, 2 * x2, -x1)", 2)
        value = dc_directed_subdifferential(g, g, [0.3, -0.2], self.grid)
        self.assertEqual(ds_norm(value), 0.0)

    def test_non_polyhedral_parts(self):
        with self.assertRaises(NotPolyhedralError):
            dc_directed_subdifferential(parse("min(x1, x2)", 2), parse("0", 2), [0, 0], self.grid)

    def test_difference_of_segments(self):
        g = parse("max(x1, x2)", 2)
        h = parse("max(-x1, -x2)", 2)
        value = dc_directed_subdifferential(g, h, [0.0, 0.0], self.grid)
        segment = Polytope([[1, 0], [0, 1]])
        expected = embed(segment, self.grid) - embed(segment.negate(), self.grid)
        self.assertTrue(ds_equal(value, expected, tol=0.0))

    def test_qd_route_reproduces_dc_route(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            x = rng.uniform(-1, 1, size=2)
            g = random_max_affine(2, rng, ties_at=x)
            h = random_max_affine(2, rng, ties_at=x)
            lower, upper = qd_pair_from_dc(g, h, x)
            qd = qd_directed_subdifferential(lower, upper, self.grid)
            dc = dc_directed_subdifferential(g, h, x, self.grid)
            self.assertLessEqual(ds_norm(qd - dc), 1e-12)
            via_derivative = dc_of_directional_derivative(g, h, x, self.grid)
            self.assertLessEqual(ds_norm(via_derivative - dc), 1e-9)

    def test_qd_trivial_pairs(self):
        self.assertTrue(ds_equal(qd_directed_subdifferential(DIAMOND, ORIGIN, self.grid),
                                 embed(DIAMOND, self.grid), tol=0.0))
        zero = qd_directed_subdifferential(ORIGIN, ORIGIN, self.grid)
        self.assertTrue(ds_equal(zero, DirectedSet.zero(self.grid), tol=0.0))

    def test_qd_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            qd_directed_subdifferential(DIAMOND, Polytope([[0.0]]), self.grid)

    def test_point_intervals_on_diamond(self):
        value = qd_directed_subdifferential(DIAMOND, ORIGIN, make_sphere_grid(2, 8))
        self.assertEqual(value.lower(0).interval, DirectedInterval(-0.0, 0.0))


if __name__ == "__main__":
    unittest.main(argv=[''], verbosity=2, exit=False)
