"""
Unit tests for directed_sets.py: directed intervals, linear operations, norm, equality, JSON.
"""
import json
import math
import unittest

import numpy as np

from DirectedSubdiff.case_studies import random_polytope
from DirectedSubdiff.directed_sets import (
    DirectedInterval, DirectedSet, di_from_interval, ds_deserialize, ds_equal, ds_linear_comb,
    ds_norm, ds_serialize, json_text,
)
from DirectedSubdiff.embedding import embed
from DirectedSubdiff.errors import DimensionError, SerializationError
from DirectedSubdiff.geometry import Polytope, make_sphere_grid

DIAMOND = Polytope([[1, 0], [-1, 0], [0, 1], [0, -1]])


def interval_set(a1_neg: float, a1_pos: float) -> DirectedSet:
    return DirectedSet.from_interval(DirectedInterval(a1_neg, a1_pos))


class TestDirectedInterval(unittest.TestCase):
    def test_from_interval(self):
        self.assertEqual(di_from_interval(1, 3), DirectedInterval(-1, 3))
        self.assertEqual(di_from_interval(0, 0), DirectedInterval(0, 0))
        self.assertEqual(di_from_interval(-2, 5), DirectedInterval(2, 5))
        with self.assertRaises(ValueError):
            di_from_interval(3, 1)

    def test_linear_combination_may_invert(self):
        result = 2 * di_from_interval(1, 2) - di_from_interval(0, 3)
        self.assertEqual(result, DirectedInterval(-2, 1))
        self.assertEqual((result.lower_endpoint, result.upper_endpoint), (2, 1))
        self.assertTrue(result.is_inverted)
        self.assertFalse(di_from_interval(0, 1).is_inverted)

    def test_norm(self):
        self.assertEqual(DirectedInterval(-1, 3).norm(), 3)

    def test_entries_must_be_finite(self):
        with self.assertRaises(ValueError):
            DirectedInterval(math.nan, 0.0)


class TestLinearOperations(unittest.TestCase):
    def setUp(self):
        self.grid = make_sphere_grid(2, 16)
        rng = np.random.default_rng(4)
        self.sets = [embed(random_polytope(2, rng), self.grid) for _ in range(6)]

    def test_interval_combination(self):
        combined = ds_linear_comb(2.0, interval_set(-1, 2), -1.0, interval_set(0, 3))
        self.assertEqual(combined.interval, DirectedInterval(-2, 1))

    def test_difference_with_itself_is_zero(self):
        A = self.sets[0]
        self.assertEqual(ds_norm(A - A), 0.0)
        self.assertTrue(ds_equal(A - A, DirectedSet.zero(self.grid), tol=0.0))

    def test_exact_difference_recovery(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            A = embed(random_polytope(2, rng), self.grid)
            B = embed(random_polytope(2, rng), self.grid)
            self.assertLessEqual(ds_norm((A - B) + B - A), 1e-12)

    def test_vector_space_axioms(self):
        A, B = self.sets[0], self.sets[1]
        self.assertTrue(ds_equal(1.0 * A, A, tol=0.0))
        lhs = 2.5 * (A + B)
        rhs = 2.5 * A + 2.5 * B
        self.assertLessEqual(ds_norm(lhs - rhs), 1e-12)

    def test_norm_axioms(self):
        A, B, C = self.sets[:3]
        self.assertAlmostEqual(ds_norm(-3.0 * A), 3.0 * ds_norm(A), places=12)
        self.assertLessEqual(ds_norm(A + B), ds_norm(A) + ds_norm(B) + 1e-12)
        self.assertLessEqual(ds_norm(A - C), ds_norm(A - B) + ds_norm(B - C) + 1e-12)
        self.assertEqual(ds_norm(DirectedSet.zero(self.grid)), 0.0)

    def test_grid_mismatch(self):
        other = embed(DIAMOND, make_sphere_grid(2, 8))
        with self.assertRaises(DimensionError):
            ds_linear_comb(1.0, self.sets[0], 1.0, other)
        with self.assertRaises(DimensionError):
            ds_equal(self.sets[0], other)

    def test_components_are_read_only(self):
        with self.assertRaises(ValueError):
            self.sets[0].components[0][0] = 1.0


class TestNormAndEquality(unittest.TestCase):
    def test_interval_norm(self):
        self.assertEqual(ds_norm(interval_set(-1, 3)), 3)

    def test_embedded_diamond_has_unit_norm(self):
        self.assertAlmostEqual(ds_norm(embed(DIAMOND, make_sphere_grid(2, 360))), 1.0, places=15)

    def test_equality_report(self):
        tol = 1e-6
        self.assertFalse(ds_equal(interval_set(-1, 3), interval_set(-1, 3 + 2 * tol), tol))
        report = ds_equal(interval_set(-1, 3), interval_set(-1, 3 + 2 * tol), tol=3 * tol)
        self.assertTrue(report)
        self.assertEqual(report.worst_chain, [[1.0]])

    def test_worst_chain_locates_discrepancy(self):
        grid = make_sphere_grid(2, 8)
        A = embed(DIAMOND, grid)
        levels = [level.copy() for level in A.components]
        levels[1][2, 0] += 0.5
        report = ds_equal(A, DirectedSet(grid, levels), tol=0.1)
        self.assertFalse(report.equal)
        self.assertEqual(report.worst_level, 1)
        self.assertEqual(report.worst_chain, [[0.0, 1.0], [-1.0]])
        self.assertAlmostEqual(report.discrepancy, 0.5)


class TestSerialization(unittest.TestCase):
    def test_interval_document(self):
        self.assertEqual(json.loads(ds_serialize(interval_set(-1, 3))), {"n": 1, "neg": -1.0, "pos": 3.0})

    def test_floats_have_seventeen_significant_digits(self):
        text = ds_serialize(interval_set(0.1, 1.0 / 3.0))
        self.assertEqual(text, '{"n": 1, "neg": 0.10000000000000001, "pos": 0.33333333333333331}')
        self.assertEqual(ds_deserialize(text).interval, DirectedInterval(0.1, 1.0 / 3.0))
        doc = {"flag": True, "none": None, "count": np.int64(3), "values": np.array([0.5, 2.0]), "name": "a\"b"}
        self.assertEqual(json_text(doc),
                         '{"flag": true, "none": null, "count": 3, "values": [0.5, 2], "name": "a\\"b"}')
        with self.assertRaises(SerializationError):
            json_text({"x": float("nan")})

    def test_round_trip(self):
        for grid in (make_sphere_grid(2, 24), make_sphere_grid(3, (3, 4), sub_resolution=8)):
            A = embed(random_polytope(grid.n, np.random.default_rng(grid.n)), grid)
            B = ds_deserialize(ds_serialize(A))
            self.assertEqual(B.grid, A.grid)
            self.assertTrue(ds_equal(A, B, tol=0.0))
            self.assertEqual(ds_norm(A), ds_norm(B))

    def test_malformed_documents(self):
        with self.assertRaises(SerializationError):
            ds_deserialize("{not json")
        with self.assertRaises(SerializationError):
            ds_deserialize({"n": 1, "neg": 0.0})
        doc = json.loads(ds_serialize(embed(DIAMOND, make_sphere_grid(2, 8))))
        doc["entries"][0]["l"] = [0.0, 1.0]
        with self.assertRaises(SerializationError):
            ds_deserialize(doc)
        doc = json.loads(ds_serialize(embed(DIAMOND, make_sphere_grid(2, 8))))
        doc["grid"]["resolution"] = [16]
        with self.assertRaises(SerializationError):
            ds_deserialize(doc)
        doc = json.loads(ds_serialize(embed(Polytope([[1, 0, 0]]), make_sphere_grid(3, (2, 3), sub_resolution=8))))
        doc["grid"]["sub_grid"]["resolution"] = []
        with self.assertRaises(SerializationError):
            ds_deserialize(doc)
        doc["grid"]["sub_grid"] = {"n": 2}
        with self.assertRaises(SerializationError):
            ds_deserialize(doc)
        doc = json.loads(ds_serialize(embed(Polytope([[1, 0, 0]]), make_sphere_grid(3, (2, 3), sub_resolution=8))))
        doc["entries"][0]["lower"]["grid"]["resolution"] = []
        with self.assertRaises(SerializationError):
            ds_deserialize(doc)


if __name__ == "__main__":
    unittest.main(argv=[''], verbosity=2, exit=False)
