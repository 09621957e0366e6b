"""Unit tests for exact polynomials and interpolation bases."""
import os
import random
import unittest
from fractions import Fraction

import sympy

from budget import Budget, BudgetExhausted
from family import multi_indices
from interval import Box, Interval
from polyalg import (
    ArityError,
    HermiteBasis,
    MultiPoly,
    evaluate,
    exact_point,
    hermite_basis,
    perturbation_basis,
)

SLOW = bool(os.environ.get("QUASIGEN_SLOW_TESTS"))


class TestMultiPoly(unittest.TestCase):
    """Test MultiPoly arithmetic and conversions."""

    def setUp(self):
        self.x, self.y = MultiPoly.variables(2)

    def test_arithmetic(self):
        """Test that (x + y)² expands exactly."""
        p = (self.x + self.y) ** 2
        self.assertEqual(p.coefficient((1, 1)), 2)
        self.assertEqual(p.degree(), 2)
        self.assertEqual(p - self.x ** 2 - self.y ** 2, 2 * self.x * self.y)
        self.assertTrue((p - p).is_zero)
        self.assertEqual((self.x - self.x + 3), 3)

    def test_arity_errors(self):
        """Test mixing rings and bad exponents."""
        with self.assertRaises(ArityError):
            self.x + MultiPoly.variable(3, 0)
        with self.assertRaises(ArityError):
            MultiPoly(2, {(1,): 1})
        with self.assertRaises(ArityError):
            MultiPoly.variable(2, 2)
        with self.assertRaises(ArityError):
            self.x.evaluate([1])

    def test_evaluate_and_enclose(self):
        """Test exact values and interval enclosures."""
        p = self.x ** 2 * self.y + 3
        self.assertEqual(p.evaluate((2, 3)), 15)
        self.assertEqual(p.enclose(Box.from_bounds([(-1, 1), (0, 2)])), Interval(3, 5))
        self.assertEqual(evaluate(p, (Fraction(1, 2), 4)), 4)
        self.assertEqual(evaluate(p, Box.from_point([1, 1])), Interval.point(4))

    def test_differentiate(self):
        """Test exact partial derivatives."""
        p = self.x ** 3 * self.y ** 2
        self.assertEqual(p.differentiate((2, 1)), 12 * self.x * self.y)
        self.assertTrue(p.differentiate((4, 0)).is_zero)

    def test_compose_substitute_embed(self):
        """Test composition, partial substitution and embedding."""
        p = self.x * self.y
        u, v, w = MultiPoly.variables(3)
        self.assertEqual(p.compose([u + v, w]), u * w + v * w)
        self.assertEqual(p.substitute({0: 2}), 2 * self.y)
        self.assertEqual(p.embed(3, [2, 0]), w * u)
        self.assertEqual(MultiPoly.constant(0, 5).embed(3, []), MultiPoly.constant(3, 5))

    def test_sympy_and_json(self):
        """Test sympy conversion and the coefficient document."""
        a, b = sympy.symbols("a b")
        p = MultiPoly.from_sympy(a ** 2 - b / 3, (a, b))
        self.assertEqual(p, self.x ** 2 - self.y.scale(Fraction(1, 3)))
        self.assertEqual(sympy.expand(p.to_sympy((a, b)) - (a ** 2 - b / 3)), 0)
        doc = p.to_json()
        self.assertEqual(doc["coeffs"]["0,1"], "-1/3")
        self.assertEqual(MultiPoly.from_json(doc), p)
        with self.assertRaises(ArityError):
            MultiPoly.from_sympy(sympy.sin(a), (a,))

    def test_str_and_support(self):
        """Test the readable form and the variable support."""
        p = self.x ** 2 - self.y + 1
        self.assertEqual(str(p), "x1**2 - x2 + 1")
        self.assertEqual(p.support(), (0, 1))
        self.assertEqual(MultiPoly.constant(2, 7).support(), ())
        self.assertEqual(str(MultiPoly.zero(2)), "0")


class TestHermiteBasis(unittest.TestCase):
    """Test the interpolation basis with Kronecker derivatives."""

    def test_kronecker_property(self):
        """Test ∂^β p_{i,α}(a_j) = δ for two points in R^1."""
        basis = hermite_basis(1, 2, [[(0,), (1,)], [(0,)]])
        points = [(Fraction(0),), (Fraction(1),)]
        polys = basis.specialize(points)
        for (i, alpha), p in polys.items():
            for j, index_set in enumerate(basis.index_sets):
                for beta in index_set:
                    expected = 1 if (i, alpha) == (j, beta) else 0
                    self.assertEqual(p.differentiate(beta).evaluate(points[j]), expected, msg=(i, alpha, j, beta))

    def test_symbolic_denominators(self):
        """Test that the symbolic denominators are nonzero at distinct points."""
        basis = HermiteBasis(1, 2, [[(0,)], [(0,)]])
        values = basis.denominators_at([(Fraction(0),), (Fraction(2),)])
        self.assertTrue(all(v != 0 for v in values.values()))

    def test_coincident_points(self):
        """Test that equal points are rejected."""
        basis = HermiteBasis(1, 2, [[(0,)], [(0,)]])
        with self.assertRaises(ValueError):
            basis.specialize([(Fraction(1),), (Fraction(1),)])

    def test_validation(self):
        """Test malformed index sets."""
        with self.assertRaises(ValueError):
            HermiteBasis(1, 2, [[(0,)]])
        with self.assertRaises(ValueError):
            HermiteBasis(1, 1, [[]])
        with self.assertRaises(ValueError):
            HermiteBasis(1, 1, [[(0, 1)]])


class TestPerturbationBasis(unittest.TestCase):
    """Test the certified perturbation basis."""

    def test_exact_points(self):
        """Test two separated rational points."""
        result = perturbation_basis(
            [exact_point([Fraction(0)]), exact_point([Fraction(1, 2)])], [(0,), (1,)], Fraction(1, 2), Budget(8),
        )
        self.assertLess(result.deviation(), Fraction(1, 2))
        self.assertEqual(len(result.polys), 2)
        self.assertEqual(result.stage, 0)

    def test_shrinking_enclosures(self):
        """Test points known only through shrinking boxes."""
        def around(c):
            return lambda k: Box((Interval(c - Fraction(1, 1 << k), c + Fraction(1, 1 << k)),))

        result = perturbation_basis([around(Fraction(0)), around(Fraction(1))], [(0,), (0,)], Fraction(1, 4), Budget(64))
        self.assertLess(result.deviation(), Fraction(1, 4))
        self.assertGreater(result.stage, 0)

    def test_same_point_same_index(self):
        """Test that an inseparable pair exhausts the budget."""
        with self.assertRaises(BudgetExhausted):
            perturbation_basis([exact_point([0]), exact_point([0])], [(0,), (0,)], Fraction(1, 2), Budget(4))

    def test_validation(self):
        """Test bad arguments."""
        with self.assertRaises(ValueError):
            perturbation_basis([exact_point([0])], [(0,)], 0)
        with self.assertRaises(ValueError):
            perturbation_basis([exact_point([0])], [], Fraction(1, 2))


def random_configuration(rng, max_n, max_m, max_order):
    """Distinct rational points and index sets of size 1..4."""
    n = rng.randint(1, max_n)
    m = rng.randint(1, max_m)
    points = []
    while len(points) < m:
        pt = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(n))
        if pt not in points:
            points.append(pt)
    candidates = multi_indices(n, max_order)
    index_sets = [rng.sample(candidates, rng.randint(1, min(4, len(candidates)))) for _ in range(m)]
    return n, m, points, index_sets


class TestHermiteProperties(unittest.TestCase):
    """Test the Kronecker property and the denominators on random configurations."""

    def test_kronecker_exact(self):
        """Test ∂^β p_{i,α}(a_j) = δ exactly on 100 random configurations."""
        rng = random.Random(3)
        for _ in range(100):
            n, m, points, index_sets = random_configuration(rng, 3, 4, 2)
            basis = hermite_basis(n, m, index_sets)
            polys = basis.specialize(points)
            for (i, alpha), p in polys.items():
                for j, index_set in enumerate(basis.index_sets):
                    for beta in index_set:
                        expected = 1 if (i, alpha) == (j, beta) else 0
                        self.assertEqual(p.differentiate(beta).evaluate(points[j]), expected,
                                         msg=(points, index_sets, i, alpha, j, beta))

    def test_denominators_nonzero(self):
        """Test D_{i,α}(a) ≠ 0 on 100 random small configurations."""
        rng = random.Random(5)
        for _ in range(100):
            n, m, points, index_sets = random_configuration(rng, 2, 2, 1)
            values = hermite_basis(n, m, index_sets).denominators_at(points)
            self.assertTrue(all(v != 0 for v in values.values()), msg=(points, index_sets))

    @unittest.skipUnless(SLOW, "set QUASIGEN_SLOW_TESTS=1 to run")
    def test_denominators_nonzero_full_range(self):
        """Test D_{i,α}(a) ≠ 0 with n ≤ 3, m ≤ 4 and |α| ≤ 2."""
        rng = random.Random(5)
        for _ in range(100):
            n, m, points, index_sets = random_configuration(rng, 3, 4, 2)
            values = hermite_basis(n, m, index_sets).denominators_at(points)
            self.assertTrue(all(v != 0 for v in values.values()), msg=(points, index_sets))


if __name__ == "__main__":
    unittest.main()
