"""Unit tests for enclosable maps and interval determinants."""
import unittest
from fractions import Fraction

from expressions import variables
from interval import Box, Interval
from maps import (
    ImplicitReducedMap,
    SympyMap,
    affine_restriction,
    interval_det,
    polynomial_map,
    submatrix,
)


class TestSympyMap(unittest.TestCase):
    """Test SympyMap enclosures."""

    def setUp(self):
        x1, x2 = variables(2)
        self.f = SympyMap([x1 * x2, x1 + x2], (x1, x2))
        self.box = Box.from_bounds([(0, 1), (1, 2)])

    def test_enclose(self):
        """Test componentwise value enclosures."""
        self.assertEqual(self.f.enclose(self.box, 12), (Interval(0, 2), Interval(1, 3)))
        self.assertEqual(self.f.component(1, self.box, 12), Interval(1, 3))

    def test_jacobian_and_hessian(self):
        """Test first and second derivative enclosures."""
        J = self.f.jacobian(self.box, 12)
        self.assertEqual(J[0], (Interval(1, 2), Interval(0, 1)))
        self.assertEqual(J[1], (Interval.point(1), Interval.point(1)))
        H = self.f.hessian(self.box, 12)
        self.assertEqual(H[0][0][1], Interval.point(1))
        self.assertEqual(H[1][0][0], Interval.point(0))
        self.assertEqual(self.f.partial(0, 1, self.box, 12), Interval(0, 1))

    def test_validation(self):
        """Test bad boxes and empty maps."""
        with self.assertRaises(ValueError):
            self.f.enclose(Box.from_bounds([(0, 1)]), 12)
        with self.assertRaises(ValueError):
            SympyMap([], variables(1))

    def test_add_and_select(self):
        """Test componentwise sums and row selection."""
        x1, x2 = variables(2)
        g = self.f.add([x1, 0]).select([0])
        self.assertEqual(g.out_dim, 1)
        self.assertEqual(g.enclose(Box.from_point([1, 2]), 12), (Interval.point(3),))
        with self.assertRaises(ValueError):
            self.f.add([x1])


class TestAffineRestriction(unittest.TestCase):
    """Test the local-coordinate restriction."""

    def test_restriction(self):
        """Test x1² + x2 around x1 = 1 with x2 fixed to 2."""
        x1, x2 = variables(2)
        P = polynomial_map([x1 ** 2 + x2], 2)
        local = affine_restriction(P, (Fraction(1), Fraction(0)), [0], {1: Fraction(2)})
        self.assertEqual(local.in_dim, 1)
        self.assertEqual(local.enclose(Box.from_point([0]), 12), (Interval.point(3),))
        self.assertEqual(local.enclose(Box.from_point([1]), 12), (Interval.point(6),))

    def test_missing_coordinates(self):
        """Test that every coordinate must be free or fixed."""
        P = polynomial_map([variables(2)[0]], 2)
        with self.assertRaises(ValueError):
            affine_restriction(P, (Fraction(0), Fraction(0)), [0], {})


class TestImplicitReducedMap(unittest.TestCase):
    """Test solving one equation for one unknown."""

    def setUp(self):
        x1, y1, y2 = variables(3)
        f = SympyMap([y1 - x1, y2 - y1 ** 2], (x1, y1, y2))
        self.reduced = ImplicitReducedMap(f, m=1, i=0, j=0, s_j=Fraction(2))
        self.box = Box.from_point([Fraction(1, 2), Fraction(0)])

    def test_solve(self):
        """Test that y1 = x1 is recovered at x1 = 1/2."""
        y = self.reduced.solve(self.box, 12)
        self.assertTrue(y.contains(Fraction(1, 2)))
        self.assertLess(y.length(), Fraction(1, 1000))

    def test_reduced_values(self):
        """Test y2 - x1² at (x1, y2) = (1/2, 0)."""
        (value,) = self.reduced.enclose(self.box, 12)
        self.assertTrue(value.contains(Fraction(-1, 4)))
        self.assertEqual(self.reduced.in_dim, 2)

    def test_derivatives(self):
        """Test the implicit gradient and the reduced Jacobian."""
        grad = self.reduced.implicit_gradient(self.box, 12)
        self.assertEqual(grad, (Interval.point(1), Interval.point(0)))
        (row,) = self.reduced.jacobian(self.box, 12)
        self.assertTrue(row[0].contains(-1))
        self.assertEqual(row[1], Interval.point(1))

    def test_nothing_to_reduce(self):
        """Test that a single equation cannot be reduced."""
        x1, y1 = variables(2)
        with self.assertRaises(ValueError):
            ImplicitReducedMap(SympyMap([y1 - x1], (x1, y1)), m=1, i=0, j=0, s_j=Fraction(1))


class TestDeterminants(unittest.TestCase):
    """Test interval determinants and submatrices."""

    def test_point_determinant(self):
        """Test det [[1, 2], [3, 4]] = -2."""
        M = ((Interval.point(1), Interval.point(2)), (Interval.point(3), Interval.point(4)))
        self.assertEqual(interval_det(M), Interval.point(-2))
        self.assertEqual(interval_det(()), Interval.point(1))
        self.assertEqual(interval_det(submatrix(M, [1], [0])), Interval.point(3))

    def test_interval_determinant(self):
        """Test that an uncertain determinant contains 0."""
        M = ((Interval(-1, 1), Interval.point(0)), (Interval.point(0), Interval.point(1)))
        self.assertFalse(interval_det(M).excludes_zero())

    def test_non_square(self):
        """Test that non-square matrices are refused."""
        with self.assertRaises(ValueError):
            interval_det(((Interval.point(1), Interval.point(2)),))


if __name__ == "__main__":
    unittest.main()
