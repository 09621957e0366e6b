"""Unit tests for the builtin expression language."""
import unittest
from fractions import Fraction

import sympy

from expressions import (
    ExpressionError,
    compile_complex,
    enclose_expr,
    parse_definition,
    pi_interval,
    rational_value,
    sin_interval,
    variables,
)
from interval import Box, ComplexRect, Interval


class TestParseDefinition(unittest.TestCase):
    """Test parsing and validation of member definitions."""

    def test_valid_definitions(self):
        """Test that the builtin language parses."""
        x1, x2 = variables(2)
        expr = parse_definition("x1**2 + sin(x2) - 1/3", 2)
        self.assertEqual(expr, x1 ** 2 + sympy.sin(x2) - sympy.Rational(1, 3))
        self.assertEqual(parse_definition("exp(x1) * cos(pi*x1) + E", 1).free_symbols, {variables(1)[0]})

    def test_decimal_literals_become_rationals(self):
        """Test that 0.5 is read as the exact rational 1/2."""
        (x1,) = variables(1)
        self.assertEqual(parse_definition("0.5*x1", 1), x1 / 2)

    def test_rejects_unknown_symbols(self):
        """Test that variables beyond the arity are refused."""
        with self.assertRaises(ExpressionError):
            parse_definition("x1 + x3", 2)

    def test_rejects_unsupported_constructs(self):
        """Test that non-integer powers and other functions are refused."""
        for text in ("sqrt(x1)", "log(x1)", "x1**(1/3)", "Abs(x1)"):
            with self.assertRaises(ExpressionError, msg=text):
                parse_definition(text, 1)

    def test_rejects_syntax_errors(self):
        """Test that malformed text raises ExpressionError."""
        with self.assertRaises(ExpressionError):
            parse_definition("x1 +* (", 1)

    def test_rational_value(self):
        """Test exact values of rational constants."""
        self.assertEqual(rational_value(sympy.Rational(3, 4)), Fraction(3, 4))
        with self.assertRaises(ExpressionError):
            rational_value(sympy.pi)


class TestEnclosures(unittest.TestCase):
    """Test real and complex interval evaluation."""

    def test_polynomial_enclosure(self):
        """Test the natural extension of a polynomial."""
        x1, x2 = variables(2)
        enc = enclose_expr(x1 * x2 + 1, (x1, x2), Box.from_bounds([(0, 1), (-1, 2)]), 12)
        self.assertEqual(enc, Interval(0, 3))

    def test_transcendental_enclosures_contain_true_values(self):
        """Test that sin, exp and pi enclosures contain the real numbers."""
        (x1,) = variables(1)
        enc = enclose_expr(sympy.exp(x1), (x1,), Box.from_point([1]), 30)
        self.assertLess(enc.lo, Fraction(27182818284591, 10 ** 13))
        self.assertGreater(enc.hi, Fraction(27182818284590, 10 ** 13))
        self.assertTrue(enc.length() < Fraction(1, 1 << 20))
        s = sin_interval(Interval.point(Fraction(1, 2)), 40)
        self.assertLess(s.lo, Fraction(4794255386043, 10 ** 13))
        self.assertGreater(s.hi, Fraction(4794255386042, 10 ** 13))
        pi = pi_interval(40)
        self.assertTrue(pi.lo < Fraction(355, 113) and Fraction(333, 106) < pi.hi)

    def test_sin_range_on_wide_box(self):
        """Test that sin on [0, 4] encloses [-1, 1]'s attained part."""
        (x1,) = variables(1)
        enc = enclose_expr(sympy.sin(x1), (x1,), Box.from_bounds([(0, 4)]), 20)
        self.assertLessEqual(enc.lo, Fraction(-3, 4))
        self.assertGreaterEqual(enc.hi, 1)

    def test_complex_evaluation(self):
        """Test z**2 at z = i on a point rectangle."""
        (x1,) = variables(1)
        fn = compile_complex(x1 ** 2 + 1, (x1,))
        value = fn([ComplexRect.point(0, 1)], 20)
        self.assertTrue(value.contains_zero())
        self.assertEqual(value.mag_upper(), 0)


if __name__ == "__main__":
    unittest.main()
