"""Unit tests for the exact-rational JSON helpers."""
import unittest
from fractions import Fraction

from interval import Box, Interval, RationalBoxManifold
from utils import (
    box_from_json,
    box_to_json,
    dyadic_below,
    frac_to_str,
    interval_from_json,
    interval_to_json,
    manifold_from_json,
    manifold_to_json,
    parse_frac,
    parse_fracs,
)


class TestFractions(unittest.TestCase):
    """Test rational parsing and rendering."""

    def test_frac_to_str(self):
        """Test "p/q" and integer rendering."""
        self.assertEqual(frac_to_str(Fraction(3, 6)), "1/2")
        self.assertEqual(frac_to_str(Fraction(-4, 2)), "-2")

    def test_parse_frac(self):
        """Test parsing strings and ints."""
        self.assertEqual(parse_frac("-3/4"), Fraction(-3, 4))
        self.assertEqual(parse_frac(5), Fraction(5))
        self.assertEqual(parse_fracs(["1/2", "2"]), (Fraction(1, 2), Fraction(2)))

    def test_parse_frac_rejects_inexact(self):
        """Test that floats, bools and junk are refused."""
        for bad in (0.5, True, "abc", "1/0"):
            with self.assertRaises(ValueError):
                parse_frac(bad)


class TestJson(unittest.TestCase):
    """Test interval, box and manifold JSON documents."""

    def test_interval_document(self):
        """Test the interval document layout."""
        doc = interval_to_json(Interval(Fraction(1, 3), None, lo_open=True))
        self.assertEqual(doc, {"lo": "1/3", "hi": None, "lo_open": True, "hi_open": True})
        self.assertEqual(interval_from_json(doc), Interval(Fraction(1, 3), None, lo_open=True))

    def test_box_document(self):
        """Test that a box keeps its open ends."""
        box = Box((Interval.open(0, 1), Interval.point(Fraction(2, 3))))
        self.assertEqual(box_from_json(box_to_json(box)), box)

    def test_manifold_defaults(self):
        """Test that E defaults to all coordinates and factors are forced open."""
        D = manifold_from_json({"U": [{"lo": "-1", "hi": "1"}, {"lo": "0", "hi": "2"}]})
        self.assertEqual(D.m, 2)
        self.assertEqual(D.E, (0, 1))
        self.assertTrue(all(iv.is_open for iv in D.U))

    def test_manifold_with_fixed_coordinates(self):
        """Test a manifold with a fixed coordinate."""
        D = RationalBoxManifold(2, (1,), (Interval.open(0, 1),), (Fraction(-1, 2),))
        doc = manifold_to_json(D)
        self.assertEqual(doc["u"], ["-1/2"])
        self.assertEqual(manifold_from_json(doc), D)


class TestDyadicBelow(unittest.TestCase):
    """Test dyadic_below."""

    def test_strictly_below(self):
        """Test that the result is the largest grid point strictly below x."""
        self.assertEqual(dyadic_below(Fraction(1, 2), 2), Fraction(1, 4))
        self.assertEqual(dyadic_below(Fraction(1, 3), 2), Fraction(1, 4))

    def test_none_when_not_positive(self):
        """Test that tiny inputs give None."""
        self.assertIsNone(dyadic_below(Fraction(1, 8), 2))


if __name__ == "__main__":
    unittest.main()
