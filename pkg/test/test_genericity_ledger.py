"""Unit tests for the zero ledger and its checker."""
import unittest
from dataclasses import replace
from fractions import Fraction

import sympy

from budget import Budget
from family import FamilyEvaluator, load_family_spec
from genericity.ledger import LedgerZero, PerturbationRecord, ZeroLedger, check_ledger
from genericity.names import SPolyName
from genericity.zeros import find_nonsingular_zeros
from interval import Interval, RationalBoxManifold
from polyalg import MultiPoly


def square_family():
    return load_family_spec({"sigma": "S", "arity": 1, "rho": ["1"], "definition": "x1**2"})


def square_name():
    x, y = MultiPoly.variables(2)
    D = RationalBoxManifold.open_box([Interval(Fraction(-1), Fraction(1))])
    return SPolyName(1, 1, 0, (y - Fraction(1, 4),), ("S",), ((0,),), ((0,),), D)


class TestZeroLedger(unittest.TestCase):
    """Test ledger bookkeeping and re-certification."""

    @classmethod
    def setUpClass(cls):
        cls.fam = FamilyEvaluator(square_family())
        cls.zeros = find_nonsingular_zeros(square_name(), cls.fam, Fraction(1, 8), Budget(20000))

    def make_ledger(self):
        ledger = ZeroLedger()
        ledger.add_round([
            LedgerZero.from_realized(z.with_inequations([1]), f"1.0.{c}", 1) for c, z in enumerate(self.zeros)
        ])
        ledger.add_round([
            LedgerZero.from_realized(z.with_inequations([1]), f"2.0.{c}", 2, parent=f"1.0.{c}")
            for c, z in enumerate(self.zeros)
        ])
        return ledger

    def test_chain(self):
        """Test entry lookup and ancestor chains."""
        ledger = self.make_ledger()
        self.assertEqual([e.id for e in ledger.chain("2.0.1")], ["2.0.1", "1.0.1"])
        self.assertEqual(len(ledger.last_round()), 2)
        self.assertEqual(ledger.entry("1.0.0").round, 1)
        with self.assertRaises(KeyError):
            ledger.entry("9.9.9")
        self.assertEqual(ZeroLedger().last_round(), [])

    def test_json(self):
        """Test that the ledger document reloads."""
        ledger = self.make_ledger()
        (x1,) = MultiPoly.variables(1)
        ledger.perturbations.append(PerturbationRecord(2, "2.0.0", {"S": x1.scale(Fraction(1, 64))}, (Fraction(1, 8),), Fraction(1, 16)))
        again = ZeroLedger.from_json(ledger.to_json())
        self.assertEqual(again.entry("2.0.1").parent, "1.0.1")
        self.assertEqual(again.entry("2.0.1").lam_prime, (1,))
        self.assertEqual(again.perturbations[0].polys["S"], x1.scale(Fraction(1, 64)))
        self.assertEqual(again.perturbations[0].step_bound, Fraction(1, 16))

    def test_check_passes(self):
        """Test that the ledger re-certifies against its own family."""
        report = check_ledger(self.make_ledger(), self.fam, 2, Budget(20000))
        self.assertTrue(report.passed, report.failures)
        self.assertEqual(report.checked, 2)
        self.assertTrue(report.to_json()["passed"])

    def test_check_nothing(self):
        """Test that up_to = 0 checks nothing."""
        report = check_ledger(self.make_ledger(), self.fam, 0)
        self.assertEqual(report.checked, 0)
        self.assertTrue(report.passed)

    def test_check_other_family(self):
        """Test that shifted members break every zero."""
        shifted = FamilyEvaluator(square_family().perturbed({"S": sympy.Integer(3)}))
        report = check_ledger(self.make_ledger(), shifted, 1, Budget(20000))
        self.assertFalse(report.passed)
        self.assertEqual({i for i, _ in report.failures}, {"2.0.0", "2.0.1"})

    def test_check_chain(self):
        """Test broken association chains."""
        ledger = self.make_ledger()
        first, second = ledger.rounds[1]
        ledger.rounds[1] = [replace(first, parent="1.0.1"), replace(second, parent="0.0.0")]
        report = check_ledger(ledger, self.fam, 1, Budget(20000))
        reasons = dict(report.failures)
        self.assertIn("is not inside", reasons["2.0.0"])
        self.assertIn("missing ancestor", reasons["2.0.1"])

    def test_lost_inequations(self):
        """Test that a child may not drop inequations of its parent."""
        ledger = self.make_ledger()
        first, second = ledger.rounds[1]
        ledger.rounds[1] = [replace(first, inequations=()), second]
        reasons = dict(check_ledger(ledger, self.fam, 1, Budget(20000)).failures)
        self.assertIn("lost inequations", reasons["2.0.0"])


if __name__ == "__main__":
    unittest.main()
