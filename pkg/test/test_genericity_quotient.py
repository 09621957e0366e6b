"""Unit tests for slot relations and quotient maps."""
import unittest
from fractions import Fraction

from family import FamilyEvaluator, load_family_spec
from genericity.names import NameSpecError, SPolyName
from genericity.quotient import (
    EquivRelation,
    admissible_relations,
    induced_coordinates,
    quotient_maps,
    quotient_name,
    slot_relation,
)
from interval import Box, Interval, RationalBoxManifold
from polyalg import MultiPoly

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


def square_family():
    return load_family_spec({"sigma": "S", "arity": 1, "rho": ["1"], "definition": "x1**2"})


def pair_name(D=None, d=1, alpha=((0,), (0,))):
    """S(x1) = S(x2) on D."""
    x1, x2, y1, y2 = MultiPoly.variables(4)
    D = D or RationalBoxManifold.open_box([Interval.open(-1, 1), Interval.open(-1, 1)])
    return SPolyName(2, 2, d, (y1 - y2,), ("S", "S"), alpha, ((0,), (1,)), D)


class TestEquivRelation(unittest.TestCase):
    """Test partitions of slots."""

    def test_canonical_form(self):
        """Test that classes are sorted and validated."""
        r = EquivRelation(3, ((2,), (1, 0)))
        self.assertEqual(r.classes, ((0, 1), (2,)))
        self.assertEqual(r.class_of(2), 1)
        self.assertEqual(str(r), "{{0,1}, {2}}")
        self.assertEqual(r.to_json(), [[0, 1], [2]])
        with self.assertRaises(ValueError):
            EquivRelation(3, ((0, 1),))
        with self.assertRaises(KeyError):
            r.class_of(5)

    def test_refines(self):
        """Test refinement against the discrete and the full relation."""
        discrete = EquivRelation.discrete(3)
        full = EquivRelation(3, ((0, 1, 2),))
        self.assertTrue(discrete.is_discrete)
        self.assertTrue(discrete.refines(full))
        self.assertFalse(full.refines(discrete))


class TestRelations(unittest.TestCase):
    """Test the slot relation and admissible refinements."""

    def test_slot_relation(self):
        """Test that equal (σ, α) slots are related."""
        self.assertEqual(slot_relation(pair_name()).classes, ((0, 1),))
        self.assertTrue(slot_relation(pair_name(alpha=((0,), (1,)))).is_discrete)

    def test_induced_coordinates(self):
        """Test that related slots merge their coordinates."""
        name = pair_name()
        self.assertEqual(induced_coordinates(name, slot_relation(name)), ((0, 1),))
        self.assertEqual(induced_coordinates(name, EquivRelation.discrete(2)), ((0,), (1,)))

    def test_admissible(self):
        """Test coarsest-first order and the λ separation rule."""
        name = pair_name()
        relations = admissible_relations(name, (0,))
        self.assertEqual([r.classes for r in relations], [((0, 1),), ((0,), (1,))])
        relations = admissible_relations(name, (0, 1))
        self.assertEqual([r.classes for r in relations], [((0,), (1,))])


class TestQuotientMaps(unittest.TestCase):
    """Test the quotient of a name by a relation."""

    def setUp(self):
        self.name = pair_name()
        self.fam = FamilyEvaluator(square_family())

    def test_coarse_quotient(self):
        """Test merging both slots: p̃ collapses to zero."""
        maps = quotient_maps(self.name, (0,), slot_relation(self.name))
        self.assertEqual((maps.m_bar, maps.n_bar, maps.d), (1, 1, 1))
        self.assertEqual(maps.mu, (0,))
        self.assertEqual(maps.lam_bar, (0,))
        self.assertEqual(maps.lam_bar_prime, ())
        self.assertTrue(maps.p_tilde[0].is_zero)
        x = Box.from_bounds([(0, QUARTER), (HALF, 1)])
        self.assertEqual(maps.project(x), Box((x[0],)))
        self.assertEqual(maps.lift(Box((x[0],))), Box((x[0], x[0])))
        C = RationalBoxManifold.open_box([Interval.open(-QUARTER, QUARTER), Interval.open(-HALF, HALF)])
        self.assertEqual(maps.C_bar(C).factor(0), Interval.open(-QUARTER, QUARTER))
        with self.assertRaises(ValueError):
            maps.p_bar

    def test_coarse_reduced_name(self):
        """Test the reduced name of the coarse quotient."""
        base = Box.from_point([QUARTER])
        maps, reduced = quotient_name(self.name, (0,), slot_relation(self.name), base, self.fam, 12)
        self.assertEqual(maps.delta, ())
        self.assertEqual((reduced.m, reduced.n, reduced.d), (1, 1, 1))
        self.assertEqual(reduced.p, ())
        self.assertEqual(maps.to_json()["delta"], [])

    def test_discrete_quotient(self):
        """Test row selection for the discrete relation."""
        base = Box.from_point([QUARTER, HALF])
        maps, reduced = quotient_name(self.name, (0,), EquivRelation.discrete(2), base, self.fam, 12)
        self.assertEqual(maps.lam_bar_prime, (1,))
        self.assertEqual(maps.delta, (0,))
        self.assertEqual(reduced.p, maps.p_tilde)
        value = maps.P_tilde(self.fam).enclose(base, 12)[0]
        self.assertTrue(value.contains(QUARTER ** 2 - HALF ** 2))

    def test_singular_rows(self):
        """Test that a vanishing minor leaves no row selection."""
        base = Box.from_bounds([(QUARTER, QUARTER), (Fraction(-1, 8), Fraction(1, 8))])
        with self.assertRaises(ValueError):
            quotient_name(self.name, (0,), EquivRelation.discrete(2), base, self.fam, 12)

    def test_fixed_representative(self):
        """Test that a class prefers a fixed coordinate of D."""
        D = RationalBoxManifold(2, (0,), (Interval.open(-1, 1),), (Fraction(1),))
        name = pair_name(D, d=0)
        maps = quotient_maps(name, (), slot_relation(name))
        self.assertEqual(maps.mu, (1,))
        self.assertEqual(maps.E_bar, ())
        self.assertEqual(maps.u_bar, (1,))
        self.assertEqual(maps.D_bar.dim, 0)

    def test_rejected_relations(self):
        """Test relations that are too coarse."""
        name = pair_name(alpha=((0,), (1,)))
        with self.assertRaises(NameSpecError):
            quotient_maps(name, (0,), EquivRelation(2, ((0, 1),)))
        with self.assertRaises(NameSpecError):
            quotient_maps(self.name, (0, 1), slot_relation(self.name))


if __name__ == "__main__":
    unittest.main()
