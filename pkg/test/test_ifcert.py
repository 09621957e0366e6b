"""Unit tests for the certified implicit function theorem."""
import random
import unittest
from fractions import Fraction

import sympy

from budget import Budget
from expressions import variables
from interval import Interval, RationalBoxManifold
from ifcert import (
    BaseNode,
    IFCertificate,
    InductiveNode,
    NotCertified,
    SectionCertificate,
    SectionProblem,
    augmented_system,
    certificate_from_json,
    certificate_to_json,
    enlarge_certificate,
    eval_implicit,
    perturbation_radius,
    replay_certificate,
    shrink_certificate,
    verify_IF,
    verify_IF_lambda,
    zero_enclosure,
)
from maps import SympyMap, polynomial_map

HALF = Fraction(1, 2)


def open_box(*bounds):
    return RationalBoxManifold.open_box([Interval(Fraction(lo), Fraction(hi)) for lo, hi in bounds])


class TestVerifyIF(unittest.TestCase):
    """Test verify_IF on base and inductive cases."""

    def setUp(self):
        x, y1, y2 = variables(3)
        self.line = SympyMap([y1 - x / 2], (x, y1))
        self.chain = SympyMap([y1 - x / 2, y2 - y1], (x, y1, y2))

    def test_base_case(self):
        """Test y = x/2 on [-1, 1] x [-1, 1]."""
        cert = verify_IF(self.line, 1, [1], [1], Budget(1000))
        self.assertIsInstance(cert, IFCertificate)
        self.assertTrue(cert.is_base)
        self.assertEqual(cert.node.sign, 1)
        self.assertGreater(cert.node.margin, 0)
        y = eval_implicit(cert, [HALF], 12)
        self.assertTrue(y[0].contains(Fraction(1, 4)))
        self.assertLess(y[0].length(), Fraction(1, 1000))

    def test_inductive_case(self):
        """Test y1 = x/2, y2 = y1 through one reduction step."""
        cert = verify_IF(self.chain, 1, [1], [1, 1], Budget(10000))
        self.assertIsInstance(cert, IFCertificate)
        self.assertIsInstance(cert.node, InductiveNode)
        self.assertEqual((cert.node.i, cert.node.j), (0, 0))
        self.assertEqual(cert.depth(), 2)
        y = eval_implicit(cert, [HALF], 12)
        self.assertTrue(y[0].contains(Fraction(1, 4)))
        self.assertTrue(y[1].contains(Fraction(1, 4)))

    def test_refuted(self):
        """Test that y + 2 has no zero in [-1, 1]."""
        x, y = variables(2)
        outcome = verify_IF(SympyMap([y + 2], (x, y)), 1, [1], [1], Budget(1000))
        self.assertIsInstance(outcome, NotCertified)
        self.assertEqual(outcome.reason, "refuted")
        self.assertFalse(outcome)

    def test_derivative_depending_on_y(self):
        """Test y + y²(2y − 3)/6 = x, whose ∂f/∂y = y² − y + 1 ≥ 3/4 varies with y."""
        x, y = variables(2)
        f = SympyMap([y + y ** 2 * (2 * y - 3) / 6 - x], (x, y))
        cert = verify_IF(f, 1, [HALF], [1], Budget(20000))
        self.assertIsInstance(cert, IFCertificate)
        self.assertEqual(cert.node.sign, 1)
        self.assertTrue(eval_implicit(cert, [Fraction(0)], 12)[0].contains(0))
        self.assertTrue(replay_certificate(cert, Budget(20000)))

    def test_bad_arguments(self):
        """Test dimension and radius validation."""
        with self.assertRaises(ValueError):
            verify_IF(self.line, 1, [1, 1], [1])
        with self.assertRaises(ValueError):
            verify_IF(self.line, 1, [0], [1])
        with self.assertRaises(ValueError):
            verify_IF(self.line, 0, [], [1, 1])

    def test_eval_outside_box(self):
        """Test that points outside [-r, r] are refused."""
        cert = verify_IF(self.line, 1, [1], [1], Budget(1000))
        with self.assertRaises(ValueError):
            eval_implicit(cert, [Fraction(2)], 12)


class TestCertificateTools(unittest.TestCase):
    """Test radii, enlargement, serialization and replay."""

    def setUp(self):
        x, y1, y2 = variables(3)
        self.line = SympyMap([y1 - x / 2], (x, y1))
        self.cert = verify_IF(self.line, 1, [1], [1], Budget(1000))
        self.chain = SympyMap([y1 - x / 2, y2 - y1], (x, y1, y2))

    def test_perturbation_radius_base(self):
        """Test δ = min(a/2, a·ε) in the base case."""
        a = self.cert.node.margin
        self.assertEqual(perturbation_radius(self.cert, Fraction(1, 10)), min(a / 2, a / 10))
        with self.assertRaises(ValueError):
            perturbation_radius(self.cert, Fraction(0))

    def test_perturbation_radius_inductive(self):
        """Test that the inductive radius is positive."""
        cert = verify_IF(self.chain, 1, [1], [1, 1], Budget(10000))
        self.assertGreater(perturbation_radius(cert, Fraction(1, 10)), 0)

    def test_enlarge(self):
        """Test that a larger box is certified for y = x/2."""
        bigger = enlarge_certificate(self.cert, Budget(1000))
        self.assertIsNotNone(bigger)
        self.assertGreater(bigger.r[0], 1)
        self.assertGreater(bigger.s[0], 1)

    def test_json_and_replay(self):
        """Test that serialized certificates replay against the same map."""
        doc = certificate_to_json(self.cert)
        self.assertEqual(doc["node"]["kind"], "base")
        again = certificate_from_json(doc, self.line)
        self.assertIsInstance(again.node, BaseNode)
        self.assertEqual(again.node.margin, self.cert.node.margin)
        self.assertTrue(replay_certificate(again, Budget(1000)))

    def test_inductive_json_and_replay(self):
        """Test the inductive certificate document."""
        cert = verify_IF(self.chain, 1, [1], [1, 1], Budget(10000))
        doc = certificate_to_json(cert)
        self.assertEqual(doc["node"]["kind"], "inductive")
        again = certificate_from_json(doc, self.chain)
        self.assertTrue(replay_certificate(again, Budget(10000)))

    def test_replay_rejects_other_map(self):
        """Test that a certificate does not replay for a shifted map."""
        x, y = variables(2)
        shifted = SympyMap([y - x / 2 + 3], (x, y))
        again = certificate_from_json(certificate_to_json(self.cert), shifted)
        self.assertFalse(replay_certificate(again, Budget(1000)))


class TestSectionProblems(unittest.TestCase):
    """Test IF_λ on rational box manifolds."""

    def setUp(self):
        x1, x2 = variables(2)
        self.parabola = polynomial_map([x2 - x1 ** 2], 2)
        self.D = open_box((-1, 1), (-1, 1))
        self.C = open_box((-HALF, HALF), (-HALF, HALF))

    def test_section_over_first_coordinate(self):
        """Test x2 = x1² as a section over x1."""
        outcome = verify_IF_lambda(SectionProblem(self.parabola, self.D, self.C, (0,)), Budget(1000))
        self.assertIsInstance(outcome, SectionCertificate)
        box = outcome.section([Fraction(1, 4)], 12)
        self.assertEqual(box[0], Interval.point(Fraction(1, 4)))
        self.assertTrue(box[1].contains(Fraction(1, 16)))

    def test_problem_validation(self):
        """Test malformed section problems."""
        with self.assertRaises(ValueError):
            SectionProblem(self.parabola, self.D, self.C, (0, 0))
        with self.assertRaises(ValueError):
            SectionProblem(self.parabola, self.D, open_box((-2, 2), (-HALF, HALF)), (0,))
        with self.assertRaises(ValueError):
            SectionProblem(self.parabola, self.D, self.C, ())

    def test_zero_enclosure(self):
        """Test d = 0: the unique zero of x1 - 1/3."""
        (x1,) = variables(1)
        prob = SectionProblem(polynomial_map([x1 - Fraction(1, 3)], 1), open_box((-1, 1)), open_box((-HALF, HALF)), ())
        cert = verify_IF_lambda(prob, Budget(1000))
        self.assertIsInstance(cert, SectionCertificate)
        self.assertTrue(zero_enclosure(cert, 12)[0].contains(Fraction(1, 3)))

    def test_fixed_coordinates(self):
        """Test a manifold with x2 fixed to 1/2."""
        x1, x2 = variables(2)
        D = RationalBoxManifold(2, (0,), (Interval.open(-1, 1),), (HALF,))
        C = RationalBoxManifold(2, (0,), (Interval.open(Fraction(-3, 4), Fraction(3, 4)),), (HALF,))
        prob = SectionProblem(polynomial_map([x1 - x2], 2), D, C, ())
        self.assertEqual(augmented_system(prob).out_dim, 2)
        cert = verify_IF_lambda(prob, Budget(1000))
        zero = zero_enclosure(cert, 12)
        self.assertTrue(zero[0].contains(HALF))
        self.assertEqual(zero[1], Interval.point(HALF))

    def test_shrink_certificate(self):
        """Test a certified box inside B ∩ C around the zero."""
        (x1,) = variables(1)
        P = polynomial_map([x1 - Fraction(1, 3)], 1)
        B = open_box((-HALF, HALF))
        C = open_box((0, 1))
        A, cert = shrink_certificate(P, B, C, Budget(1000))
        self.assertTrue(B.as_box().contains_box(A.as_box()))
        self.assertTrue(C.as_box().contains_box(A.as_box()))
        self.assertTrue(A.contains_point([Fraction(1, 3)]))
        with self.assertRaises(ValueError):
            shrink_certificate(P, B, open_box((HALF, 1)), Budget(1000))

    def test_shrink_rejects_zero_outside_C(self):
        """Test that C overlapping B but missing the zero 1/3 is refused at once."""
        (x1,) = variables(1)
        P = polynomial_map([x1 - Fraction(1, 3)], 1)
        budget = Budget(1000)
        with self.assertRaisesRegex(ValueError, "not inside C"):
            shrink_certificate(P, open_box((-HALF, HALF)), open_box((-HALF, 0)), budget)
        self.assertLess(budget.used, 64)


class TestPerturbationContract(unittest.TestCase):
    """Test that perturbations below perturbation_radius keep the certificate."""

    def test_random_affine_perturbations(self):
        """Test 100 random perturbations g with ‖∂¹g‖ < δ on y = x/2."""
        rng = random.Random(11)
        x, y = variables(2)
        f = SympyMap([y - x / 2], (x, y))
        cert = verify_IF(f, 1, [1], [1], Budget(1000))
        eps = Fraction(1, 10)
        delta = perturbation_radius(cert, eps)
        samples = [Fraction(k, 4) for k in range(-3, 4)]
        for _ in range(100):
            a, b, c = (delta / 4 * Fraction(rng.randint(-100, 100), 100) for _ in range(3))
            g = sympy.Rational(a.numerator, a.denominator) + sympy.Rational(b.numerator, b.denominator) * x \
                + sympy.Rational(c.numerator, c.denominator) * y
            perturbed = verify_IF(SympyMap([y - x / 2 + g], (x, y)), 1, [1], [1], Budget(1000))
            self.assertIsInstance(perturbed, IFCertificate, msg=(a, b, c))
            for t in samples:
                moved = eval_implicit(perturbed, [t], 16)[0] - eval_implicit(cert, [t], 16)[0]
                self.assertLess(moved.mag(), eps, msg=(a, b, c, t))


if __name__ == "__main__":
    unittest.main()
