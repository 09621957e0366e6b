"""Unit tests for Groebner bases, membership and isolated primes."""
import os
import random
import unittest
from fractions import Fraction

import sympy
from sympy.polys.matrices import DomainMatrix

from budget import Budget, BudgetExhausted
from family import multi_indices
from interval import Box, Interval
from ideals import (
    GREVLEX,
    LEX,
    Ideal,
    UnsupportedDecomposition,
    buchberger,
    component_search,
    get_order,
    ideal_dimension,
    isolated_primes,
    member,
    normal_form,
    select_component,
    substitute_ideal,
    tangent_dimension,
)
from polyalg import ArityError, MultiPoly

SLOW = bool(os.environ.get("QUASIGEN_SLOW_TESTS"))


def near(*point, radius=Fraction(1, 10)):
    return Box(tuple(Interval(Fraction(v) - radius, Fraction(v) + radius) for v in point))


class TestGroebner(unittest.TestCase):
    """Test Buchberger's algorithm and membership."""

    def setUp(self):
        self.x, self.y = MultiPoly.variables(2)

    def test_circle_and_line(self):
        """Test the reduced basis of <x² + y² − 1, x − y>."""
        gb = buchberger([self.x ** 2 + self.y ** 2 - 1, self.x - self.y], 2)
        self.assertEqual(set(gb.basis), {self.x - self.y, self.y ** 2 - Fraction(1, 2)})
        self.assertTrue(member(self.x ** 2 - Fraction(1, 2), gb))
        self.assertFalse(member(self.x, gb))
        self.assertEqual(normal_form(self.x ** 2, gb), MultiPoly.constant(2, Fraction(1, 2)))

    def test_lex_basis(self):
        """Test that a lex basis eliminates the first variable."""
        gb = buchberger([self.x ** 2 - self.y, self.x * self.y - 1], 2, LEX)
        self.assertIn(self.y ** 3 - 1, gb.basis)

    def test_unit_and_zero(self):
        """Test the unit ideal and the zero ideal."""
        self.assertTrue(Ideal(2, (self.x, self.x - 1)).is_unit)
        zero = Ideal(2, (MultiPoly.zero(2),))
        self.assertTrue(zero.is_zero)
        self.assertTrue(zero.groebner().is_zero)
        self.assertFalse(zero.contains(self.x))

    def test_orders(self):
        """Test order lookup by name."""
        self.assertIs(get_order("grevlex"), GREVLEX)
        self.assertEqual(get_order("elim1").name, "elim1")
        with self.assertRaises(ValueError):
            get_order("revlex")
        gb = buchberger([self.x - self.y ** 2, self.y - 1], 2, get_order("elim1"))
        self.assertTrue(gb.contains(self.x - 1))

    def test_budget(self):
        """Test that S-pair reductions are charged."""
        with self.assertRaises(BudgetExhausted):
            buchberger([self.x ** 2 - self.y, self.x * self.y - 1], 2, LEX, Budget(1))


class TestIdealInvariants(unittest.TestCase):
    """Test dimension, tangent dimension and substitution."""

    def setUp(self):
        self.x, self.y = MultiPoly.variables(2)

    def test_dimension(self):
        """Test Krull dimensions of a line, a point and the unit ideal."""
        self.assertEqual(ideal_dimension(Ideal(2, (self.x - self.y,))), 1)
        self.assertEqual(ideal_dimension(Ideal(2, (self.x, self.y))), 0)
        self.assertEqual(ideal_dimension(Ideal(2, ())), 2)
        with self.assertRaises(ValueError):
            ideal_dimension(Ideal(2, (MultiPoly.constant(2, 1),)))

    def test_tangent_dimension(self):
        """Test the tangent space of the circle at (1, 0)."""
        circle = Ideal(2, (self.x ** 2 + self.y ** 2 - 1,))
        self.assertEqual(tangent_dimension(circle, (1, 0)), 1)
        self.assertEqual(tangent_dimension(Ideal(2, ()), (0, 0)), 2)

    def test_substitute(self):
        """Test q∘Φ for duplication maps and the shape checks."""
        (t,) = MultiPoly.variables(1)
        self.assertEqual(substitute_ideal(self.x - self.y, [t, t]), MultiPoly.zero(1))
        self.assertEqual(substitute_ideal(self.x * self.y, [t, t]), t ** 2)
        self.assertEqual(substitute_ideal(self.x + self.y, [self.x, self.y]), self.x + self.y)
        with self.assertRaises(ArityError):
            substitute_ideal(self.x - self.y, [t])
        with self.assertRaises(ValueError):
            substitute_ideal(self.x - self.y, [t, t ** 2])
        with self.assertRaises(ValueError):
            substitute_ideal(self.x - self.y, [t, t.scale(2)])


class TestIsolatedPrimes(unittest.TestCase):
    """Test the supported decomposition shapes."""

    def setUp(self):
        self.x, self.y = MultiPoly.variables(2)

    def bases(self, primes):
        return {p.groebner().basis for p in primes}

    def test_principal(self):
        """Test that <xy> splits into <x> and <y>."""
        primes = isolated_primes(Ideal(2, (self.x * self.y,)))
        self.assertEqual(self.bases(primes), {(self.x,), (self.y,)})

    def test_irreducible(self):
        """Test that x² − 2 stays prime over Q."""
        (x,) = MultiPoly.variables(1)
        primes = isolated_primes(Ideal(1, (x ** 2 - 2,)))
        self.assertEqual(len(primes), 1)

    def test_linear_elimination(self):
        """Test <x² − 1, y − x>: two points on the diagonal."""
        primes = isolated_primes(Ideal(2, (self.x ** 2 - 1, self.y - self.x)))
        self.assertEqual(len(primes), 2)
        for p in primes:
            self.assertTrue(p.contains(self.x - self.y))
        self.assertTrue(any(p.contains(self.x - 1) for p in primes))
        self.assertTrue(any(p.contains(self.x + 1) for p in primes))

    def test_zero_dimensional(self):
        """Test that <x² − 1, y² − 1> has four points."""
        primes = isolated_primes(Ideal(2, (self.x ** 2 - 1, self.y ** 2 - 1)))
        self.assertEqual(len(primes), 4)
        for a in (1, -1):
            for b in (1, -1):
                hits = [p for p in primes if p.contains(self.x - a) and p.contains(self.y - b)]
                self.assertEqual(len(hits), 1)

    def test_unit_and_zero_ideals(self):
        """Test that the unit ideal has no primes and the zero ideal is prime."""
        self.assertEqual(isolated_primes(Ideal(2, (MultiPoly.constant(2, 1),))), [])
        primes = isolated_primes(Ideal(2, ()))
        self.assertEqual(len(primes), 1)
        self.assertTrue(primes[0].is_zero)

    def test_unsupported(self):
        """Test a positive-dimensional non-principal ideal."""
        x, y, z = MultiPoly.variables(3)
        with self.assertRaises(UnsupportedDecomposition):
            isolated_primes(Ideal(3, (x * z, y * z)))


class TestSelectComponent(unittest.TestCase):
    """Test picking the component through a witness point."""

    def setUp(self):
        (x,) = MultiPoly.variables(1)
        self.primes = [Ideal(1, (x,)), Ideal(1, (x - 1,))]

    def test_select(self):
        """Test that a box around 1 selects <x − 1>."""
        chosen = select_component(self.primes, lambda k: near(1))
        self.assertIs(chosen, self.primes[1])

    def test_shrinking_witness(self):
        """Test a witness that needs a few steps to separate."""
        def witness(k):
            if k == 0:
                return None
            return near(1, radius=Fraction(4, 1 << k))

        chosen = select_component(self.primes, witness, Budget(16))
        self.assertIs(chosen, self.primes[1])

    def test_no_component(self):
        """Test a witness on no component."""
        with self.assertRaises(ValueError):
            select_component(self.primes, lambda k: near(Fraction(1, 2)))

    def test_undecided(self):
        """Test that a box meeting both components exhausts the budget."""
        with self.assertRaises(BudgetExhausted):
            select_component(self.primes, lambda k: near(Fraction(1, 2), radius=1), Budget(5))

    def test_generator_gives_up(self):
        """Test that the step generator returns None with no primes."""
        search = component_search([], lambda k: near(0))
        with self.assertRaises(StopIteration) as ctx:
            next(search)
        self.assertIsNone(ctx.exception.value)


def random_poly(rng, nvars, max_degree, terms=3):
    monomials = multi_indices(nvars, max_degree)
    return MultiPoly(nvars, {rng.choice(monomials): Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 2))
                             for _ in range(rng.randint(1, terms))})


def rank(M):
    return DomainMatrix.from_Matrix(M).to_field().rank()


def in_span_of_multiples(q, gens, nvars):
    """q ∈ span{μ·g : deg(μ·g) ≤ deg(q) + max deg(g) + 2}, by a rank comparison."""
    bound = max(q.degree(), 0) + max(g.degree() for g in gens) + 2
    rows = {e: k for k, e in enumerate(multi_indices(nvars, bound))}
    columns = []
    for g in gens:
        for mu in multi_indices(nvars, bound - g.degree()):
            columns.append((g * MultiPoly(nvars, {mu: 1})).as_dict())
    columns.append(q.as_dict())
    A = sympy.zeros(len(rows), len(columns))
    for c, col in enumerate(columns):
        for e, v in col.items():
            A[rows[e], c] = sympy.Rational(v.numerator, v.denominator)
    return rank(A[:, :-1]) == rank(A)


class TestMembershipAgainstLinearAlgebra(unittest.TestCase):
    """Test member against a degree-bounded linear solve on random ideals."""

    def check(self, seed, nvars, max_degree):
        rng = random.Random(seed)
        for trial in range(100):
            n = rng.randint(1, nvars)
            gens = [g for g in (random_poly(rng, n, max_degree) for _ in range(rng.randint(1, 3))) if not g.is_zero]
            gb = buchberger(gens, n)
            if trial % 2 == 0:
                q = MultiPoly.zero(n)
                for g in gens:
                    q = q + random_poly(rng, n, 1) * g
                self.assertTrue(member(q, gb), msg=(gens, q))
                self.assertTrue(in_span_of_multiples(q, gens, n), msg=(gens, q))
            else:
                q = random_poly(rng, n, 2)
                if in_span_of_multiples(q, gens, n):
                    self.assertTrue(member(q, gb), msg=(gens, q))

    def test_small_ideals(self):
        """Test 100 ideals in at most 2 variables with generators of degree at most 2."""
        self.check(17, 2, 2)

    @unittest.skipUnless(SLOW, "set QUASIGEN_SLOW_TESTS=1 to run")
    def test_full_range(self):
        """Test 100 ideals in at most 3 variables with generators of degree at most 3."""
        self.check(19, 3, 3)


def random_rational(rng):
    return Fraction(rng.randint(-5, 5), rng.randint(1, 3))


class TestIsolatedPrimesCoverage(unittest.TestCase):
    """Test that a point lies on V(I) exactly when it lies on some V(p)."""

    def setUp(self):
        self.rng = random.Random(29)
        self.x, self.y = MultiPoly.variables(2)

    def assert_covers(self, ideal, on_variety):
        primes = isolated_primes(ideal)
        for _ in range(500):
            if self.rng.random() < 0.5:
                point = on_variety()
            else:
                point = (random_rational(self.rng), random_rational(self.rng))
            on_ideal = all(g.evaluate(point) == 0 for g in ideal.generators)
            on_prime = any(all(g.evaluate(point) == 0 for g in p.generators) for p in primes)
            self.assertEqual(on_ideal, on_prime, msg=(ideal.generators, point))

    def test_principal(self):
        """Test <(x − a)(y − b)(x + y − c)>."""
        rng = self.rng
        for _ in range(3):
            a, b, c = (random_rational(rng) for _ in range(3))
            ideal = Ideal(2, ((self.x - a) * (self.y - b) * (self.x + self.y - c),))

            def on_variety():
                t = random_rational(rng)
                return rng.choice([(a, t), (t, b), (t, c - t)])

            self.assert_covers(ideal, on_variety)

    def test_linear_elimination(self):
        """Test <y − (c·x + d), (x − a1)(x − a2)>."""
        rng = self.rng
        for _ in range(3):
            a1, a2, c, d = (random_rational(rng) for _ in range(4))
            ideal = Ideal(2, (self.y - self.x.scale(c) - d, (self.x - a1) * (self.x - a2)))

            def on_variety():
                a = rng.choice([a1, a2])
                return (a, c * a + d)

            self.assert_covers(ideal, on_variety)

    def test_zero_dimensional(self):
        """Test <(x − a1)(x − a2), (y − b1)(y − b2)>."""
        rng = self.rng
        for _ in range(3):
            a1, a2, b1, b2 = (random_rational(rng) for _ in range(4))
            ideal = Ideal(2, ((self.x - a1) * (self.x - a2), (self.y - b1) * (self.y - b2)))

            def on_variety():
                return (rng.choice([a1, a2]), rng.choice([b1, b2]))

            self.assert_covers(ideal, on_variety)


if __name__ == "__main__":
    unittest.main()
