"""Unit tests for step budgets and time sharing."""
import os
import unittest
from unittest.mock import patch

from budget import Budget, BudgetExhausted, get_budget_from_env, round_robin


def _counter(steps, result):
    for _ in range(steps):
        yield
    return result


class TestBudget(unittest.TestCase):
    """Test Budget accounting."""

    def test_init_valid(self):
        """Test initialization with valid parameters."""
        budget = Budget(max_steps=5, name="search")
        self.assertEqual(budget.max_steps, 5)
        self.assertEqual(budget.remaining, 5)
        self.assertEqual(budget.used, 0)

    def test_init_invalid(self):
        """Test initialization with invalid parameters raises ValueError."""
        with self.assertRaises(ValueError):
            Budget(max_steps=0)
        with self.assertRaises(ValueError):
            Budget(max_steps=-1)

    def test_acquire(self):
        """Test acquiring steps until exhaustion."""
        budget = Budget(max_steps=3, name="tiny")
        budget.acquire()
        budget.acquire(2)
        self.assertEqual(budget.remaining, 0)
        with self.assertRaises(BudgetExhausted) as ctx:
            budget.acquire()
        self.assertEqual(ctx.exception.name, "tiny")
        self.assertEqual(ctx.exception.max_steps, 3)

    def test_exhaustion_marks_everything_used(self):
        """Test that a failed acquire leaves no steps behind."""
        budget = Budget(max_steps=4)
        budget.acquire()
        with self.assertRaises(BudgetExhausted):
            budget.acquire(10)
        self.assertEqual(budget.used, 4)

    def test_reset(self):
        """Test that reset forgets spent steps."""
        budget = Budget(max_steps=2)
        budget.acquire(2)
        budget.reset()
        self.assertEqual(budget.remaining, 2)

    def test_child_does_not_charge_parent(self):
        """Test that a child budget gets a share of what is left."""
        budget = Budget(max_steps=10)
        budget.acquire(2)
        child = budget.child("sub")
        self.assertEqual(child.max_steps, 4)
        self.assertEqual(child.name, "sub")
        self.assertEqual(budget.remaining, 8)
        self.assertEqual(Budget(max_steps=1).child("sub", fraction=4).max_steps, 1)


class TestGetBudgetFromEnv(unittest.TestCase):
    """Test get_budget_from_env."""

    @patch.dict(os.environ, {"TEST_BUDGET": "7"})
    def test_from_env(self):
        """Test reading the step count from the environment."""
        budget = get_budget_from_env("TEST", 100)
        self.assertEqual(budget.max_steps, 7)
        self.assertEqual(budget.name, "test")

    @patch.dict(os.environ, {}, clear=True)
    def test_default(self):
        """Test the default when the variable is unset."""
        budget = get_budget_from_env("TEST", 100, name="zeros")
        self.assertEqual(budget.max_steps, 100)
        self.assertEqual(budget.name, "zeros")


class TestRoundRobin(unittest.TestCase):
    """Test deterministic time sharing."""

    def test_first_finisher_wins(self):
        """Test that the shortest task finishes first."""
        budget = Budget(100)
        idx, value = round_robin([_counter(5, "slow"), _counter(2, "fast")], budget)
        self.assertEqual((idx, value), (1, "fast"))

    def test_ties_go_to_lower_index(self):
        """Test that equally long tasks resolve in index order."""
        idx, value = round_robin([_counter(3, "a"), _counter(3, "b")], Budget(100))
        self.assertEqual((idx, value), (0, "a"))

    def test_giving_up(self):
        """Test that tasks returning None are dropped."""
        idx, value = round_robin([_counter(1, None), _counter(4, "x")], Budget(100))
        self.assertEqual((idx, value), (1, "x"))
        with self.assertRaises(ValueError):
            round_robin([_counter(1, None), _counter(0, None)], Budget(100))

    def test_budget_exhausted(self):
        """Test that endless tasks stop with BudgetExhausted."""
        def forever():
            while True:
                yield

        budget = Budget(10)
        with self.assertRaises(BudgetExhausted):
            round_robin([forever(), forever()], budget)
        self.assertEqual(budget.remaining, 0)

    def test_invalid_quantum(self):
        """Test that a nonpositive quantum is rejected."""
        with self.assertRaises(ValueError):
            round_robin([_counter(1, 1)], Budget(10), quantum=0)


if __name__ == "__main__":
    unittest.main()
