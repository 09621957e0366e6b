"""
Step budgets for semi-decision procedures.

Every search in this package (subdivision, certificate search, zero
enumeration, decomposition) charges a `Budget`, and stops with
`BudgetExhausted` instead of running forever.
"""
import logging
import os
import threading
from typing import Generator, List, Optional, Sequence, Tuple, TypeVar

logger = logging.getLogger("quasigen.budget")

DEFAULT_BUDGET = int(os.getenv("QUASIGEN_DEFAULT_BUDGET", 200000))
DEFAULT_PRECISION = int(os.getenv("QUASIGEN_DEFAULT_PRECISION", 12))

T = TypeVar("T")

# A time-shared task yields None once per unit of work and returns its result.
Task = Generator[None, None, T]


class BudgetExhausted(Exception):
    """Exception raised when a search spends its whole step budget."""

    def __init__(self, name: str, max_steps: int):
        super().__init__(f"budget '{name}' exhausted after {max_steps} steps")
        self.name = name
        self.max_steps = max_steps


class Budget:
    """Counter of elementary search steps.

    Example:
        budget = Budget(max_steps=1000, name="verify_IF")
        budget.acquire()      # one box examined
        budget.acquire(4)     # four enclosures computed
    """

    def __init__(self, max_steps: int, name: str = "search"):
        """
        Args:
            max_steps: Maximum number of steps that may be acquired.
            name: Label reported when the budget runs out.
        """
        if max_steps <= 0:
            raise ValueError("max_steps must be positive")
        self.max_steps = max_steps
        self.name = name
        self._used = 0
        self._lock = threading.Lock()

    def acquire(self, steps: int = 1) -> None:
        """Spend `steps` steps; raise BudgetExhausted if none are left."""
        with self._lock:
            if self._used + steps > self.max_steps:
                self._used = self.max_steps
                raise BudgetExhausted(self.name, self.max_steps)
            self._used += steps

    @property
    def used(self) -> int:
        return self._used

    @property
    def remaining(self) -> int:
        """Number of steps that can still be acquired."""
        with self._lock:
            return self.max_steps - self._used

    def reset(self) -> None:
        """Forget all spent steps."""
        with self._lock:
            self._used = 0

    def child(self, name: str, fraction: int = 2) -> "Budget":
        """A budget holding at most 1/fraction of what is left here."""
        return Budget(max(1, self.remaining // fraction), name=name)


def get_budget_from_env(env_var_prefix: str, default_max_steps: int, name: Optional[str] = None) -> Budget:
    """
    Create a Budget from environment variables.

    Looks for:
        {env_var_prefix}_BUDGET (int)

    Args:
        env_var_prefix: Prefix for environment variables (e.g., "QUASIGEN_DEFAULT").
        default_max_steps: Default step count.
        name: Budget label, defaults to the prefix.

    Returns:
        Configured Budget instance.
    """
    max_steps = int(os.getenv(f"{env_var_prefix}_BUDGET", default_max_steps))
    return Budget(max_steps=max_steps, name=name or env_var_prefix.lower())


def round_robin(
    tasks: Sequence[Task], budget: Budget, quantum: int = 1
) -> Tuple[int, object]:
    """Run generator tasks by deterministic time sharing.

    Each live task is advanced `quantum` steps in turn, in index order, and
    every step is charged to `budget`. The first task to return wins.

    Returns:
        (index of the finished task, its return value)

    Raises:
        BudgetExhausted: If the budget runs out first.
        ValueError: If every task stops without a result. A task that
            returns None counts as giving up, and the rest keep running.
    """
    if quantum <= 0:
        raise ValueError("quantum must be positive")
    live: List[Optional[Task]] = list(tasks)
    while any(t is not None for t in live):
        for idx, task in enumerate(live):
            if task is None:
                continue
            for _ in range(quantum):
                budget.acquire()
                try:
                    next(task)
                except StopIteration as stop:
                    if stop.value is not None:
                        logger.debug("round robin: task %d finished after %d steps", idx, budget.used)
                        return idx, stop.value
                    logger.debug("round robin: task %d gave up", idx)
                    live[idx] = None
                    break
    raise ValueError("all time-shared tasks gave up")
