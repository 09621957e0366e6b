"""
Indexed function families and their derivative enclosure oracle.

A family maps names σ to members S_σ: [-ρ(σ), ρ(σ)] -> R written in the
builtin expression language. `FamilyEvaluator` encloses every partial
derivative of every member on rational boxes at any requested precision,
and builds extreme values, moduli of continuity, sup-norms and ball checks
on top of that oracle.
"""
import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy

from budget import Budget, BudgetExhausted
from expressions import (
    enclose_expr,
    parse_definition,
    rational_value,
    validate,
    variables,
)
from interval import Box, Interval
from utils import frac_to_str, parse_fracs

logger = logging.getLogger("quasigen.family")

# Bisections `enclose` may spend per requested bit and per unit of 2^dim.
ENCLOSE_SPLITS_PER_BIT = 8
# Working precision above the requested one for single natural extensions.
ENCLOSE_GUARD_BITS = 8


class DomainError(ValueError):
    """Raised when a box leaves the domain [-ρ(σ), ρ(σ)] of a member."""
    pass


@dataclass(frozen=True)
class Undecided:
    """A semi-decision that ran out of budget or precision."""

    reason: str
    budget: Optional[str] = None

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class FamilyMember:
    """One member S_σ of a family."""

    name: str
    arity: int
    rho: Tuple[Fraction, ...]
    R: Tuple[Fraction, ...]
    definition: sympy.Expr

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError(f"arity of {self.name} must be non-negative")
        if len(self.rho) != self.arity or len(self.R) != self.arity:
            raise ValueError(f"rho and R of {self.name} must have length {self.arity}")
        if any(r <= 0 for r in self.rho) or any(r <= 0 for r in self.R):
            raise ValueError(f"rho and R of {self.name} must be positive")
        validate(self.definition, variables(self.arity))

    @property
    def symbols(self) -> Tuple[sympy.Symbol, ...]:
        return variables(self.arity)

    def domain(self) -> Box:
        return Box.symmetric(self.rho)

    def to_json(self) -> dict:
        return {
            "sigma": self.name,
            "arity": self.arity,
            "rho": [frac_to_str(r) for r in self.rho],
            "R": [frac_to_str(r) for r in self.R],
            "definition": sympy.sstr(self.definition),
        }


@dataclass(frozen=True)
class FamilySpec:
    """A finite index set Σ with arities, radii, holomorphy margins and definitions."""

    members: Tuple[FamilyMember, ...]

    def __post_init__(self):
        names = [m.name for m in self.members]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate member names in {names}")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(m.name for m in self.members)

    def member(self, sigma: str) -> FamilyMember:
        for m in self.members:
            if m.name == sigma:
                return m
        raise KeyError(f"unknown family member {sigma!r}")

    def arity(self, sigma: str) -> int:
        return self.member(sigma).arity

    def perturbed(self, polys: Mapping[str, sympy.Expr]) -> "FamilySpec":
        """The family S_σ + polys[σ] (members absent from `polys` are unchanged)."""
        out = []
        for m in self.members:
            extra = polys.get(m.name)
            if extra is None or extra == 0:
                out.append(m)
                continue
            out.append(FamilyMember(m.name, m.arity, m.rho, m.R, sympy.expand(m.definition + extra)))
        return FamilySpec(tuple(out))

    def to_json(self) -> dict:
        return {"members": [m.to_json() for m in self.members]}


def load_family_spec(document: Union[dict, list]) -> FamilySpec:
    """Build a FamilySpec from its JSON document.

    Accepts a single member object, a list of them, or {"members": [...]}.
    R defaults to (1, ..., 1).
    """
    if isinstance(document, dict) and "members" in document:
        entries = document["members"]
    elif isinstance(document, dict):
        entries = [document]
    else:
        entries = list(document)
    members = []
    for entry in entries:
        try:
            name = str(entry["sigma"])
            arity = int(entry["arity"])
            rho = parse_fracs(entry["rho"])
            R = parse_fracs(entry.get("R", [1] * arity))
            definition = parse_definition(str(entry["definition"]), arity)
        except KeyError as e:
            raise ValueError(f"family member is missing field {e}") from e
        members.append(FamilyMember(name, arity, rho, R, definition))
    return FamilySpec(tuple(members))


@dataclass(frozen=True)
class DerivativeIndex:
    """(σ, α): a member and a multi-index of matching length."""

    sigma: str
    alpha: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if any(a < 0 for a in self.alpha):
            raise ValueError(f"negative multi-index {self.alpha}")

    @property
    def order(self) -> int:
        return sum(self.alpha)


def multi_indices(n: int, max_order: int) -> List[Tuple[int, ...]]:
    """All α ∈ N^n with |α| <= max_order, by order then reverse-lex."""
    out = []
    for order in range(max_order + 1):
        for combo in itertools.combinations_with_replacement(range(n), order):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    return sorted(set(out), key=lambda a: (sum(a), tuple(-x for x in a)))


def alpha_factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


class EpsilonMap:
    """ε(σ, α) = weight(σ) * expr(|α|) with structurally positive `expr`.

    `expr` is a sympy expression in the symbol `order` built from positive
    rationals, sums, products, and powers whose base is a positive rational.
    """

    ORDER = sympy.Symbol("order", integer=True, nonnegative=True)

    def __init__(self, expr: sympy.Expr, weights: Optional[Mapping[str, Fraction]] = None):
        expr = sympy.sympify(expr)
        if not self._is_positive(expr):
            raise ValueError(f"epsilon expression {expr} is not structurally positive")
        self.expr = expr
        self.weights = {k: Fraction(v) for k, v in (weights or {}).items()}
        for name, w in self.weights.items():
            if w <= 0:
                raise ValueError(f"epsilon weight of {name} must be positive")

    @classmethod
    def parse(cls, text: str, weights: Optional[Mapping[str, Fraction]] = None) -> "EpsilonMap":
        try:
            expr = sympy.sympify(text, locals={"order": cls.ORDER}, rational=True)
        except (sympy.SympifyError, TypeError) as e:
            raise ValueError(f"cannot parse epsilon expression {text!r}") from e
        return cls(expr, weights)

    @classmethod
    def constant(cls, value: Fraction) -> "EpsilonMap":
        return cls(sympy.Rational(Fraction(value).numerator, Fraction(value).denominator))

    @classmethod
    def _is_positive(cls, expr: sympy.Expr) -> bool:
        if isinstance(expr, sympy.Rational):
            return expr > 0
        if isinstance(expr, (sympy.Add, sympy.Mul)):
            return all(cls._is_positive(a) for a in expr.args)
        if isinstance(expr, sympy.Pow):
            return (
                isinstance(expr.base, sympy.Rational)
                and expr.base > 0
                and expr.exp.free_symbols <= {cls.ORDER}
                and all(isinstance(a, (sympy.Rational, sympy.Symbol)) or a.is_Add or a.is_Mul
                        for a in sympy.preorder_traversal(expr.exp))
            )
        return False

    def __call__(self, sigma: str, alpha: Sequence[int]) -> Fraction:
        value = rational_value(self.expr.subs(self.ORDER, sum(alpha)))
        return self.weights.get(sigma, Fraction(1)) * value

    def __str__(self) -> str:
        return str(self.expr)


# -- generic branch and bound ----------------------------------------------

def branch_and_bound(
    fn: Callable[[Box], Interval],
    B: Box,
    tol: Fraction,
    budget: Budget,
) -> Tuple[Interval, Interval]:
    """Enclose (min, max) of a function over B to width < tol.

    `fn` must be an inclusion-isotone enclosure. Boxes are explored best
    first with first-widest-coordinate bisection; midpoint enclosures give
    the opposite bounds.
    """
    return _bound_min(fn, B, tol, budget), -_bound_min(lambda b: -fn(b), B, tol, budget)


def _bound_min(fn: Callable[[Box], Interval], B: Box, tol: Fraction, budget: Budget) -> Interval:
    counter = itertools.count()
    first = fn(B)
    upper = fn(Box.from_point(B.mid())).hi
    heap = [(first.lo, next(counter), B)]
    while heap:
        lo, _, box = heapq.heappop(heap)
        if upper - lo < tol:
            return Interval(lo, upper)
        budget.acquire()
        if all(iv.is_point for iv in box):
            # a point box whose enclosure cannot shrink further
            upper = min(upper, fn(box).hi)
            if upper - lo < tol:
                return Interval(lo, upper)
            raise BudgetExhausted(budget.name + " (point box too wide)", budget.max_steps)
        for child in box.split():
            enc = fn(child)
            upper = min(upper, fn(Box.from_point(child.mid())).hi)
            heapq.heappush(heap, (enc.lo, next(counter), child))
    raise BudgetExhausted(budget.name, budget.max_steps)


class FamilyEvaluator:
    """Precision-indexed enclosure oracle for a family and its derivatives.

    Example:
        fam = FamilyEvaluator(load_family_spec(doc))
        fam.enclose(DerivativeIndex("S", (1,)), Box.from_bounds([(0, 1)]), 20)
    """

    def __init__(self, spec: FamilySpec):
        self.spec = spec
        self._derivatives: Dict[Tuple[str, Tuple[int, ...]], sympy.Expr] = {}

    # -- symbolic layer ---------------------------------------------------

    def derivative_expr(self, sigma: str, alpha: Sequence[int]) -> sympy.Expr:
        """∂^α S_σ as a sympy expression (cached)."""
        alpha = tuple(alpha)
        key = (sigma, alpha)
        if key not in self._derivatives:
            member = self.spec.member(sigma)
            if len(alpha) != member.arity:
                raise ValueError(f"multi-index {alpha} does not match arity {member.arity} of {sigma}")
            expr = member.definition
            pairs = [(s, a) for s, a in zip(member.symbols, alpha) if a]
            if pairs:
                expr = sympy.diff(expr, *itertools.chain.from_iterable(pairs))
            self._derivatives[key] = expr
        return self._derivatives[key]

    def _check_domain(self, sigma: str, B: Box) -> None:
        member = self.spec.member(sigma)
        if B.dim != member.arity:
            raise DomainError(f"box of dimension {B.dim} for {sigma} of arity {member.arity}")
        if not member.domain().contains_box(B.closure()):
            raise DomainError(f"box {B} leaves the domain {member.domain()} of {sigma}")

    def natural(self, d: DerivativeIndex, B: Box, precision: int) -> Interval:
        """Single natural interval extension, no subdivision."""
        expr = self.derivative_expr(d.sigma, d.alpha)
        return enclose_expr(expr, self.spec.member(d.sigma).symbols, B.closure(), precision)

    # -- oracle operations -------------------------------------------------

    def enclose(self, d: DerivativeIndex, B: Box, precision: int) -> Interval:
        """Enclose {∂^α S_σ(x) : x ∈ B}.

        Pieces holding the current lowest or highest bound are bisected until
        the hull is within 2^-precision of the hull of the piece midpoint
        values, or ENCLOSE_SPLITS_PER_BIT * (precision + 1) * 2^dim splits
        are spent. Widths therefore tend to the diameter of the range.

        Raises:
            DomainError: If B is not inside [-ρ(σ), ρ(σ)].
        """
        self._check_domain(d.sigma, B)
        if self.spec.member(d.sigma).arity == 0:
            return self.natural(d, B, precision)
        return self._refine(d, B.closure(), precision)

    def _refine(self, d: DerivativeIndex, box: Box, precision: int) -> Interval:
        tol = Fraction(1, 1 << max(precision, 0))
        work = precision + ENCLOSE_GUARD_BITS
        counter = itertools.count()
        pieces: Dict[int, Box] = {}
        lows: List[Tuple[Fraction, int]] = []
        highs: List[Tuple[Fraction, int]] = []
        inner = [None, None]

        def add(piece: Box) -> None:
            enc = self.natural(d, piece, work)
            key = next(counter)
            pieces[key] = piece
            heapq.heappush(lows, (enc.lo, key))
            heapq.heappush(highs, (-enc.hi, key))
            mid = self.natural(d, Box.from_point(piece.mid()), work)
            inner[0] = mid.hi if inner[0] is None else min(inner[0], mid.hi)
            inner[1] = mid.lo if inner[1] is None else max(inner[1], mid.lo)

        def top(heap) -> Tuple[Fraction, int]:
            while heap[0][1] not in pieces:
                heapq.heappop(heap)
            return heap[0]

        add(box)
        for _ in range((ENCLOSE_SPLITS_PER_BIT * (precision + 1)) << box.dim):
            lo, lo_key = top(lows)
            neg_hi, hi_key = top(highs)
            gap_lo = inner[0] - lo
            gap_hi = -neg_hi - inner[1]
            if gap_lo + gap_hi <= tol:
                break
            key = lo_key if gap_lo >= gap_hi else hi_key
            if all(iv.is_point for iv in pieces[key]):
                break
            for child in pieces.pop(key).split():
                add(child)
        return Interval(top(lows)[0], -top(highs)[0])

    def enclose_point(self, d: DerivativeIndex, point: Sequence[Fraction], precision: int) -> Interval:
        return self.enclose(d, Box.from_point(point), precision)

    def extremes(self, d: DerivativeIndex, B: Box, tol: Fraction, budget: Optional[Budget] = None) -> Tuple[Interval, Interval]:
        """Enclosures of min and max of ∂^α S_σ on B, each of width < tol."""
        tol = Fraction(tol)
        if tol <= 0:
            raise ValueError("tol must be positive")
        self._check_domain(d.sigma, B)
        budget = budget or Budget(100000, name="extremes")
        bits = max(1, math.ceil(math.log2(1 / tol))) + 4 if tol < 1 else 4
        return branch_and_bound(lambda b: self.natural(d, b, bits), B.closure(), tol, budget)

    def lipschitz_bound(self, sigma: str, alpha: Sequence[int], K: Box, precision: int = 12) -> Fraction:
        """Upper bound of Σ_i |∂_i ∂^α S_σ| on K (a max-norm Lipschitz constant)."""
        alpha = tuple(alpha)
        total = Fraction(0)
        for i in range(len(alpha)):
            bumped = tuple(a + (1 if j == i else 0) for j, a in enumerate(alpha))
            total += self.enclose(DerivativeIndex(sigma, bumped), K, precision).mag()
        return total

    def modulus(self, d: DerivativeIndex, K: Box, eps: Fraction) -> Fraction:
        """δ > 0 with ‖x − y‖ < δ ⇒ |f(x) − f(y)| < ε on K (Lipschitz route)."""
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        self._check_domain(d.sigma, K)
        L = self.lipschitz_bound(d.sigma, d.alpha, K)
        if L == 0:
            return Fraction(1)
        return eps / L

    def sup_abs(self, d: DerivativeIndex, A: Box, tol: Fraction, budget: Optional[Budget] = None) -> Interval:
        """Enclosure of sup_{x∈A} |∂^α S_σ(x)|."""
        lo, hi = self.extremes(d, A, tol, budget)
        return hi.max(-lo)

    def sup_norm(
        self,
        sigmas: Sequence[str],
        p: int,
        A: Box,
        tol: Fraction = Fraction(1, 1 << 10),
        budget: Optional[Budget] = None,
    ) -> Interval:
        """Enclose ‖∂^p(f)‖ = max over members and |α| <= p of sup_A |∂^α f_i|."""
        result = None
        for sigma in sigmas:
            for alpha in multi_indices(self.spec.arity(sigma), p):
                enc = self.sup_abs(DerivativeIndex(sigma, alpha), A, tol, budget)
                result = enc if result is None else result.max(enc)
        if result is None:
            raise ValueError("sup_norm needs at least one member")
        return result

    def clamp_extend(self, sigma: str, x: Sequence[Fraction], precision: int = 20) -> Interval:
        """Enclose Ŝ_σ(x): S_σ on [-ρ, ρ] (boundary included), 0 elsewhere."""
        member = self.spec.member(sigma)
        if not member.domain().contains_point(x):
            return Interval.point(0)
        return self.enclose_point(DerivativeIndex(sigma, (0,) * member.arity), x, precision)


def _difference_expr(S: FamilyEvaluator, T: FamilyEvaluator, d: DerivativeIndex) -> sympy.Expr:
    a = S.derivative_expr(d.sigma, d.alpha)
    b = T.derivative_expr(d.sigma, d.alpha)
    first, second = sorted((a, b), key=sympy.default_sort_key)
    return sympy.expand(first - second)


def verify_ball(
    S: FamilyEvaluator,
    T: FamilyEvaluator,
    eps: EpsilonMap,
    indices: Iterable[DerivativeIndex],
    budget: Optional[Budget] = None,
    max_refinements: int = 8,
) -> Union[bool, Undecided]:
    """Check sup |∂^α T_σ − ∂^α S_σ| < ε(σ, α) on [-ρ(σ), ρ(σ)] for each index.

    Returns True when every bound is certified, False as soon as one is
    certified to fail, and Undecided when some sup sits too close to its
    bound for the available refinements.
    """
    budget = budget or Budget(200000, name="verify_ball")
    undecided = None
    for d in indices:
        member = S.spec.member(d.sigma)
        bound = eps(d.sigma, d.alpha)
        diff = _difference_expr(S, T, d)
        if diff == 0:
            continue
        symbols = member.symbols
        domain = member.domain()
        tol = bound / 4
        verdict = None
        for _ in range(max_refinements):
            bits = max(4, math.ceil(math.log2(1 / tol)) + 4) if tol < 1 else 4
            fn = lambda b, bits=bits: enclose_expr(diff, symbols, b, bits)
            try:
                lo, hi = branch_and_bound(fn, domain, tol, budget)
            except BudgetExhausted as e:
                return Undecided(str(e), budget.name)
            sup = hi.max(-lo)
            if sup.hi < bound:
                verdict = True
                break
            if sup.lo >= bound:
                verdict = False
                break
            tol /= 16
        if verdict is False:
            logger.debug("verify_ball: %s%s exceeds %s", d.sigma, d.alpha, bound)
            return False
        if verdict is None:
            undecided = Undecided(f"sup of {d.sigma}{d.alpha} is within tolerance of {bound}", budget.name)
    return undecided if undecided is not None else True
