"""
Exact sparse multivariate polynomials over Q.

A `MultiPoly` maps exponent tuples to nonzero `Fraction` coefficients:

    x0^2 * x1 + 3  ->  {(2, 1): Fraction(1), (0, 0): Fraction(3)}

The zero polynomial has no terms. On top of the arithmetic this module
builds the Hermite-type interpolation basis (polynomials whose derivatives
match Kronecker deltas at a tuple of distinct points) and the perturbation
basis used to move prescribed derivatives of family members at points
that are only known through enclosures.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy

from budget import Budget
from interval import Box, Interval
from utils import frac_to_str, parse_frac

logger = logging.getLogger("quasigen.polyalg")

Exponent = Tuple[int, ...]
Number = Union[int, Fraction]


class ArityError(ValueError):
    """Raised when a polynomial meets a point, box or polynomial of the wrong arity."""
    pass


def graded_lex_key(e: Exponent) -> Tuple[int, Exponent]:
    return sum(e), e


class MultiPoly:
    """A polynomial in `nvars` variables with rational coefficients.

    Terms are kept sorted by descending graded-lex order, so equal
    polynomials have equal term tuples.

    Example:
        x, y = MultiPoly.variable(2, 0), MultiPoly.variable(2, 1)
        p = x ** 2 * y + 3
        p.evaluate((2, 3))   # Fraction(15)
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Optional[Mapping[Exponent, Number]] = None):
        if nvars < 0:
            raise ArityError("nvars must be non-negative")
        self.nvars = nvars
        clean: Dict[Exponent, Fraction] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != nvars or any(v < 0 for v in e):
                raise ArityError(f"exponent {e} does not fit {nvars} variables")
            c = Fraction(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
        self._terms: Tuple[Tuple[Exponent, Fraction], ...] = tuple(
            sorted(((e, c) for e, c in clean.items() if c), key=lambda t: graded_lex_key(t[0]), reverse=True)
        )

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value: Number) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, idx: int) -> "MultiPoly":
        if idx < 0 or idx >= nvars:
            raise ArityError(f"variable index {idx} for {nvars} variables")
        e = [0] * nvars
        e[idx] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def variables(cls, nvars: int) -> Tuple["MultiPoly", ...]:
        return tuple(cls.variable(nvars, i) for i in range(nvars))

    @classmethod
    def from_sympy(cls, expr: sympy.Expr, symbols: Sequence[sympy.Symbol]) -> "MultiPoly":
        """Convert a polynomial sympy expression with rational coefficients."""
        symbols = tuple(symbols)
        expr = sympy.sympify(expr)
        if not symbols:
            if not expr.is_Rational:
                raise ArityError(f"{expr} is not a rational constant")
            return cls.constant(0, Fraction(int(expr.p), int(expr.q)))
        try:
            poly = sympy.Poly(expr, *symbols, domain="QQ")
        except sympy.PolynomialError as e:
            raise ArityError(f"{expr} is not a polynomial in {symbols}") from e
        terms = {}
        for e, c in poly.terms():
            terms[tuple(e)] = Fraction(int(c.numerator), int(c.denominator))
        return cls(len(symbols), terms)

    @classmethod
    def from_json(cls, doc: dict, nvars: Optional[int] = None) -> "MultiPoly":
        """Parse {"nvars": k, "coeffs": {"e1,e2,...": "p/q"}}."""
        coeffs = doc.get("coeffs", {})
        n = doc.get("nvars", nvars)
        terms = {}
        for key, value in coeffs.items():
            e = tuple(int(v) for v in str(key).split(",")) if str(key) else ()
            terms[e] = parse_frac(value)
        if n is None:
            if not terms:
                raise ArityError("cannot infer the variable count of an empty polynomial")
            n = len(next(iter(terms)))
        return cls(int(n), terms)

    def to_json(self) -> dict:
        return {
            "nvars": self.nvars,
            "coeffs": {",".join(str(v) for v in e): frac_to_str(c) for e, c in self._terms},
        }

    def to_sympy(self, symbols: Sequence[sympy.Expr]) -> sympy.Expr:
        """Σ c·∏ s_i^e_i; `symbols` may be arbitrary expressions."""
        symbols = tuple(symbols)
        if len(symbols) != self.nvars:
            raise ArityError(f"{len(symbols)} symbols for {self.nvars} variables")
        out = []
        for e, c in self._terms:
            factors = [sympy.Rational(c.numerator, c.denominator)]
            factors += [s ** k for s, k in zip(symbols, e) if k]
            out.append(sympy.Mul(*factors))
        return sympy.Add(*out)

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> Tuple[Tuple[Exponent, Fraction], ...]:
        """(exponent, coefficient) pairs, leading graded-lex term first."""
        return self._terms

    def as_dict(self) -> Dict[Exponent, Fraction]:
        return dict(self._terms)

    def coefficient(self, e: Exponent) -> Fraction:
        return self.as_dict().get(tuple(e), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e, _ in self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e, _ in self._terms), default=-1)

    def height(self) -> int:
        """Largest |numerator| or denominator among the coefficients."""
        return max((max(abs(c.numerator), c.denominator) for _, c in self._terms), default=0)

    def support(self) -> Tuple[int, ...]:
        """Indices of the variables that occur."""
        return tuple(i for i in range(self.nvars) if any(e[i] for e, _ in self._terms))

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.constant(self.nvars, other)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.nvars, self._terms))

    def __repr__(self) -> str:
        return f"MultiPoly({self.nvars}, {dict(self._terms)})"

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for e, c in self._terms:
            mono = "*".join(f"x{i + 1}" if k == 1 else f"x{i + 1}**{k}" for i, k in enumerate(e) if k)
            if not mono:
                parts.append(frac_to_str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{frac_to_str(c)}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ArityError(f"polynomials in {self.nvars} and {other.nvars} variables")
            return other
        if isinstance(other, (int, Fraction)):
            return MultiPoly.constant(self.nvars, other)
        raise TypeError(f"cannot combine MultiPoly with {type(other).__name__}")

    def __add__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        out = self.as_dict()
        for e, c in other._terms:
            out[e] = out.get(e, Fraction(0)) + c
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: -c for e, c in self._terms})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "MultiPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "MultiPoly":
        other = self._coerce(other)
        out: Dict[Exponent, Fraction] = {}
        for ea, ca in self._terms:
            for eb, cb in other._terms:
                e = tuple(a + b for a, b in zip(ea, eb))
                out[e] = out.get(e, Fraction(0)) + ca * cb
        return MultiPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"only non-negative integer powers, got {k!r}")
        result = MultiPoly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def scale(self, c: Number) -> "MultiPoly":
        c = Fraction(c)
        return MultiPoly(self.nvars, {e: v * c for e, v in self._terms})

    def monic(self, key: Callable[[Exponent], object] = graded_lex_key) -> "MultiPoly":
        """Divide by the coefficient of the leading term under `key`."""
        if self.is_zero:
            return self
        lead = max(self._terms, key=lambda t: key(t[0]))
        return self.scale(1 / lead[1])

    # -- calculus and evaluation ------------------------------------------

    def differentiate(self, alpha: Sequence[int]) -> "MultiPoly":
        """∂^α of the polynomial, exactly."""
        alpha = tuple(alpha)
        if len(alpha) != self.nvars:
            raise ArityError(f"multi-index {alpha} for {self.nvars} variables")
        out = {}
        for e, c in self._terms:
            if any(k < a for k, a in zip(e, alpha)):
                continue
            factor = math.prod(math.perm(k, a) for k, a in zip(e, alpha))
            out[tuple(k - a for k, a in zip(e, alpha))] = c * factor
        return MultiPoly(self.nvars, out)

    def evaluate(self, point: Sequence[Number]) -> Fraction:
        point = tuple(Fraction(v) for v in point)
        if len(point) != self.nvars:
            raise ArityError(f"point of dimension {len(point)} for {self.nvars} variables")
        total = Fraction(0)
        for e, c in self._terms:
            term = c
            for v, k in zip(point, e):
                if k:
                    term *= v ** k
            total += term
        return total

    def enclose(self, box: Union[Box, Sequence[Interval]]) -> Interval:
        """Natural interval extension on a box (tight for single monomials)."""
        ivs = tuple(Interval.coerce(iv).closure() for iv in box)
        if len(ivs) != self.nvars:
            raise ArityError(f"box of dimension {len(ivs)} for {self.nvars} variables")
        total = Interval.point(0)
        for e, c in self._terms:
            term = Interval.point(c)
            for iv, k in zip(ivs, e):
                if k:
                    term = term * iv ** k
            total = total + term
        return total

    def compose(self, polys: Sequence["MultiPoly"]) -> "MultiPoly":
        """p(q_1, ..., q_nvars) for polynomials q_i in a common ring."""
        polys = tuple(polys)
        if len(polys) != self.nvars:
            raise ArityError(f"{len(polys)} substitutions for {self.nvars} variables")
        if not polys:
            return self
        target = polys[0].nvars
        if any(q.nvars != target for q in polys):
            raise ArityError("substituted polynomials must share a variable count")
        powers: Dict[Tuple[int, int], MultiPoly] = {}

        def power(i: int, k: int) -> MultiPoly:
            if (i, k) not in powers:
                powers[(i, k)] = polys[i] ** k
            return powers[(i, k)]

        result = MultiPoly.zero(target)
        for e, c in self._terms:
            term = MultiPoly.constant(target, c)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            result = result + term
        return result

    def substitute(self, values: Mapping[int, Number]) -> "MultiPoly":
        """Fix the variables in `values`; the variable count stays the same."""
        subs = [
            MultiPoly.constant(self.nvars, values[i]) if i in values else MultiPoly.variable(self.nvars, i)
            for i in range(self.nvars)
        ]
        return self.compose(subs)

    def embed(self, nvars: int, positions: Sequence[int]) -> "MultiPoly":
        """The same polynomial with variable i renamed to variable positions[i] of a larger ring."""
        if self.nvars == 0:
            return MultiPoly.constant(nvars, self.coefficient(()))
        return self.compose([MultiPoly.variable(nvars, p) for p in positions])


def differentiate(p: MultiPoly, alpha: Sequence[int]) -> MultiPoly:
    return p.differentiate(alpha)


def evaluate(p: MultiPoly, where: Union[Box, Sequence[Number], Sequence[Interval]]) -> Union[Fraction, Interval]:
    """Exact value at a rational point, or an enclosure on a box."""
    if isinstance(where, Box) or any(isinstance(v, Interval) for v in where):
        return p.enclose(where)
    return p.evaluate(where)


# -- Hermite interpolation basis ---------------------------------------------

def _sorted_indices(index_set: Iterable[Sequence[int]]) -> Tuple[Exponent, ...]:
    """Distinct multi-indices, larger |α| first, so every β > α precedes α."""
    return tuple(sorted({tuple(a) for a in index_set}, key=lambda a: (sum(a), a), reverse=True))


class HermiteBasis:
    """Polynomials p_{i,α}(x, y) = N_{i,α}(x, y) / D_{i,α}(y) with Kronecker derivatives.

    For distinct points a_1..a_m in R^n and every i, j, α ∈ I_i, β ∈ I_j:
    ∂^β p_{i,α}(a_j, a) = 1 if (j, β) = (i, α) and 0 otherwise.

    Variables of the symbolic ring: x_1..x_n first, then y_{1,1}..y_{m,n}.
    Point indices i are 0-based.
    """

    def __init__(self, n: int, m: int, index_sets: Sequence[Iterable[Sequence[int]]]):
        if n < 1 or m < 1:
            raise ValueError("n and m must be positive")
        sets = tuple(_sorted_indices(s) for s in index_sets)
        if len(sets) != m:
            raise ValueError(f"{len(sets)} index sets for {m} points")
        for i, s in enumerate(sets):
            if not s:
                raise ValueError(f"index set I_{i} is empty")
            for alpha in s:
                if len(alpha) != n or any(a < 0 for a in alpha):
                    raise ValueError(f"{alpha} is not a multi-index in N^{n}")
        self.n = n
        self.m = m
        self.index_sets = sets
        self.h = tuple(max(sum(a) for a in s) for s in sets)
        self.nvars = n + m * n
        self._symbolic: Dict[Tuple[int, Exponent], Tuple[MultiPoly, MultiPoly]] = {}

    def y_index(self, i: int, k: int) -> int:
        return self.n + i * self.n + k

    # -- shared recursion ---------------------------------------------------

    def _ring(self, points: Optional[Sequence[Sequence[Fraction]]]):
        """x and y as polynomials: symbolic variables, or y fixed at `points`."""
        if points is None:
            N = self.nvars
            X = MultiPoly.variables(N)[: self.n]
            Y = [[MultiPoly.variable(N, self.y_index(i, k)) for k in range(self.n)] for i in range(self.m)]
        else:
            X = MultiPoly.variables(self.n)
            Y = [[MultiPoly.constant(self.n, v) for v in pt] for pt in points]
        return X, Y

    @staticmethod
    def _L(X, Y, i: int, j: int) -> MultiPoly:
        total = MultiPoly.zero(X[0].nvars)
        for k in range(len(X)):
            total = total + (X[k] - Y[j][k]) * (Y[j][k] - Y[i][k])
        return total

    def _q(self, X, Y, i: int, alpha: Exponent) -> MultiPoly:
        q = MultiPoly.constant(X[0].nvars, 1)
        for k, a in enumerate(alpha):
            if a:
                q = q * (X[k] - Y[i][k]) ** a
        for j in range(self.m):
            if j != i:
                q = q * self._L(X, Y, i, j) ** (self.h[j] + 1)
        return q

    def L(self, i: int, j: int) -> MultiPoly:
        """L_{i,j}(x, y) = (x − y_j)·(y_j − y_i) in the symbolic ring."""
        X, Y = self._ring(None)
        return self._L(X, Y, i, j)

    def q(self, i: int, alpha: Sequence[int]) -> MultiPoly:
        """q_{i,α}(x, y) = (x − y_i)^α ∏_{j≠i} L_{i,j}^{h_j + 1}."""
        X, Y = self._ring(None)
        return self._q(X, Y, i, tuple(alpha))

    @staticmethod
    def _smaller(alpha: Exponent, beta: Exponent) -> bool:
        return beta != alpha and all(b >= a for a, b in zip(alpha, beta))

    # -- symbolic numerators and denominators ---------------------------------

    def _at_y(self, p: MultiPoly, i: int) -> MultiPoly:
        """p with x := y_i."""
        X, Y = self._ring(None)
        subs = list(Y[i]) + [MultiPoly.variable(self.nvars, a) for a in range(self.n, self.nvars)]
        return p.compose(subs)

    def _x_derivative(self, alpha: Exponent) -> Tuple[int, ...]:
        return tuple(alpha) + (0,) * (self.m * self.n)

    def fraction(self, i: int, alpha: Sequence[int]) -> Tuple[MultiPoly, MultiPoly]:
        """(N_{i,α}, D_{i,α}) in the symbolic ring."""
        alpha = tuple(alpha)
        if alpha not in self.index_sets[i]:
            raise KeyError(f"{alpha} is not in I_{i}")
        key = (i, alpha)
        if key in self._symbolic:
            return self._symbolic[key]
        q = self.q(i, alpha)
        greater = [b for b in self.index_sets[i] if self._smaller(alpha, b)]
        parts = [self.fraction(i, b) for b in greater]
        common = MultiPoly.constant(self.nvars, 1)
        for _, D in parts:
            common = common * D
        N = q * common
        for b, (Nb, Db) in zip(greater, parts):
            c = self._at_y(q.differentiate(self._x_derivative(b)), i)
            others = MultiPoly.constant(self.nvars, 1)
            for b2, (_, D2) in zip(greater, parts):
                if b2 != b:
                    others = others * D2
            N = N - c * Nb * others
        d = self._at_y(q.differentiate(self._x_derivative(alpha)), i)
        self._symbolic[key] = (N, d * common)
        return self._symbolic[key]

    def numerator(self, i: int, alpha: Sequence[int]) -> MultiPoly:
        return self.fraction(i, alpha)[0]

    def denominator(self, i: int, alpha: Sequence[int]) -> MultiPoly:
        return self.fraction(i, alpha)[1]

    # -- specialization at rational points -------------------------------------

    def _check_points(self, points: Sequence[Sequence[Number]]) -> Tuple[Tuple[Fraction, ...], ...]:
        pts = tuple(tuple(Fraction(v) for v in pt) for pt in points)
        if len(pts) != self.m or any(len(pt) != self.n for pt in pts):
            raise ArityError(f"expected {self.m} points in Q^{self.n}")
        return pts

    def specialize(self, points: Sequence[Sequence[Number]]) -> Dict[Tuple[int, Exponent], MultiPoly]:
        """p_{i,α}(x, a) for every (i, α), as polynomials in x.

        Raises:
            ValueError: If a denominator vanishes at `points` (points not distinct).
        """
        pts = self._check_points(points)
        X, Y = self._ring(pts)
        out: Dict[Tuple[int, Exponent], MultiPoly] = {}
        for i in range(self.m):
            for alpha in self.index_sets[i]:
                q = self._q(X, Y, i, alpha)
                p = q
                for b in self.index_sets[i]:
                    if self._smaller(alpha, b):
                        c = q.differentiate(b).evaluate(pts[i])
                        if c:
                            p = p - out[(i, b)].scale(c)
                d = q.differentiate(alpha).evaluate(pts[i])
                if d == 0:
                    raise ValueError(f"denominator of p_({i},{alpha}) vanishes; points are not distinct")
                out[(i, alpha)] = p.scale(1 / d)
        return out

    def denominators_at(self, points: Sequence[Sequence[Number]]) -> Dict[Tuple[int, Exponent], Fraction]:
        """D_{i,α}(a) from the symbolic denominators."""
        pts = self._check_points(points)
        values = [Fraction(0)] * self.n + [v for pt in pts for v in pt]
        return {
            (i, alpha): self.denominator(i, alpha).evaluate(values)
            for i in range(self.m)
            for alpha in self.index_sets[i]
        }


def hermite_basis(n: int, m: int, index_sets: Sequence[Iterable[Sequence[int]]]) -> HermiteBasis:
    return HermiteBasis(n, m, index_sets)


# -- perturbation basis ------------------------------------------------------

PointOracle = Callable[[int], Box]


def exact_point(point: Sequence[Number]) -> PointOracle:
    """Oracle for a rational point: the point box at every stage."""
    box = Box.from_point(point)
    return lambda k: box


@dataclass(frozen=True)
class PerturbationBasis:
    """p_1..p_m in Q[x] with ‖(∂^{α(i)} p_j(a_i))_{i,j} − id‖ < ε certified.

    `matrix[i][j]` encloses ∂^{α(i)} p_j(a_i); `chi` holds the rational
    interpolation nodes, one per cluster of points.
    """

    polys: Tuple[MultiPoly, ...]
    alpha: Tuple[Exponent, ...]
    matrix: Tuple[Tuple[Interval, ...], ...]
    stage: int
    chi: Tuple[Tuple[Fraction, ...], ...]

    def deviation(self) -> Fraction:
        return max(
            (self.matrix[i][j] - (1 if i == j else 0)).mag()
            for i in range(len(self.polys))
            for j in range(len(self.polys))
        )


def _components(boxes: Sequence[Box]) -> List[int]:
    """Connected-component label per box, labels ordered by least member."""
    parent = list(range(len(boxes)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in itertools.combinations(range(len(boxes)), 2):
        if boxes[a].overlaps(boxes[b]):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots: Dict[int, int] = {}
    labels = []
    for a in range(len(boxes)):
        r = find(a)
        labels.append(roots.setdefault(r, len(roots)))
    return labels


def perturbation_basis(
    points: Sequence[PointOracle],
    alpha: Sequence[Sequence[int]],
    eps: Number,
    budget: Optional[Budget] = None,
) -> PerturbationBasis:
    """Find p_1..p_m with ‖(∂^{α(i)} p_j(a_i)) − id_m‖ < eps.

    `points[i](k)` encloses a_i in a compact box that shrinks to a_i as k
    grows. At stage k the boxes are grouped into connected components,
    each component gets one rational node χ, and the Hermite basis at the
    nodes is tested by interval evaluation on the boxes.

    Raises:
        BudgetExhausted: If no stage certifies the bound. Points sharing an
            α must be distinct, otherwise the search cannot succeed.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    alpha = tuple(tuple(int(v) for v in a) for a in alpha)
    if len(alpha) != len(points) or not points:
        raise ValueError("need one multi-index per point and at least one point")
    budget = budget or Budget(64, name="perturbation_basis")
    m = len(points)
    previous: Optional[List[Box]] = None
    k = 0
    while True:
        budget.acquire()
        boxes = [Box(tuple(iv.closure() for iv in points[i](k))) for i in range(m)]
        n = boxes[0].dim
        if any(b.dim != n or len(alpha[i]) != n for i, b in enumerate(boxes)):
            raise ArityError("points and multi-indices must share one dimension")
        if previous is not None:
            nested = [b.intersect(p) for b, p in zip(boxes, previous)]
            if any(b is None for b in nested):
                raise ValueError(f"point enclosures at stage {k} are not nested")
            boxes = nested
        previous = boxes
        stage, k = k, k + 1
        labels = _components(boxes)
        count = max(labels) + 1
        index_sets: List[List[Exponent]] = [[] for _ in range(count)]
        clash = False
        for i, c in enumerate(labels):
            if alpha[i] in index_sets[c]:
                clash = True
            index_sets[c].append(alpha[i])
        if clash:
            logger.debug("perturbation_basis: stage %d has unseparated points", stage)
            continue
        chi = tuple(boxes[labels.index(c)].mid() for c in range(count))
        try:
            basis = HermiteBasis(n, count, index_sets).specialize(chi)
        except ValueError:
            continue
        polys = tuple(basis[(labels[j], alpha[j])] for j in range(m))
        matrix = tuple(
            tuple(polys[j].differentiate(alpha[i]).enclose(boxes[i]) for j in range(m))
            for i in range(m)
        )
        result = PerturbationBasis(polys, alpha, matrix, stage, chi)
        if result.deviation() < eps:
            logger.debug("perturbation_basis: certified at stage %d with %d clusters", stage, count)
            return result
