"""Names of S-polynomial maps, their evaluation, distinctness checks and enumerations."""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import sympy

from budget import Budget
from expressions import enclose_expr, variables
from family import DerivativeIndex, DomainError, FamilyEvaluator, FamilySpec, Undecided, multi_indices
from interval import Box, Interval, RationalBoxManifold
from maps import SympyMap
from polyalg import Exponent, MultiPoly

logger = logging.getLogger("quasigen.genericity.names")


class NameSpecError(ValueError):
    """Raised when a name's arity bookkeeping or domain is inconsistent."""
    pass


@dataclass(frozen=True, eq=False)
class SPolyName:
    """A name (p, σ, α, ξ, D) for P = p∘F on the rational box manifold D ⊆ R^m.

    F(x) = (x, f_1(x), ..., f_n(x)) with f_j = ∂^α_j S_σ_j evaluated at the
    coordinates ξ_j of x. `p` has dim(D) − d components in m + n variables
    (x first, then y). Coordinates are 0-based.
    """

    m: int
    n: int
    d: int
    p: Tuple[MultiPoly, ...]
    sigma: Tuple[str, ...]
    alpha: Tuple[Exponent, ...]
    xi: Tuple[Tuple[int, ...], ...]
    D: RationalBoxManifold

    def __post_init__(self):
        for attr in ("p", "sigma", "alpha", "xi"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        object.__setattr__(self, "alpha", tuple(tuple(a) for a in self.alpha))
        object.__setattr__(self, "xi", tuple(tuple(x) for x in self.xi))
        if self.m < 1 or self.n < 0 or self.d < 0:
            raise NameSpecError("need m >= 1, n >= 0 and d >= 0")
        if not (len(self.sigma) == len(self.alpha) == len(self.xi) == self.n):
            raise NameSpecError(f"σ, α and ξ must each have n={self.n} entries")
        if self.D.m != self.m:
            raise NameSpecError(f"D lives in R^{self.D.m}, expected R^{self.m}")
        if self.D.dim < self.d:
            raise NameSpecError(f"dim(D)={self.D.dim} is below d={self.d}")
        if len(self.p) != self.D.dim - self.d:
            raise NameSpecError(f"p needs dim(D) − d = {self.D.dim - self.d} components, got {len(self.p)}")
        for q in self.p:
            if q.nvars != self.m + self.n:
                raise NameSpecError(f"component {q} is not a polynomial in m + n = {self.m + self.n} variables")
        seen = set()
        for j, (a, x) in enumerate(zip(self.alpha, self.xi)):
            if len(a) != len(x):
                raise NameSpecError(f"α_{j} and ξ_{j} have different lengths")
            if list(x) != sorted(set(x)) or any(i < 0 or i >= self.m for i in x):
                raise NameSpecError(f"ξ_{j}={x} is not an increasing injection into range({self.m})")
            if seen & set(x):
                raise NameSpecError(f"images of ξ overlap at {sorted(seen & set(x))}")
            seen |= set(x)

    # -- bookkeeping -------------------------------------------------------

    @property
    def image_xi(self) -> Tuple[int, ...]:
        return tuple(sorted(i for x in self.xi for i in x))

    def gamma(self, i: int) -> Optional[Tuple[int, int]]:
        """(j, k) with ξ_j(k) = i, or None for a free coordinate."""
        for j, x in enumerate(self.xi):
            if i in x:
                return j, x.index(i)
        return None

    def duplicated_pairs(self) -> List[Tuple[int, int]]:
        """Pairs j1 < j2 with the same member and multi-index."""
        return [
            (j1, j2)
            for j1, j2 in itertools.combinations(range(self.n), 2)
            if self.sigma[j1] == self.sigma[j2] and self.alpha[j1] == self.alpha[j2]
        ]

    def check(self, spec: FamilySpec) -> "SPolyName":
        """Check arities against the family and that D is open in a stratum of its domain."""
        for j, (s, a) in enumerate(zip(self.sigma, self.alpha)):
            member = spec.member(s)
            if len(a) != member.arity:
                raise NameSpecError(f"α_{j}={a} does not match the arity {member.arity} of {s}")
        for i in range(self.m):
            g = self.gamma(i)
            iv = self.D.factor(i)
            if g is None:
                if i not in self.D.E:
                    raise NameSpecError(f"free coordinate {i} must be open in D")
                continue
            j, k = g
            rho = spec.member(self.sigma[j]).rho[k]
            if i in self.D.E:
                if not Interval.open(-rho, rho).contains_interval(iv):
                    raise NameSpecError(f"factor {iv} of coordinate {i} leaves (-{rho}, {rho})")
            elif iv.lo not in (-rho, rho):
                raise NameSpecError(f"fixed coordinate {i}={iv.lo} is not an endpoint ±{rho}")
        return self

    # -- derived maps ----------------------------------------------------------

    @property
    def symbols(self) -> Tuple[sympy.Symbol, ...]:
        return variables(self.m)

    def f_exprs(self, fam: FamilyEvaluator) -> Tuple[sympy.Expr, ...]:
        """f_j(x) = ∂^α_j S_σ_j(x_ξ_j) as sympy expressions in x1..xm."""
        x = self.symbols
        out = []
        for s, a, coords in zip(self.sigma, self.alpha, self.xi):
            member = fam.spec.member(s)
            expr = fam.derivative_expr(s, a)
            out.append(expr.xreplace({member.symbols[k]: x[c] for k, c in enumerate(coords)}))
        return tuple(out)

    def F_exprs(self, fam: FamilyEvaluator) -> Tuple[sympy.Expr, ...]:
        return tuple(self.symbols) + self.f_exprs(fam)

    def P(self, fam: FamilyEvaluator) -> SympyMap:
        """P = p∘F as a map on R^m."""
        if not self.p:
            raise NameSpecError("a name with dim(D) = d has no equations")
        F = self.F_exprs(fam)
        return SympyMap([q.to_sympy(F) for q in self.p], self.symbols, label=str(self))

    def with_p(self, p: Sequence[MultiPoly], d: Optional[int] = None) -> "SPolyName":
        return SPolyName(self.m, self.n, self.d if d is None else d, tuple(p), self.sigma, self.alpha, self.xi, self.D)

    def with_D(self, D: RationalBoxManifold, d: Optional[int] = None) -> "SPolyName":
        return SPolyName(self.m, self.n, self.d if d is None else d, self.p, self.sigma, self.alpha, self.xi, D)

    def to_json(self) -> dict:
        from utils import manifold_to_json

        return {
            "m": self.m,
            "n": self.n,
            "d": self.d,
            "p": [q.to_json() for q in self.p],
            "sigma": list(self.sigma),
            "alpha": [list(a) for a in self.alpha],
            "xi": [list(x) for x in self.xi],
            "D": manifold_to_json(self.D),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SPolyName":
        from utils import manifold_from_json

        m = int(doc["m"])
        n = int(doc.get("n", 0))
        D = manifold_from_json(doc["D"])
        return cls(
            m,
            n,
            int(doc.get("d", 0)),
            tuple(MultiPoly.from_json(q, m + n) for q in doc["p"]),
            tuple(doc.get("sigma", [])),
            tuple(tuple(int(v) for v in a) for a in doc.get("alpha", [])),
            tuple(tuple(int(v) for v in x) for x in doc.get("xi", [])),
            D,
        )

    def __str__(self) -> str:
        slots = ", ".join(
            f"∂^{list(a)}{s}(x{list(x)})" for s, a, x in zip(self.sigma, self.alpha, self.xi)
        )
        return f"name(m={self.m}, n={self.n}, d={self.d}, p=[{'; '.join(str(q) for q in self.p)}], f=[{slots}], D={self.D})"


def member_enclosure(fam: FamilyEvaluator, sigma: str, alpha: Sequence[int], box: Sequence[Interval],
                     precision: int) -> Interval:
    """Enclosure of ∂^α S_σ on a box; arity-0 members are constants."""
    box = tuple(box)
    if not box:
        return enclose_expr(fam.derivative_expr(sigma, alpha), (), (), precision)
    return fam.enclose(DerivativeIndex(sigma, tuple(alpha)), Box(box), precision)


def eval_name(name: SPolyName, fam: FamilyEvaluator, X: Box, precision: int) -> Tuple[Box, Box]:
    """Enclosures (P(X), F(X)) for a box X inside the closure of D.

    Raises:
        DomainError: If X leaves the closure of D.
    """
    if X.dim != name.m:
        raise DomainError(f"box of dimension {X.dim} for a name on R^{name.m}")
    X = X.closure()
    if not name.D.closure_box().contains_box(X):
        raise DomainError(f"box {X} leaves the closure of {name.D}")
    ys = tuple(
        member_enclosure(fam, s, a, tuple(X[c] for c in coords), precision)
        for s, a, coords in zip(name.sigma, name.alpha, name.xi)
    )
    F = Box(tuple(X) + ys)
    P = Box(tuple(q.enclose(F) for q in name.p)) if name.p else None
    return P, F


# -- distinctness --------------------------------------------------------------

def check_box_distinctness(B: Box, name: SPolyName) -> bool:
    """True iff Π_ξ(i)(B) and Π_ξ(j)(B) are disjoint for all duplicated slots i ≠ j."""
    for j1, j2 in name.duplicated_pairs():
        if not name.xi[j1]:
            return False
        if B.project(name.xi[j1]).overlaps(B.project(name.xi[j2])):
            return False
    return True


def witness_distinctness(a: Union[Box, Sequence[Fraction]], eps: Fraction, name: SPolyName) -> Union[bool, Undecided]:
    """Certify ‖Π_ξ(i)(a) − Π_ξ(j)(a)‖ > eps for all duplicated slots i ≠ j.

    `a` is a point or a point enclosure. Returns False when some distance is
    certified to be at most eps, Undecided when the enclosure is too wide.
    """
    if not isinstance(a, Box):
        a = Box.from_point(a)
    eps = Fraction(eps)
    undecided = None
    for j1, j2 in name.duplicated_pairs():
        x1, x2 = name.xi[j1], name.xi[j2]
        if not x1:
            return False
        dists = [abs(a[c1] - a[c2]) for c1, c2 in zip(x1, x2)]
        dist = Interval(max(d.lo for d in dists), max(d.hi for d in dists))
        if dist.hi <= eps:
            return False
        if dist.lo <= eps:
            undecided = Undecided(f"distance of slots {j1} and {j2} is within enclosure width of {eps}")
    return undecided if undecided is not None else True


# -- enumerations ----------------------------------------------------------------

def _height(v: Fraction) -> int:
    return max(abs(v.numerator), v.denominator)


def coefficient_values(h: int) -> Tuple[Fraction, ...]:
    """Rationals of height at most h: 0, 1, -1, 2, -2, 1/2, -1/2, 3, -3, 3/2, ..."""
    values = {Fraction(0)}
    for q in range(1, h + 1):
        for p in range(1, h + 1):
            if gcd(p, q) == 1:
                values.add(Fraction(p, q))
                values.add(Fraction(-p, q))
    return tuple(sorted(values, key=lambda v: (_height(v), v.denominator, abs(v.numerator), v < 0)))


def monomials_up_to(n: int, degree: int) -> Tuple[Exponent, ...]:
    """Exponents of total degree ≤ degree, ascending graded-lex."""
    out = [e for e in itertools.product(range(degree + 1), repeat=n) if sum(e) <= degree]
    return tuple(sorted(out, key=lambda e: (sum(e), e)))


def iter_polys(n: int, degree: int, height: int) -> Iterator[MultiPoly]:
    """Polynomials of exact total degree and exact coefficient height."""
    monos = monomials_up_to(n, degree)
    top = [k for k, e in enumerate(monos) if sum(e) == degree]
    values = coefficient_values(height)
    for coeffs in itertools.product(values, repeat=len(monos)):
        if not any(coeffs[k] for k in top):
            continue
        if max(_height(c) for c in coeffs) != height:
            continue
        yield MultiPoly(n, dict(zip(monos, coeffs)))


def iter_nonzero_polys(n: int) -> Iterator[MultiPoly]:
    """All of Q[x_1..x_n] minus 0, by weight degree + height, higher degree first within a weight."""
    for w in itertools.count(1):
        for deg in range(w - 1, -1, -1):
            if n == 0 and deg > 0:
                continue
            yield from iter_polys(n, deg, w - deg)


def enumerate_nonzero_polys(n: int, budget: int) -> List[MultiPoly]:
    """The first `budget` nonzero polynomials in n variables."""
    return list(itertools.islice(iter_nonzero_polys(n), budget))


def nonconstant_polys(n: int, count: int) -> List[MultiPoly]:
    return list(itertools.islice((q for q in iter_nonzero_polys(n) if not q.is_constant), count))


def _injection_choices(m: int, arities: Sequence[int]) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    """Tuples of increasing injections into range(m) with pairwise disjoint images, lex order."""
    if not arities:
        yield ()
        return
    for first in itertools.combinations(range(m), arities[0]):
        for rest in _injection_choices(m, arities[1:]):
            if not set(first) & {i for x in rest for i in x}:
                yield (first,) + rest


def iter_names(spec: FamilySpec) -> Iterator[SPolyName]:
    """Names with d = 0 in a fixed order.

    Level L = 1, 2, ... emits the names of complexity exactly L, where the
    complexity is the largest of m, n, 1 + the index of each p component in
    the nonconstant-polynomial order, 1 + |α_j|, and the box parameter t of
    the free coordinates. Within a level the loops run over m, n, σ, α, ξ,
    the strata of the ξ coordinates (open first, then -ρ, then +ρ), t and
    finally the p index tuple.
    """
    members = spec.names
    for L in itertools.count(1):
        for m in range(1, L + 1):
            for n in range(0, (L if members else 0) + 1):
                polys = nonconstant_polys(m + n, L)
                for sigma in itertools.product(members, repeat=n):
                    arities = [spec.arity(s) for s in sigma]
                    alpha_choices = [multi_indices(a, L - 1) for a in arities]
                    for alpha in itertools.product(*alpha_choices):
                        alpha_level = max((sum(a) + 1 for a in alpha), default=0)
                        for xi in _injection_choices(m, arities):
                            yield from _names_at(spec, L, m, n, sigma, alpha, xi, alpha_level, polys)


def _names_at(spec, L, m, n, sigma, alpha, xi, alpha_level, polys) -> Iterator[SPolyName]:
    bound = {}
    for j, coords in enumerate(xi):
        rho = spec.member(sigma[j]).rho
        for k, c in enumerate(coords):
            bound[c] = rho[k]
    strata_coords = sorted(bound)
    free = [i for i in range(m) if i not in bound]
    options = [
        (Interval.open(-bound[c], bound[c]), Interval.point(-bound[c]), Interval.point(bound[c]))
        for c in strata_coords
    ]
    for strata in itertools.product(*options):
        factor: Dict[int, Interval] = dict(zip(strata_coords, strata))
        for t in (range(1, L + 1) if free else (None,)):
            if t is not None:
                for i in free:
                    factor[i] = Interval.open(-t, t)
            E = tuple(i for i in range(m) if not factor[i].is_point)
            if not E:
                continue
            D = RationalBoxManifold(
                m, E, tuple(factor[i] for i in E), tuple(factor[i].lo for i in range(m) if factor[i].is_point)
            )
            for idx in itertools.product(range(len(polys)), repeat=len(E)):
                complexity = max(m, n, alpha_level, max(idx) + 1, t or 0)
                if complexity != L:
                    continue
                yield SPolyName(m, n, 0, tuple(polys[k] for k in idx), tuple(sigma), tuple(alpha), tuple(xi), D)


def enumerate_names(spec: FamilySpec, budget: int) -> List[SPolyName]:
    """The first `budget` names of `iter_names`."""
    return list(itertools.islice(iter_names(spec), budget))
