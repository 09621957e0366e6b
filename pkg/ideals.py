"""
Polynomial ideals over Q: Groebner bases, membership, dimension and
isolated primes.

The Groebner basis engine is Buchberger's algorithm with the 'normal'
pair selection and Gebauer-Moeller pair elimination, followed by
minimalization and interreduction to the reduced monic basis.

Isolated primes are computed for the ideal shapes the decision procedure
produces: linear generators are eliminated by substitution, principal
ideals are split by factoring, and zero-dimensional ideals are split
with a separating linear form. Anything else raises
`UnsupportedDecomposition`.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Generator, List, Optional, Sequence, Set, Tuple

import sympy

from budget import Budget
from interval import Box
from polyalg import ArityError, Exponent, MultiPoly

logger = logging.getLogger("quasigen.ideals")


class UnsupportedDecomposition(Exception):
    """Exception raised when an ideal falls outside the decomposable shapes."""
    pass


# -- monomial orders ----------------------------------------------------------

@dataclass(frozen=True)
class MonomialOrder:
    """A monomial order given by a sort key; larger key means larger monomial."""

    name: str
    key: Callable[[Exponent], tuple] = field(compare=False)

    def leading(self, p: MultiPoly) -> Tuple[Exponent, Fraction]:
        if p.is_zero:
            raise ValueError("the zero polynomial has no leading term")
        return max(p.terms, key=lambda t: self.key(t[0]))


def _grevlex_key(e: Exponent) -> tuple:
    return sum(e), tuple(-v for v in reversed(e))


LEX = MonomialOrder("lex", lambda e: tuple(e))
GRLEX = MonomialOrder("grlex", lambda e: (sum(e), tuple(e)))
GREVLEX = MonomialOrder("grevlex", _grevlex_key)

ORDERS = {o.name: o for o in (LEX, GRLEX, GREVLEX)}


def elimination_order(k: int) -> MonomialOrder:
    """Block order eliminating the first k variables, grevlex inside each block."""
    return MonomialOrder(f"elim{k}", lambda e: (_grevlex_key(e[:k]), _grevlex_key(e[k:])))


def get_order(name: str) -> MonomialOrder:
    if name in ORDERS:
        return ORDERS[name]
    if name.startswith("elim") and name[4:].isdigit():
        return elimination_order(int(name[4:]))
    raise ValueError(f"unknown monomial order '{name}'")


def _divides(a: Exponent, b: Exponent) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a: Exponent, b: Exponent) -> Exponent:
    return tuple(max(x, y) for x, y in zip(a, b))


def _mul(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def _div(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x - y for x, y in zip(a, b))


# -- division and S-polynomials -------------------------------------------------

def reduce(f: MultiPoly, G: Sequence[MultiPoly], order: MonomialOrder = GREVLEX) -> MultiPoly:
    """Remainder of full multivariate division of f by G."""
    G = [g for g in G if not g.is_zero]
    leads = [order.leading(g) for g in G]
    p: Dict[Exponent, Fraction] = f.as_dict()
    remainder: Dict[Exponent, Fraction] = {}
    while p:
        lm = max(p, key=order.key)
        c = p[lm]
        for g, (glm, glc) in zip(G, leads):
            if _divides(glm, lm):
                shift = _div(lm, glm)
                factor = c / glc
                for e, v in g.terms:
                    e2 = _mul(e, shift)
                    value = p.get(e2, Fraction(0)) - factor * v
                    if value:
                        p[e2] = value
                    else:
                        p.pop(e2, None)
                break
        else:
            remainder[lm] = c
            del p[lm]
    return MultiPoly(f.nvars, remainder)


def spoly(f: MultiPoly, g: MultiPoly, order: MonomialOrder = GREVLEX) -> MultiPoly:
    """S-polynomial of f and g."""
    lmf, lcf = order.leading(f)
    lmg, lcg = order.leading(g)
    lcm = _lcm(lmf, lmg)
    s1 = f * MultiPoly(f.nvars, {_div(lcm, lmf): 1 / lcf})
    s2 = g * MultiPoly(g.nvars, {_div(lcm, lmg): 1 / lcg})
    return s1 - s2


def _update(G: List[MultiPoly], lmG: List[Exponent], P: Set[Tuple[int, int]], f: MultiPoly, order: MonomialOrder):
    """Gebauer-Moeller update of the pair set when f joins the basis."""
    lmf = order.leading(f)[0]
    P = {
        (i, j) for (i, j) in P
        if not _divides(lmf, _lcm(lmG[i], lmG[j]))
        or _lcm(lmG[i], lmG[j]) == _lcm(lmG[i], lmf)
        or _lcm(lmG[i], lmG[j]) == _lcm(lmG[j], lmf)
    }
    lcm_dict: Dict[Exponent, List[int]] = {}
    for i in range(len(G)):
        lcm_dict.setdefault(_lcm(lmG[i], lmf), []).append(i)
    minimal: List[Exponent] = []
    for L in sorted(lcm_dict, key=order.key):
        if all(not _divides(L2, L) for L2 in minimal):
            minimal.append(L)
    new_pairs = set()
    for L in minimal:
        if not any(_lcm(lmG[i], lmf) == _mul(lmG[i], lmf) for i in lcm_dict[L]):
            new_pairs.add((min(lcm_dict[L]), len(G)))
    return G + [f], lmG + [lmf], P | new_pairs


@dataclass(frozen=True)
class GroebnerBasis:
    """Reduced monic Groebner basis of an ideal under `order`."""

    nvars: int
    order: MonomialOrder
    basis: Tuple[MultiPoly, ...]

    @property
    def is_unit(self) -> bool:
        return any(g.is_constant for g in self.basis)

    @property
    def is_zero(self) -> bool:
        return not self.basis

    def leading_monomials(self) -> Tuple[Exponent, ...]:
        return tuple(self.order.leading(g)[0] for g in self.basis)

    def reduce(self, f: MultiPoly) -> MultiPoly:
        if f.nvars != self.nvars:
            raise ArityError(f"polynomial in {f.nvars} variables for a ring in {self.nvars}")
        return reduce(f, self.basis, self.order)

    def contains(self, f: MultiPoly) -> bool:
        return self.reduce(f).is_zero


def buchberger(generators: Sequence[MultiPoly], nvars: int, order: MonomialOrder = GREVLEX,
               budget: Optional[Budget] = None) -> GroebnerBasis:
    """Reduced Groebner basis of the ideal generated by `generators`.

    Each S-pair reduction charges one step of `budget` when given.
    """
    G: List[MultiPoly] = []
    lmG: List[Exponent] = []
    P: Set[Tuple[int, int]] = set()
    for f in generators:
        if f.nvars != nvars:
            raise ArityError(f"generator in {f.nvars} variables for a ring in {nvars}")
        if not f.is_zero:
            G, lmG, P = _update(G, lmG, P, f.monic(order.key), order)
    while P:
        i, j = min(P, key=lambda p: order.key(_lcm(lmG[p[0]], lmG[p[1]])))
        P.remove((i, j))
        if budget is not None:
            budget.acquire()
        r = reduce(spoly(G[i], G[j], order), G, order)
        if not r.is_zero:
            G, lmG, P = _update(G, lmG, P, r.monic(order.key), order)
    # minimalize
    minimal: List[MultiPoly] = []
    for f in sorted(G, key=lambda h: order.key(order.leading(h)[0])):
        lm = order.leading(f)[0]
        if all(not _divides(order.leading(g)[0], lm) for g in minimal):
            minimal.append(f)
    # interreduce
    reduced = []
    for k, g in enumerate(minimal):
        reduced.append(reduce(g, minimal[:k] + minimal[k + 1:], order).monic(order.key))
    reduced.sort(key=lambda h: order.key(order.leading(h)[0]), reverse=True)
    logger.debug("buchberger: %d generators -> %d basis elements (%s)", len(generators), len(reduced), order.name)
    return GroebnerBasis(nvars, order, tuple(reduced))


# -- ideals ----------------------------------------------------------------------

@dataclass(frozen=True)
class Ideal:
    """The ideal generated by `generators` in Q[x_1..x_nvars]."""

    nvars: int
    generators: Tuple[MultiPoly, ...]
    _bases: Dict[str, GroebnerBasis] = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        gens = tuple(g for g in self.generators if not g.is_zero)
        for g in gens:
            if g.nvars != self.nvars:
                raise ArityError(f"generator {g} does not live in {self.nvars} variables")
        object.__setattr__(self, "generators", gens)

    def groebner(self, order: MonomialOrder = GREVLEX) -> GroebnerBasis:
        if order.name not in self._bases:
            self._bases[order.name] = buchberger(self.generators, self.nvars, order)
        return self._bases[order.name]

    def contains(self, f: MultiPoly) -> bool:
        return self.groebner().contains(f)

    @property
    def is_unit(self) -> bool:
        return self.groebner().is_unit

    @property
    def is_zero(self) -> bool:
        return not self.generators

    def add(self, extra: Sequence[MultiPoly]) -> "Ideal":
        return Ideal(self.nvars, self.generators + tuple(extra))

    def to_json(self) -> dict:
        return {"nvars": self.nvars, "generators": [g.to_json() for g in self.groebner().basis]}

    def __str__(self) -> str:
        return "<" + ", ".join(str(g) for g in self.generators) + ">"


def groebner_basis(ideal: Ideal, order: MonomialOrder = GREVLEX) -> GroebnerBasis:
    return ideal.groebner(order)


def normal_form(f: MultiPoly, gb: GroebnerBasis) -> MultiPoly:
    return gb.reduce(f)


def member(f: MultiPoly, gb: GroebnerBasis) -> bool:
    """f ∈ I exactly when its normal form modulo a Groebner basis of I vanishes."""
    return gb.contains(f)


def ideal_dimension(ideal: Ideal) -> int:
    """Krull dimension: size of a maximal independent set of variables.

    Raises:
        ValueError: For the unit ideal, whose variety is empty.
    """
    gb = ideal.groebner()
    if gb.is_unit:
        raise ValueError("the unit ideal has no dimension")
    supports = [frozenset(i for i, v in enumerate(lm) if v) for lm in gb.leading_monomials()]
    for size in range(ideal.nvars, -1, -1):
        for S in itertools.combinations(range(ideal.nvars), size):
            chosen = set(S)
            if all(not s <= chosen for s in supports):
                return size
    return 0


def tangent_dimension(ideal: Ideal, point: Sequence[Fraction]) -> int:
    """n minus the rank of the Jacobian of the generators at a rational point."""
    point = tuple(Fraction(v) for v in point)
    if len(point) != ideal.nvars:
        raise ArityError(f"point of dimension {len(point)} for {ideal.nvars} variables")
    rows = []
    for g in ideal.generators:
        row = []
        for k in range(ideal.nvars):
            alpha = tuple(1 if a == k else 0 for a in range(ideal.nvars))
            v = g.differentiate(alpha).evaluate(point)
            row.append(sympy.Rational(v.numerator, v.denominator))
        rows.append(row)
    if not rows:
        return ideal.nvars
    return ideal.nvars - sympy.Matrix(rows).rank()


def substitute_ideal(q: MultiPoly, phi: Sequence[MultiPoly]) -> MultiPoly:
    """q∘Φ for a variable-duplication map Φ (every entry is one variable).

    Raises:
        ArityError: If Φ has the wrong length or mixed arities.
        ValueError: If an entry of Φ is not a single variable.
    """
    phi = tuple(phi)
    if len(phi) != q.nvars:
        raise ArityError(f"{len(phi)} substitutions for {q.nvars} variables")
    if len({p.nvars for p in phi}) > 1:
        raise ArityError("the entries of Φ must share one arity")
    for k, p in enumerate(phi):
        terms = p.terms
        if len(terms) != 1 or terms[0][1] != 1 or sum(terms[0][0]) != 1:
            raise ValueError(f"entry {k} of Φ is not a variable: {p}")
    return q.compose(phi)


# -- isolated primes ---------------------------------------------------------------

def _restrict(p: MultiPoly, S: Sequence[int]) -> MultiPoly:
    return MultiPoly(len(S), {tuple(e[i] for i in S): c for e, c in p.terms})


def _linear_generator(gens: Sequence[MultiPoly]) -> Optional[Tuple[MultiPoly, int]]:
    """A generator c·x_k + r with r free of x_k."""
    for g in gens:
        for k in g.support():
            involving = [(e, c) for e, c in g.terms if e[k]]
            if len(involving) == 1 and involving[0][0][k] == 1 and sum(involving[0][0]) == 1:
                return g, k
    return None


def _sympy_symbols(n: int) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(f"z{i}") for i in range(n))


def _factor(g: MultiPoly) -> List[MultiPoly]:
    """Distinct irreducible nonconstant factors of g over Q."""
    symbols = _sympy_symbols(g.nvars)
    _, factors = sympy.factor_list(g.to_sympy(symbols), *symbols)
    out = []
    for f, _ in factors:
        p = MultiPoly.from_sympy(f, symbols)
        if not p.is_constant:
            out.append(p.monic())
    return out


def _minimal_polynomial(f: MultiPoly, gb: GroebnerBasis, budget: Budget) -> List[Fraction]:
    """Coefficients c_0..c_d of the monic minimal polynomial of f modulo a zero-dimensional ideal."""
    powers = [gb.reduce(MultiPoly.constant(gb.nvars, 1))]
    while True:
        budget.acquire()
        powers.append(gb.reduce(powers[-1] * f))
        monomials = sorted({e for p in powers for e, _ in p.terms})
        M = sympy.Matrix([
            [sympy.Rational(p.coefficient(e).numerator, p.coefficient(e).denominator) for p in powers]
            for e in monomials
        ]) if monomials else sympy.zeros(1, len(powers))
        null = M.nullspace()
        if null:
            v = null[0]
            lead = v[len(powers) - 1]
            return [Fraction(int((c / lead).p), int((c / lead).q)) for c in v]


def _univariate(coeffs: Sequence[Fraction], nvars: int, var: int) -> MultiPoly:
    terms = {}
    for d, c in enumerate(coeffs):
        e = [0] * nvars
        e[var] = d
        terms[tuple(e)] = c
    return MultiPoly(nvars, terms)


def _squarefree(p: MultiPoly) -> MultiPoly:
    symbols = _sympy_symbols(p.nvars)
    return MultiPoly.from_sympy(sympy.sqf_part(p.to_sympy(symbols), *symbols), symbols)


def _zero_dimensional_primes(ideal: Ideal, budget: Budget) -> List[Ideal]:
    n = ideal.nvars
    gb = ideal.groebner()
    radical = list(gb.basis)
    for j in range(n):
        mp = _minimal_polynomial(MultiPoly.variable(n, j), gb, budget)
        radical.append(_squarefree(_univariate(mp, n, j)))
    rad = Ideal(n, tuple(radical))
    rgb = rad.groebner()
    xs = MultiPoly.variables(n)
    for k in itertools.count(1):
        budget.acquire()
        ell = MultiPoly.zero(n)
        for j in range(n):
            ell = ell + xs[j].scale(k ** j)
        mp = _minimal_polynomial(ell, rgb, budget)
        t = n
        lift = [g.embed(n + 1, range(n)) for g in rgb.basis]
        t_minus_ell = MultiPoly.variable(n + 1, t) - ell.embed(n + 1, range(n))
        primes = []
        shaped = True
        for g in _factor(_univariate(mp, 1, 0)):
            g_t = g.embed(n + 1, [t])
            shape = buchberger(lift + [t_minus_ell, g_t], n + 1, LEX).basis
            back = [MultiPoly.variable(n, j) for j in range(n)] + [ell]
            gens = []
            for h in shape:
                lm = LEX.leading(h)[0]
                if any(lm[:n]):
                    # x_j - h_j(t)
                    if sum(lm[:n]) != 1 or lm[t] or any(any(e[:n]) and e != lm for e, _ in h.terms):
                        shaped = False
                        break
                gens.append(h.compose(back))
            if not shaped or len(shape) != n + 1:
                shaped = False
                break
            primes.append(Ideal(n, tuple(gens)))
        if shaped:
            logger.debug("isolated_primes: separating form found after %d attempts", k)
            return primes


def _isolated_primes(ideal: Ideal, budget: Budget) -> List[Ideal]:
    n = ideal.nvars
    gb = ideal.groebner()
    if gb.is_unit:
        return []
    if gb.is_zero:
        return [Ideal(n, ())]
    found = _linear_generator(gb.basis)
    if found is not None:
        g, k = found
        c = g.coefficient(tuple(1 if a == k else 0 for a in range(n)))
        r = g - MultiPoly.variable(n, k).scale(c)
        solved = r.scale(-1 / c)
        subs = [solved if a == k else MultiPoly.variable(n, a) for a in range(n)]
        rest = Ideal(n, tuple(h.compose(subs) for h in gb.basis))
        relation = MultiPoly.variable(n, k) - solved
        return [Ideal(n, p.generators + (relation,)) for p in _isolated_primes(rest, budget)]
    support = sorted({i for g in gb.basis for i in g.support()})
    if len(support) < n:
        inner = Ideal(len(support), tuple(_restrict(g, support) for g in gb.basis))
        return [
            Ideal(n, tuple(g.embed(n, support) for g in p.generators))
            for p in _isolated_primes(inner, budget)
        ]
    if len(gb.basis) == 1:
        return [Ideal(n, (f,)) for f in _factor(gb.basis[0])]
    if ideal_dimension(ideal) == 0:
        return _zero_dimensional_primes(ideal, budget)
    raise UnsupportedDecomposition(f"cannot decompose {ideal}")


def isolated_primes(ideal: Ideal, budget: Optional[Budget] = None) -> List[Ideal]:
    """The isolated (minimal) primes of `ideal`; the unit ideal has none.

    Raises:
        UnsupportedDecomposition: For positive-dimensional non-principal
            ideals left after eliminating linear generators.
        BudgetExhausted: If the separating-form search runs out of steps.
    """
    budget = budget or Budget(256, name="isolated_primes")
    primes = _isolated_primes(ideal, budget)
    unique: List[Ideal] = []
    for p in primes:
        basis = p.groebner().basis
        if all(q.groebner().basis != basis for q in unique):
            unique.append(p)
    return unique


def component_search(primes: Sequence[Ideal],
                     witness: Callable[[int], Optional[Box]]) -> Generator[None, None, Optional[Ideal]]:
    """Step generator behind `select_component`; returns None when every prime is discarded.

    `witness(k)` may return None when no enclosure is available at step k.
    """
    alive = list(range(len(primes)))
    for k in itertools.count():
        if not alive:
            return None
        box = witness(k)
        if box is not None:
            alive = [
                a for a in alive
                if all(g.enclose(box).contains(0) for g in primes[a].groebner().basis)
            ]
            if len(alive) == 1:
                return primes[alive[0]]
            if not alive:
                return None
        yield


def select_component(primes: Sequence[Ideal], witness: Callable[[int], Optional[Box]],
                     budget: Optional[Budget] = None) -> Ideal:
    """The unique prime whose variety contains the witness point.

    `witness(k)` encloses the point; boxes shrink as k grows. A prime is
    discarded once some generator of its Groebner basis excludes 0 on the
    witness box.

    Raises:
        ValueError: If every prime is discarded.
        BudgetExhausted: If several primes stay compatible.
    """
    budget = budget or Budget(64, name="select_component")
    search = component_search(primes, witness)
    while True:
        budget.acquire()
        try:
            next(search)
        except StopIteration as stop:
            if stop.value is None:
                raise ValueError("witness point lies on none of the components")
            return stop.value
