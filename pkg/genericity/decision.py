"""
Ideal membership and precision decisions for sections of S-polynomial maps.

For a certified section φ: Π_λ(C) -> C of P = p∘F, membership of q in the
vanishing ideal of im(F∘φ) is decided by finding the relation ≈ between
derivative slots that φ realizes. Relations are tried coarsest first; for
each one a separation search (φ differs from its quotient lift somewhere)
is time-shared with an acceptance search (the quotient data at a rational
base point a pins down one isolated prime I of the reduced system). The
first accepted relation answers with q∘Φ ∈ I.

The answer is only correct for generic families, which cannot be checked
here; callers vouch for it.
"""
import itertools
import logging
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from budget import DEFAULT_BUDGET, DEFAULT_PRECISION, Budget, BudgetExhausted, round_robin
from family import DomainError, FamilyEvaluator, Undecided
from ideals import Ideal, UnsupportedDecomposition, component_search, isolated_primes, member, substitute_ideal
from ifcert import NotCertified, SectionCertificate, SectionProblem, verify_IF_lambda
from interval import Box, Interval, RationalBoxManifold
from polyalg import MultiPoly
from utils import frac_to_str, manifold_from_json, manifold_to_json

from .names import NameSpecError, SPolyName, eval_name
from .quotient import EquivRelation, QuotientMaps, admissible_relations, quotient_maps, select_rows

logger = logging.getLogger("quasigen.genericity.decision")

# Precision refinements per base point before the acceptance search moves on.
BASE_REFINEMENTS = 6
# Extra precision per refinement.
PRECISION_STEP = 4
# Denominator grid of the first base point.
BASE_GRID = 256

GENERICITY_ASSUMPTION = "the family is assumed generic"


@dataclass(frozen=True)
class IdentitySection:
    """The section of a name with dim(D) = d: λ coordinates are free, the rest fixed."""

    C: RationalBoxManifold
    lam: Tuple[int, ...]

    def section(self, x_lam: Sequence[Union[Fraction, Interval]], precision: int) -> Box:
        coords = {i: Interval.coerce(v) for v, i in zip(x_lam, self.lam)}
        return Box(tuple(coords.get(i, self.C.factor(i)) for i in range(self.C.m)))


Section = Union[SectionCertificate, IdentitySection]


@dataclass(frozen=True, eq=False)
class MembershipProblem:
    """A name with d = |λ| and an open C ⊆ D on which IF_λ(P; C) should hold."""

    name: SPolyName
    C: RationalBoxManifold
    lam: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(self.lam))
        if self.name.d != len(self.lam):
            raise NameSpecError(f"name has d={self.name.d} but λ={self.lam}")

    @property
    def d(self) -> int:
        return len(self.lam)

    def section_problem(self, fam: FamilyEvaluator) -> SectionProblem:
        return SectionProblem(self.name.P(fam), self.name.D, self.C, self.lam)

    def certify(self, fam: FamilyEvaluator, budget: Optional[Budget] = None,
                precision: Optional[int] = None) -> Union[Section, NotCertified]:
        """IF_λ(P; C), or the identity section when p is empty."""
        if self.name.p:
            return verify_IF_lambda(self.section_problem(fam), budget, precision)
        D, C = self.name.D, self.C
        if C.m != D.m or C.E != D.E or C.u != D.u or not C.is_bounded:
            raise ValueError("C must be a bounded open subset of D")
        if sorted(self.lam) != sorted(D.E):
            raise ValueError(f"λ={self.lam} must list E={D.E} when dim(D) = d")
        return IdentitySection(C, self.lam)

    def lam_box(self) -> Box:
        """The closure of Π_λ(C)."""
        return Box(tuple(self.C.factor(i) for i in self.lam)).closure()

    def to_json(self) -> dict:
        return {"name": self.name.to_json(), "C": manifold_to_json(self.C), "lam": list(self.lam)}

    @classmethod
    def from_json(cls, doc: dict) -> "MembershipProblem":
        lam = tuple(int(i) for i in doc.get("lam", []))
        name_doc = dict(doc["name"])
        name_doc.setdefault("d", len(lam))
        return cls(SPolyName.from_json(name_doc), manifold_from_json(doc["C"]), lam)


@dataclass(frozen=True, eq=False)
class MembershipIdeal:
    """The relation realized by φ and the prime I with 𝕀(im(F∘φ)) = {q : q∘Φ ∈ I}."""

    relation: EquivRelation
    maps: QuotientMaps
    prime: Ideal
    base_point: Tuple[Fraction, ...]

    def contains(self, q: MultiPoly) -> bool:
        expected = self.maps.name.m + self.maps.name.n
        if q.nvars != expected:
            raise ValueError(f"query has {q.nvars} variables, expected m + n = {expected}")
        return member(substitute_ideal(q, self.maps.Phi), self.prime.groebner())

    def to_json(self) -> dict:
        return {
            "relation": self.relation.to_json(),
            "quotient": self.maps.to_json(),
            "prime": self.prime.to_json(),
            "base_point": [frac_to_str(v) for v in self.base_point],
            "assumption": GENERICITY_ASSUMPTION,
        }


def base_point(C: RationalBoxManifold, lam: Sequence[int], attempt: int, seed: int = 0) -> Tuple[Fraction, ...]:
    """A rational point of Π_λ(C).

    Attempt 0 is the center rounded to the 2^-8 grid; later attempts draw
    from a deterministic pseudorandom sequence keyed by (seed, attempt).
    """
    factors = [C.factor(i) for i in lam]
    if attempt == 0:
        point = []
        for iv in factors:
            c = iv.mid()
            r = Fraction(round(c * BASE_GRID), BASE_GRID)
            point.append(r if iv.contains(r) else c)
        return tuple(point)
    rng = random.Random(f"{seed}:{attempt}")
    return tuple(iv.lo + Fraction(rng.randrange(1, 1 << 16), 1 << 16) * iv.length() for iv in factors)


def _cells(box: Box, level: int) -> Iterator[Box]:
    axes = []
    for iv in box:
        step = iv.length() / (1 << level)
        axes.append([Interval(iv.lo + k * step, iv.lo + (k + 1) * step) for k in range(1 << level)])
    for cell in itertools.product(*axes):
        yield Box(tuple(cell))


def separation_search(section: Section, maps: QuotientMaps, lam_box: Box, precision: int) -> Iterator[None]:
    """Succeeds once some φ_i(B) and φ_μ(i)(B) are disjoint on a sub-box B of Π_λ(C)."""
    pairs = [(i, maps.mu[maps.coord_index[i]]) for i in range(maps.name.m)]
    pairs = [(i, r) for i, r in pairs if i != r]
    if not pairs:
        while True:
            yield
    for level in itertools.count():
        for cell in _cells(lam_box, level):
            try:
                phi = section.section(tuple(cell), precision + level)
            except ValueError:
                yield
                continue
            for i, r in pairs:
                if phi[i].intersect(phi[r]) is None:
                    logger.debug("decision: %s separated at coordinates %d, %d on %s", maps.relation, i, r, cell)
                    return ("separated", i, r)
            yield


def _witness(maps: QuotientMaps, fam: FamilyEvaluator, section: Section, a: Sequence[Fraction], precision: int):
    reduced = maps.reduced_name()

    def witness(k: int) -> Optional[Box]:
        prec = precision + PRECISION_STEP * k
        x_bar = maps.project(section.section(a, prec))
        try:
            return eval_name(reduced, fam, x_bar, prec)[1]
        except DomainError:
            return None

    return witness


def acceptance_search(prob: MembershipProblem, section: Section, relation: EquivRelation, fam: FamilyEvaluator,
                      precision: int, seed: int = 0) -> Iterator[None]:
    """Builds the quotient at a base point and returns ("accepted", MembershipIdeal) or a rejection."""
    maps0 = quotient_maps(prob.name, prob.lam, relation)
    C_box = prob.C.as_box()
    for attempt in itertools.count():
        a = base_point(prob.C, prob.lam, attempt, seed)
        refinements = BASE_REFINEMENTS + attempt
        lifted_ok = False
        for k in range(refinements):
            phi = section.section(a, precision + PRECISION_STEP * k)
            if C_box.contains_box(maps0.lift(maps0.project(phi))):
                lifted_ok = True
                break
            yield
        if not lifted_ok:
            logger.debug("decision: lift of the quotient point leaves C for %s at %s", relation, a)
            continue
        delta = None
        for k in range(refinements):
            prec = precision + PRECISION_STEP * k
            delta = select_rows(maps0, fam, maps0.project(section.section(a, prec)), prec)
            if delta is not None:
                break
            yield
        if delta is None:
            logger.debug("decision: no row selection for %s at %s", relation, a)
            continue
        maps = replace(maps0, delta=delta)
        nv = maps.m_bar + maps.n_bar
        fixed = [k for k in range(maps.m_bar) if k not in maps.E_bar]
        gens = list(maps.p_bar) + [
            MultiPoly.variable(nv, k) - MultiPoly.constant(nv, u) for k, u in zip(fixed, maps.u_bar)
        ]
        try:
            primes = isolated_primes(Ideal(nv, tuple(gens)))
        except UnsupportedDecomposition as e:
            return ("unsupported", str(e))
        yield
        prime = yield from component_search(primes, _witness(maps, fam, section, a, precision))
        if prime is None:
            return ("rejected", "the quotient point lies on no isolated component")
        gb = prime.groebner()
        if all(member(q, gb) for q in maps.p_tilde):
            return ("accepted", MembershipIdeal(relation, maps, prime, tuple(a)))
        return ("rejected", "p∘Φ is not in the component ideal")


def membership_ideal(
    prob: MembershipProblem,
    fam: FamilyEvaluator,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
    seed: int = 0,
    section: Optional[Section] = None,
) -> Union[MembershipIdeal, Undecided]:
    """The relation realized by the section and its component ideal."""
    budget = budget or Budget(DEFAULT_BUDGET, name="decide_ideal_membership")
    precision = DEFAULT_PRECISION if precision is None else precision
    try:
        if section is None:
            child = budget.child("section", fraction=4)
            section = prob.certify(fam, child, precision)
            budget.acquire(max(1, child.used))
            if isinstance(section, NotCertified):
                return Undecided(f"IF_λ(P; C) is not certified: {section.reason}", budget.name)
        lam_box = prob.lam_box()
        unsupported = None
        for relation in admissible_relations(prob.name, prob.lam):
            child = budget.child(f"relation {relation}")
            tasks = [
                separation_search(section, quotient_maps(prob.name, prob.lam, relation), lam_box, precision),
                acceptance_search(prob, section, relation, fam, precision, seed),
            ]
            try:
                _, outcome = round_robin(tasks, child)
            finally:
                budget.acquire(max(1, child.used))
            if outcome[0] == "accepted":
                logger.info("decision: accepted %s after %d steps", relation, budget.used)
                return outcome[1]
            if outcome[0] == "unsupported":
                unsupported = outcome[1]
            logger.debug("decision: %s %s", relation, outcome[0])
    except BudgetExhausted as e:
        return Undecided(str(e), e.name)
    if unsupported is not None:
        return Undecided(f"unsupported decomposition: {unsupported}")
    return Undecided("no equivalence relation was accepted")


def decide_ideal_membership(
    prob: MembershipProblem,
    q: MultiPoly,
    fam: FamilyEvaluator,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
    seed: int = 0,
) -> Union[bool, Undecided]:
    """Whether q ∈ 𝕀(im(F∘φ)) for the section φ of the problem.

    Returns Undecided when a budget runs out or an isolated-prime
    decomposition is unsupported. The family must be generic.
    """
    found = membership_ideal(prob, fam, budget, precision, seed)
    if isinstance(found, Undecided):
        return found
    return found.contains(q)


def decide_precision(
    prob: MembershipProblem,
    i: int,
    fam: FamilyEvaluator,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
    seed: int = 0,
) -> Union[bool, Undecided]:
    """Whether the coordinate φ_i vanishes identically."""
    if not 0 <= i < prob.name.m:
        raise ValueError(f"coordinate {i} out of range for m={prob.name.m}")
    q = MultiPoly.variable(prob.name.m + prob.name.n, i)
    return decide_ideal_membership(prob, q, fam, budget, precision, seed)


def sample_query(
    prob: MembershipProblem,
    q: MultiPoly,
    fam: FamilyEvaluator,
    points: Sequence[Sequence[Fraction]],
    precision: int,
    section: Optional[Section] = None,
) -> List[Interval]:
    """Enclosures of q∘F∘φ at points of Π_λ(C).

    Raises:
        ValueError: If the section cannot be certified.
    """
    if section is None:
        section = prob.certify(fam, precision=precision)
        if isinstance(section, NotCertified):
            raise ValueError(f"IF_λ(P; C) is not certified: {section.reason}")
    out = []
    for x in points:
        phi = section.section(tuple(x), precision)
        _, F = eval_name(prob.name, fam, phi, precision)
        out.append(q.enclose(F))
    return out
