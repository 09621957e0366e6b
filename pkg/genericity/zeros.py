"""Enumeration of certified nonsingular zeros of an S-polynomial map."""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from budget import DEFAULT_BUDGET, DEFAULT_PRECISION, Budget, BudgetExhausted
from family import FamilyEvaluator
from ifcert import (
    SectionCertificate,
    SectionProblem,
    certificate_to_json,
    shrink_certificate,
    verify_IF_lambda,
    zero_enclosure,
)
from interval import Box, Interval, IntervalError, RationalBoxManifold, shrink, width
from maps import SympyMap, interval_det, submatrix
from polyalg import MultiPoly
from utils import box_to_json, manifold_to_json

from .names import SPolyName, check_box_distinctness, eval_name

logger = logging.getLogger("quasigen.genericity.zeros")

# Steps granted to one IF_∅ attempt on a cell.
CELL_IF_STEPS = 400
# Halvings of the isolation radius tried before a zero is given up.
MAX_SHRINK_ATTEMPTS = 12


@dataclass(frozen=True, eq=False)
class RealizedZero:
    """A nonsingular zero a of P isolated in B' with IF_∅(P; B') certified.

    B = closure(B') × B'' where B'' encloses f(B'). `lam_prime` lists |E|
    coordinates of (x, y) on which ∂p is nonsingular over B and `lam` the
    n complementary ones. `inequations` holds the indices j whose
    q_{n,j}∘Π_lam is certified nonzero on B.
    """

    name: SPolyName
    zero: Box
    B_prime: RationalBoxManifold
    B_second: Tuple[Interval, ...]
    lam_prime: Tuple[int, ...]
    lam: Tuple[int, ...]
    certificate: SectionCertificate
    name_index: int = 0
    inequations: Tuple[int, ...] = ()

    @property
    def box(self) -> Box:
        return Box(tuple(self.B_prime.closure_box()) + tuple(self.B_second))

    def with_inequations(self, indices: Sequence[int]) -> "RealizedZero":
        return replace(self, inequations=tuple(sorted(set(indices))))

    def to_json(self) -> dict:
        return {
            "name_index": self.name_index,
            "zero": box_to_json(self.zero),
            "B_prime": manifold_to_json(self.B_prime),
            "B_second": box_to_json(self.B_second) if self.B_second else [],
            "lam_prime": list(self.lam_prime),
            "lam": list(self.lam),
            "inequations": list(self.inequations),
            "certificate": certificate_to_json(self.certificate.cert),
        }


def _unit(n: int, k: int) -> Tuple[int, ...]:
    return tuple(1 if a == k else 0 for a in range(n))


def p_jacobian_det(name: SPolyName, cols: Sequence[int], B: Box) -> Interval:
    """Enclosure of det ∂p/∂(x, y)_cols on a box B ⊆ R^(m+n)."""
    nv = name.m + name.n
    matrix = [[q.differentiate(_unit(nv, c)).enclose(B) for c in cols] for q in name.p]
    return interval_det(matrix)


def choose_lambda_prime(name: SPolyName, B: Box) -> Optional[Tuple[int, ...]]:
    """The first increasing λ' ⊆ E ∪ y-coordinates with det ∂p/∂(x,y)_λ' ≠ 0 on B."""
    candidates = sorted(set(name.D.E) | set(range(name.m, name.m + name.n)))
    for cols in itertools.combinations(candidates, len(name.p)):
        if p_jacobian_det(name, cols, B).excludes_zero():
            return cols
    return None


def complement_lambda(name: SPolyName, lam_prime: Sequence[int]) -> Tuple[int, ...]:
    candidates = sorted(set(name.D.E) | set(range(name.m, name.m + name.n)))
    return tuple(c for c in candidates if c not in lam_prime)


def inequation_holds(zero: RealizedZero, q: MultiPoly) -> bool:
    """q∘Π_λ ≠ 0 on B; vacuous for n = 0 where q is a nonzero constant."""
    if zero.name.n == 0:
        return not q.is_zero
    return q.enclose(zero.box.project(zero.lam)).excludes_zero()


def _charge(budget: Budget, child: Budget) -> None:
    budget.acquire(max(1, child.used))


def _cell(D: RationalBoxManifold, core: Box) -> RationalBoxManifold:
    return D.with_factors([Interval.open(iv.lo - iv.length() / 4, iv.hi + iv.length() / 4) for iv in core])


def _grid(D: RationalBoxManifold, delta: Fraction) -> Optional[List[List[Interval]]]:
    try:
        inner = shrink(D, 2 * delta)
    except IntervalError:
        return None
    step = delta / 2
    axes = []
    for i in D.E:
        iv = inner[i]
        count = max(1, math.ceil((iv.hi - iv.lo) / step))
        axes.append([Interval(iv.lo + k * step, iv.lo + (k + 1) * step) for k in range(count)])
    return axes


def _candidate_cells(P: SympyMap, D: RationalBoxManifold, delta: Fraction, budget: Budget,
                     precision: int) -> List[Tuple[RationalBoxManifold, SectionCertificate]]:
    axes = _grid(D, delta)
    if axes is None:
        return []
    rows = range(P.out_dim)
    accepted = []
    for cores in itertools.product(*axes):
        stack = [Box(tuple(cores))]
        while stack:
            core = stack.pop()
            budget.acquire()
            C = _cell(D, core)
            box = C.closure_box()
            if any(v.excludes_zero() for v in P.enclose(box, precision)):
                continue
            det = interval_det(submatrix(P.jacobian(box, precision), rows, D.E))
            if det.mag() <= delta:
                continue
            child = Budget(CELL_IF_STEPS, name="zeros-cell")
            outcome = verify_IF_lambda(SectionProblem(P, D, C, ()), child, precision)
            _charge(budget, child)
            if isinstance(outcome, SectionCertificate):
                accepted.append((C, outcome))
                continue
            stack.extend(core.split())
    return accepted


def _dedupe(found, precision: int):
    kept = []
    for C, cert in found:
        z = zero_enclosure(cert, precision)
        duplicate = False
        for C2, cert2, z2 in kept:
            if C2.as_box().contains_box(z) or C.as_box().contains_box(z2):
                duplicate = True
                break
            if z.overlaps(z2):
                z, z2f = zero_enclosure(cert, precision + 20), zero_enclosure(cert2, precision + 20)
                if z.overlaps(z2f):
                    logger.warning("zeros: overlapping enclosures in %s and %s treated as one zero", C, C2)
                    duplicate = True
                    break
        if not duplicate:
            kept.append((C, cert, z))
    return kept


def _gap(a: Box, b: Box) -> Fraction:
    """Lower bound of the max-norm distance between two boxes."""
    gaps = [max(y.lo - x.hi, x.lo - y.hi, Fraction(0)) for x, y in zip(a, b)]
    return max(gaps)


def realize_zero(
    name: SPolyName,
    fam: FamilyEvaluator,
    P: SympyMap,
    cell: RationalBoxManifold,
    zero: Box,
    radius: Fraction,
    delta: Fraction,
    budget: Budget,
    precision: int,
    name_index: int = 0,
) -> Optional[RealizedZero]:
    """Shrink around a certified zero until distinctness and λ' are certified."""
    D = name.D
    for attempt in range(MAX_SHRINK_ATTEMPTS):
        r = radius / (1 << attempt)
        around = D.with_factors([Interval.open(zero[i].lo - r, zero[i].hi + r) for i in D.E])
        child = budget.child(f"shrink-{attempt}", fraction=4)
        try:
            A, cert = shrink_certificate(P, cell, around, child, precision)
        except (BudgetExhausted, ValueError) as e:
            logger.debug("zeros: shrink attempt %d failed: %s", attempt, e)
            _charge(budget, child)
            continue
        _charge(budget, child)
        Bp = A.closure_box()
        if width(A) >= delta or not check_box_distinctness(Bp, name):
            continue
        _, F = eval_name(name, fam, Bp, precision)
        B_second = tuple(F)[name.m:]
        lam_prime = choose_lambda_prime(name, Box(tuple(Bp) + B_second))
        if lam_prime is None:
            continue
        return RealizedZero(
            name, zero_enclosure(cert, precision), A, B_second, lam_prime,
            complement_lambda(name, lam_prime), cert, name_index,
        )
    return None


def find_nonsingular_zeros(
    name: SPolyName,
    fam: FamilyEvaluator,
    delta: Fraction,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
    name_index: int = 0,
) -> List[RealizedZero]:
    """Disjoint certified boxes for the nonsingular zeros of P = p∘F.

    Every zero in D_2δ with |det ∂P/∂x_E| > δ that satisfies the
    distinctness condition gets a box of width < δ. The cover of D_2δ uses
    cells of width 3δ/4 that are split until each is discarded (P or the
    determinant margin excludes a zero) or certified by IF_∅.

    Raises:
        BudgetExhausted: If the cover does not complete.
        ValueError: If δ is not positive or the name has d > 0.
    """
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if name.d != 0:
        raise ValueError("zero enumeration needs a name with d = 0")
    budget = budget or Budget(DEFAULT_BUDGET, name="find_nonsingular_zeros")
    precision = DEFAULT_PRECISION if precision is None else precision
    P = name.P(fam)
    found = _dedupe(_candidate_cells(P, name.D, delta, budget, precision), precision)
    try:
        inner = shrink(name.D, 2 * delta)
    except IntervalError:
        return []
    found = [(C, cert, z) for C, cert, z in found if z.overlaps(inner)]
    zeros = []
    for k, (C, cert, z) in enumerate(found):
        seps = [_gap(z, z2) for k2, (_, _, z2) in enumerate(found) if k2 != k]
        radius = min([delta / 4] + [s / 3 for s in seps if s > 0])
        realized = realize_zero(name, fam, P, C, z, radius, delta, budget, precision, name_index)
        if realized is None:
            logger.debug("zeros: zero near %s not realized (distinctness or rank)", z)
            continue
        zeros.append(realized)
    zeros.sort(key=lambda r: r.zero.mid())
    logger.info("zeros: %d realized zeros for %s at δ=%s", len(zeros), name, delta)
    return zeros


def reverify_zero(
    zero: RealizedZero,
    fam: FamilyEvaluator,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
) -> Optional[RealizedZero]:
    """Re-certify IF_∅ on B', distinctness and λ' against another family."""
    budget = budget or Budget(DEFAULT_BUDGET, name="reverify_zero")
    precision = DEFAULT_PRECISION if precision is None else precision
    name = zero.name
    P = name.P(fam)
    outcome = verify_IF_lambda(SectionProblem(P, name.D, zero.B_prime, ()), budget, precision)
    if not isinstance(outcome, SectionCertificate):
        return None
    Bp = zero.B_prime.closure_box()
    if not check_box_distinctness(Bp, name):
        return None
    _, F = eval_name(name, fam, Bp, precision)
    B_second = tuple(F)[name.m:]
    box = Box(tuple(Bp) + B_second)
    if not p_jacobian_det(name, zero.lam_prime, box).excludes_zero():
        return None
    return replace(zero, zero=zero_enclosure(outcome, precision), B_second=B_second, certificate=outcome)
