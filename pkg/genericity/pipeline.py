"""
Construction of generic families by rounds of small polynomial perturbations.

Round k enumerates the nonsingular zeros of the first k names at margin
2^-k, carries the zeros of round k-1 along (re-certified against the
current family), and makes every zero satisfy the inequations
q_{n,j}∘Π_λ ≠ 0 for j ≤ k on its box. A failing zero is first shrunk; if
that does not help, the family is perturbed near the zero by a Hermite
perturbation basis so that its y-coordinates move off the variety of q.
"""
import logging
import random
from dataclasses import replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from budget import DEFAULT_BUDGET, DEFAULT_PRECISION, Budget, BudgetExhausted
from family import DerivativeIndex, EpsilonMap, FamilyEvaluator, multi_indices, verify_ball
from ifcert import shrink_certificate, zero_enclosure
from interval import Box, Interval, width
from polyalg import MultiPoly, perturbation_basis

from .ledger import LedgerZero, PerturbationRecord, ZeroLedger
from .names import enumerate_names, enumerate_nonzero_polys, eval_name
from .zeros import MAX_SHRINK_ATTEMPTS, RealizedZero, find_nonsingular_zeros, inequation_holds, p_jacobian_det, reverify_zero

logger = logging.getLogger("quasigen.genericity.pipeline")

# Derivative orders checked against the ball, besides those a perturbation targets.
BALL_CHECK_ORDER = 4
# Directions and halvings tried per perturbation step.
PERTURB_DIRECTIONS = 4
PERTURB_HALVINGS = 8
# Bound on ‖M − id‖ for the perturbation basis.
BASIS_EPS = Fraction(1, 2)


def _charge(budget: Budget, child: Budget) -> None:
    budget.acquire(max(1, child.used))


def satisfied_inequations(zero: RealizedZero, qs: Sequence[MultiPoly]) -> Tuple[int, ...]:
    """1-based indices j with q_j∘Π_λ ≠ 0 certified on the box; all of them when n = 0."""
    return tuple(j for j, q in enumerate(qs, start=1) if inequation_holds(zero, q))


def tighten_zero(
    zero: RealizedZero,
    fam: FamilyEvaluator,
    qs: Sequence[MultiPoly],
    budget: Budget,
    precision: int,
) -> Optional[RealizedZero]:
    """Shrink B' around the zero until every q in qs is certified nonzero on the box."""
    if len(satisfied_inequations(zero, qs)) == len(qs):
        return zero.with_inequations(range(1, len(qs) + 1))
    name = zero.name
    P = name.P(fam)
    D = name.D
    z = zero_enclosure(zero.certificate, precision + 10)
    radius = width(zero.B_prime) / 2
    for attempt in range(1, MAX_SHRINK_ATTEMPTS + 1):
        r = radius / (1 << attempt)
        around = D.with_factors([Interval.open(z[i].lo - r, z[i].hi + r) for i in D.E])
        child = budget.child(f"tighten-{attempt}", fraction=4)
        try:
            A, cert = shrink_certificate(P, zero.B_prime, around, child, precision)
        except (BudgetExhausted, ValueError) as e:
            logger.debug("pipeline: tighten attempt %d failed: %s", attempt, e)
            _charge(budget, child)
            continue
        _charge(budget, child)
        Bp = A.closure_box()
        _, F = eval_name(name, fam, Bp, precision)
        candidate = replace(
            zero, zero=zero_enclosure(cert, precision), B_prime=A, B_second=tuple(F)[name.m:], certificate=cert
        )
        if not p_jacobian_det(name, zero.lam_prime, candidate.box).excludes_zero():
            continue
        if len(satisfied_inequations(candidate, qs)) == len(qs):
            return candidate.with_inequations(range(1, len(qs) + 1))
    return None


def _slot_oracle(zero: RealizedZero, coords: Sequence[int], precision: int):
    def oracle(k: int) -> Box:
        return zero_enclosure(zero.certificate, precision + 4 * k).project(coords)

    return oracle


def perturbation_polys(zero: RealizedZero, budget: Budget, precision: int) -> Dict[str, List[Tuple[int, MultiPoly]]]:
    """Per member σ: (slot j, p_j) with ∂^α_i p_j at the slot points close to δ_ij."""
    name = zero.name
    groups: Dict[str, List[int]] = {}
    for j, s in enumerate(name.sigma):
        groups.setdefault(s, []).append(j)
    out = {}
    for s, slots in groups.items():
        if not name.xi[slots[0]]:
            # constant member: every slot reads the same value
            out[s] = [(slots[0], MultiPoly.constant(0, 1))] + [(j, MultiPoly.zero(0)) for j in slots[1:]]
            continue
        oracles = [_slot_oracle(zero, name.xi[j], precision) for j in slots]
        basis = perturbation_basis(oracles, [name.alpha[j] for j in slots], BASIS_EPS, budget.child(f"basis {s}"))
        out[s] = list(zip(slots, basis.polys))
    return out


def ball_indices(fam: FamilyEvaluator, polys: Dict[str, MultiPoly],
                 extra: Sequence[DerivativeIndex] = ()) -> List[DerivativeIndex]:
    """Derivative indices of the perturbed members up to BALL_CHECK_ORDER, plus `extra`."""
    out = []
    for s in sorted(polys):
        arity = fam.spec.arity(s)
        out.extend(DerivativeIndex(s, a) for a in multi_indices(arity, BALL_CHECK_ORDER))
    out.extend(d for d in extra if d not in out)
    return out


def _direction(seed: int, round_: int, zero_id: str, attempt: int, n: int) -> Tuple[Fraction, ...]:
    rng = random.Random(f"{seed}:{round_}:{zero_id}:{attempt}")
    out = []
    for _ in range(n):
        v = 0
        while v == 0:
            v = rng.randrange(-256, 257)
        out.append(Fraction(v, 256))
    return tuple(out)


class GenericityBuilder:
    """State of the construction: current family, ledger and carried zeros."""

    def __init__(self, fam: FamilyEvaluator, eps: EpsilonMap, budget: Budget, precision: int, seed: int = 0):
        self.base = fam
        self.fam = fam
        self.eps = eps
        self.budget = budget
        self.precision = precision
        self.seed = seed
        self.ledger = ZeroLedger()
        self.zeros: List[Tuple[str, Optional[str], RealizedZero]] = []
        self.perturbed: Dict[str, MultiPoly] = {}
        self._polys: Dict[Tuple[int, int], List[MultiPoly]] = {}

    def inequations(self, n: int, k: int) -> List[MultiPoly]:
        if (n, k) not in self._polys:
            self._polys[(n, k)] = enumerate_nonzero_polys(n, k)
        return self._polys[(n, k)]

    def _carry(self) -> List[Tuple[str, Optional[str], RealizedZero]]:
        carried = []
        for zid, _, z in self.zeros:
            child = self.budget.child(f"reverify {zid}", fraction=4)
            again = reverify_zero(z, self.fam, child, self.precision)
            _charge(self.budget, child)
            if again is None:
                logger.warning("pipeline: carried zero %s no longer certifies and is dropped", zid)
                continue
            carried.append((zid, again))
        return carried

    def _enumerate(self, k: int, carried) -> List[RealizedZero]:
        delta = Fraction(1, 1 << k)
        fresh = []
        for i, name in enumerate(enumerate_names(self.fam.spec, k)):
            child = self.budget.child(f"zeros {k}.{i}")
            try:
                found = find_nonsingular_zeros(name, self.fam, delta, child, self.precision, name_index=i)
            finally:
                _charge(self.budget, child)
            for z in found:
                if any(c.name_index == i and c.B_prime.closure_box().overlaps(z.zero) for _, c in carried):
                    continue
                fresh.append(z)
        return fresh

    def run_round(self, k: int) -> None:
        carried = self._carry()
        fresh = self._enumerate(k, carried)
        current: List[Tuple[str, Optional[str], RealizedZero]] = []
        counters: Dict[int, int] = {}
        for parent, z in [(zid, z) for zid, z in carried] + [(None, z) for z in fresh]:
            c = counters.get(z.name_index, 0)
            counters[z.name_index] = c + 1
            current.append((f"{k}.{z.name_index}.{c}", parent, z))
        failing = [idx for idx, (_, _, z) in enumerate(current)
                   if len(satisfied_inequations(z, self.inequations(z.name.n, k))) < k]
        steps = max(1, len(failing))
        step_bound = Fraction(1, steps * (1 << (k + 1)))
        for idx in range(len(current)):
            zid, parent, z = current[idx]
            qs = self.inequations(z.name.n, k)
            tightened = tighten_zero(z, self.fam, qs, self.budget, self.precision)
            if tightened is None:
                tightened = self._perturb(k, idx, current, step_bound)
            current[idx] = (zid, parent, tightened)
        self.zeros = current
        self.ledger.add_round([LedgerZero.from_realized(z, zid, k, parent) for zid, parent, z in current])
        logger.info("pipeline: round %d finished with %d zeros", k, len(current))

    def _perturb(self, k: int, idx: int, current, step_bound: Fraction) -> RealizedZero:
        """One perturbation step for current[idx]; the other zeros must survive it."""
        zid, _, zero = current[idx]
        name = zero.name
        if name.n == 0:
            raise BudgetExhausted(f"tighten {zid}", MAX_SHRINK_ATTEMPTS)
        qs = self.inequations(name.n, k)
        basis = perturbation_polys(zero, self.budget, self.precision)
        targets = [DerivativeIndex(name.sigma[j], name.alpha[j]) for j in range(name.n)]
        for attempt in range(PERTURB_DIRECTIONS):
            v = _direction(self.seed, k, zid, attempt, name.n)
            t = step_bound
            for _ in range(PERTURB_HALVINGS):
                self.budget.acquire()
                b = tuple(t * vj for vj in v)
                outcome = self._try(k, zid, idx, current, basis, b, qs, targets, step_bound)
                if outcome is not None:
                    return outcome
                t /= 2
        raise BudgetExhausted(f"perturb {zid}", PERTURB_DIRECTIONS * PERTURB_HALVINGS)

    def _try(self, k, zid, idx, current, basis, b, qs, targets, step_bound) -> Optional[RealizedZero]:
        step: Dict[str, MultiPoly] = {}
        for s, pairs in basis.items():
            nvars = self.fam.spec.arity(s)
            total = MultiPoly.zero(nvars)
            for j, p in pairs:
                total = total + p.scale(b[j])
            step[s] = total
        exprs = {s: p.to_sympy(self.fam.spec.member(s).symbols) for s, p in step.items()}
        candidate = FamilyEvaluator(self.fam.spec.perturbed(exprs))
        indices = ball_indices(self.fam, step, targets)
        if verify_ball(self.fam, candidate, EpsilonMap.constant(step_bound), indices, self.budget.child("step")) is not True:
            return None
        total = {s: self.perturbed.get(s, MultiPoly.zero(p.nvars)) + p for s, p in step.items()}
        if verify_ball(self.base, candidate, self.eps, ball_indices(self.base, total, targets),
                       self.budget.child("ball")) is not True:
            return None
        zero = current[idx][2]
        moved = reverify_zero(zero, candidate, self.budget.child("moved"), self.precision)
        if moved is None:
            return None
        moved = tighten_zero(moved, candidate, qs, self.budget, self.precision)
        if moved is None:
            return None
        survivors = []
        for other_idx, (oid, _, other) in enumerate(current):
            if other_idx == idx:
                continue
            again = reverify_zero(other, candidate, self.budget.child(f"keep {oid}"), self.precision)
            if again is None:
                return None
            held = satisfied_inequations(again, self.inequations(again.name.n, k))
            if not set(other.inequations) <= set(held):
                return None
            survivors.append((other_idx, again.with_inequations(other.inequations)))
        for other_idx, again in survivors:
            oid, parent, _ = current[other_idx]
            current[other_idx] = (oid, parent, again)
        self.fam = candidate
        self.perturbed = total
        self.ledger.perturbations.append(PerturbationRecord(k, zid, step, b, step_bound))
        logger.info("pipeline: perturbed %s for zero %s with b=%s", sorted(step), zid, [str(v) for v in b])
        return moved


def make_generic(
    fam: FamilyEvaluator,
    eps: EpsilonMap,
    rounds: int,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
    seed: int = 0,
) -> Tuple[FamilyEvaluator, ZeroLedger]:
    """Run `rounds` rounds of the construction starting from `fam`.

    Returns the final family (the base family plus polynomial
    perturbations) and the ledger of realized zeros and perturbations.

    Raises:
        BudgetExhausted: If a zero enumeration or a perturbation step runs out,
            named after the sub-step.
        ValueError: If rounds is negative.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    budget = budget or Budget(DEFAULT_BUDGET, name="make_generic")
    precision = DEFAULT_PRECISION if precision is None else precision
    builder = GenericityBuilder(fam, eps, budget, precision, seed)
    for k in range(1, rounds + 1):
        builder.run_round(k)
    return builder.fam, builder.ledger


def perturbation_total(ledger: ZeroLedger) -> Dict[str, MultiPoly]:
    """Sum of all recorded perturbation polynomials per member."""
    total: Dict[str, MultiPoly] = {}
    for record in ledger.perturbations:
        for s, p in record.polys.items():
            total[s] = total[s] + p if s in total else p
    return total
