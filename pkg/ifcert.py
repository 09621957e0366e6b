"""
Certified implicit function theorem.

`verify_IF` checks the inductive statement IF(f; r, s) for a map
f: R^m x R^n -> R^n (x first, y last) on [-r, r] x [-s, s] by interval
subdivision, and returns an `IFCertificate` recording signs, margins and
pivots. The base case (n = 1) needs σ·∂f/∂y > a on the box and
σ·f(x, -s) < -a, σ·f(x, s) > a on [-r, r]. The inductive case solves
equation i for unknown j, substitutes, and recurses.

`verify_IF_lambda` translates a section problem on a rational box manifold
into that form. Certificates can be evaluated (`eval_implicit`), perturbed
safely (`perturbation_radius`), enlarged, shrunk, serialized and replayed.
"""
import itertools
import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import sympy

from budget import DEFAULT_BUDGET, DEFAULT_PRECISION, Budget, BudgetExhausted, round_robin
from expressions import GUARD_BITS
from interval import Box, Interval, RationalBoxManifold
from maps import EnclosableMap, ImplicitReducedMap, SympyMap, affine_restriction
from utils import dyadic_below, frac_to_str, parse_frac

logger = logging.getLogger("quasigen.ifcert")

# Largest k tried when enlarging radii by the factor 1 + 2^-k.
MAX_ENLARGE_STEPS = 10


@dataclass(frozen=True)
class NotCertified:
    """Outcome of a failed verification.

    reason is "refuted" when an interval check certified a violation, and
    "budget" when the search stopped without deciding.
    """

    reason: str
    detail: str = ""

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class BaseNode:
    """σ·∂f_row/∂v_ypos > margin on the box of half-widths `radii`, with the face conditions."""

    sign: int
    margin: Fraction
    row: int
    y_pos: int
    radii: Tuple[Fraction, ...]


@dataclass(frozen=True, eq=False)
class InductiveNode:
    """Equation i solved for unknown j; `pivot` certifies f_i, `reduced` certifies f'∘H."""

    i: int
    j: int
    pivot: "IFCertificate"
    reduced: "IFCertificate"
    enlarged: Tuple[Fraction, ...]


@dataclass(frozen=True, eq=False)
class IFCertificate:
    f: EnclosableMap
    m: int
    r: Tuple[Fraction, ...]
    s: Tuple[Fraction, ...]
    node: Union[BaseNode, InductiveNode]

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def is_base(self) -> bool:
        return isinstance(self.node, BaseNode)

    def depth(self) -> int:
        if self.is_base:
            return 1
        return 1 + self.node.reduced.depth()


Outcome = Union[IFCertificate, NotCertified]


# -- base case ---------------------------------------------------------------

def _box(radii: Sequence[Fraction]) -> Box:
    return Box(tuple(Interval(-r, r) for r in radii))


def _subdivision_check(fn, box: Box, frozen: Optional[int], precision: int, budget: Budget) -> Union[Fraction, str]:
    """Certify fn > 0 on box by subdivision.

    Returns the least certified lower bound, or "refuted" when fn <= 0 is
    certified at a cell midpoint. Coordinate `frozen` is never split; with
    frozen=None every axis may be.
    """
    queue = deque([box])
    least: Optional[Fraction] = None
    while queue:
        cell = queue.popleft()
        budget.acquire()
        enc = fn(cell, precision)
        if enc.lo > 0:
            least = enc.lo if least is None else min(least, enc.lo)
            continue
        sample = Box.from_point(cell.mid())
        if fn(sample, precision + 8).hi <= 0:
            return "refuted"
        lengths = [iv.length() if k != frozen else Fraction(-1) for k, iv in enumerate(cell)]
        axis = max(range(len(lengths)), key=lambda k: (lengths[k], -k))
        if lengths[axis] <= 0:
            raise BudgetExhausted(budget.name + " (degenerate cell)", budget.max_steps)
        queue.extend(cell.split(axis))
    return least


def _verify_base_sign(
    f: EnclosableMap, row: int, y_pos: int, radii: Tuple[Fraction, ...], sign: int, precision: int, budget: Budget
) -> Outcome:
    full = _box(radii)
    s_y = radii[y_pos]

    def derivative(cell, prec):
        return f.partial(row, y_pos, cell, prec) * sign

    def lower_face(cell, prec):
        return -(f.component(row, cell, prec) * sign)

    def upper_face(cell, prec):
        return f.component(row, cell, prec) * sign

    checks = [
        (derivative, full, None),
        (lower_face, full.replace(y_pos, Interval.point(-s_y)), y_pos),
        (upper_face, full.replace(y_pos, Interval.point(s_y)), y_pos),
    ]
    bounds = []
    for fn, box, frozen in checks:
        result = _subdivision_check(fn, box, frozen, precision, budget)
        if result == "refuted":
            return NotCertified("refuted", f"sign {sign} violated for component {row}")
        bounds.append(result)
    least = min(bounds)
    margin = dyadic_below(least, precision + 4) or least / 2
    return BaseNode(sign, margin, row, y_pos, tuple(radii))


def _verify_base(
    f: EnclosableMap, row: int, y_pos: int, radii: Tuple[Fraction, ...], precision: int, budget: Budget
) -> Union[BaseNode, NotCertified]:
    """Try both signs, the one suggested by the center first."""
    center = Box.from_point([Fraction(0)] * len(radii))
    guess = f.partial(row, y_pos, center, precision)
    signs = (-1, 1) if guess.hi < 0 else (1, -1)
    outcomes = []
    for sign in signs:
        try:
            outcome = _verify_base_sign(f, row, y_pos, radii, sign, precision, budget)
        except BudgetExhausted as e:
            outcome = NotCertified("budget", str(e))
        if isinstance(outcome, BaseNode):
            return outcome
        outcomes.append(outcome)
    if all(o.reason == "refuted" for o in outcomes):
        return NotCertified("refuted", f"no sign works for component {row} in variable {y_pos}")
    return NotCertified("budget", "; ".join(o.detail for o in outcomes))


# -- inductive case ----------------------------------------------------------

def _enlarge_pivot(
    f: EnclosableMap, m: int, r, s, i: int, j: int, precision: int, budget: Budget
) -> Optional[Tuple[Fraction, ...]]:
    """Find radii R > (r, s') with IF(f_i; (R, S'), s_j) by factors 1 + 2^-k."""
    base = tuple(r) + tuple(s)
    y_pos = m + j
    for k in range(1, MAX_ENLARGE_STEPS + 1):
        factor = 1 + Fraction(1, 1 << k)
        radii = tuple(v if a == y_pos else v * factor for a, v in enumerate(base))
        try:
            node = _verify_base(f, i, y_pos, radii, precision, budget)
        except ValueError:
            continue
        if isinstance(node, BaseNode):
            return radii
    return None


def _verify_pair(
    f: EnclosableMap, m: int, r, s, i: int, j: int, precision: int, budget: Budget
) -> Outcome:
    y_pos = m + j
    radii = tuple(r) + tuple(s)
    pivot_node = _verify_base(f, i, y_pos, radii, precision, budget)
    if isinstance(pivot_node, NotCertified):
        return pivot_node
    enlarged = _enlarge_pivot(f, m, r, s, i, j, precision, budget)
    if enlarged is None:
        return NotCertified("budget", f"no enlargement found for pivot ({i}, {j})")
    s_prime = tuple(v for k, v in enumerate(s) if k != j)
    reduced_map = ImplicitReducedMap(f, m, i, j, s[j])
    try:
        reduced = _verify(reduced_map, m, tuple(r), s_prime, precision, budget)
    except ValueError as e:
        return NotCertified("budget", f"reduced map for pivot ({i}, {j}) not enclosable: {e}")
    if isinstance(reduced, NotCertified):
        return reduced
    pivot = IFCertificate(f, m + len(s) - 1, tuple(r) + s_prime, (s[j],), pivot_node)
    return IFCertificate(f, m, tuple(r), tuple(s), InductiveNode(i, j, pivot, reduced, enlarged))


def _pair_task(f, m, r, s, i, j, precision, budget: Budget, quantum: int, refuted: set) -> Iterator[None]:
    """Time-shared attempt at pivot (i, j) with escalating sub-budgets and precision."""
    level = 0
    while True:
        child = Budget(quantum << level, name=f"pivot({i},{j})")
        try:
            outcome = _verify_pair(f, m, r, s, i, j, precision + level, child)
        except BudgetExhausted:
            outcome = NotCertified("budget")
        except ValueError as e:
            outcome = NotCertified("budget", str(e))
        budget.acquire(max(1, child.used))
        if isinstance(outcome, IFCertificate):
            return outcome
        if outcome.reason == "refuted":
            refuted.add((i, j))
            return None
        level += 1
        yield


def _verify(f: EnclosableMap, m: int, r, s, precision: int, budget: Budget) -> Outcome:
    n = len(s)
    if f.in_dim != m + n or f.out_dim != n:
        raise ValueError(f"map R^{f.in_dim} -> R^{f.out_dim} does not match m={m}, n={n}")
    if n == 1:
        node = _verify_base(f, 0, m, tuple(r) + tuple(s), precision, budget)
        if isinstance(node, NotCertified):
            return node
        return IFCertificate(f, m, tuple(r), tuple(s), node)
    refuted: set = set()
    tasks = [
        _pair_task(f, m, r, s, i, j, precision, budget, 64, refuted)
        for i, j in itertools.product(range(n), range(n))
    ]
    try:
        (_, cert) = round_robin(tasks, budget)
    except ValueError:
        return NotCertified("refuted", f"every pivot refuted ({len(refuted)} pairs)")
    except BudgetExhausted as e:
        return NotCertified("budget", str(e))
    return cert


def verify_IF(
    f: EnclosableMap,
    m: int,
    r: Sequence[Fraction],
    s: Sequence[Fraction],
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
) -> Outcome:
    """Verify IF(f; r, s).

    Args:
        f: Map on R^(m+n) with the n unknowns last.
        m: Number of parameters x.
        r: Positive half-widths of the x box.
        s: Positive half-widths of the y box.
        budget: Step budget; defaults to QUASIGEN_DEFAULT_BUDGET.
        precision: Working precision index.

    Returns:
        IFCertificate, or NotCertified("refuted" | "budget", detail).

    Raises:
        ValueError: If the dimensions of f do not match m and len(s).
    """
    r = tuple(Fraction(v) for v in r)
    s = tuple(Fraction(v) for v in s)
    if len(r) != m or not s:
        raise ValueError(f"r must have length m={m} and s must be nonempty")
    if any(v <= 0 for v in r + s):
        raise ValueError("radii must be positive")
    budget = budget or Budget(DEFAULT_BUDGET, name="verify_IF")
    precision = DEFAULT_PRECISION if precision is None else precision
    try:
        outcome = _verify(f, m, r, s, precision, budget)
    except BudgetExhausted as e:
        outcome = NotCertified("budget", str(e))
    if isinstance(outcome, IFCertificate):
        logger.info("IF certified for m=%d, n=%d (depth %d)", m, len(s), outcome.depth())
    else:
        logger.debug("IF not certified: %s (%s)", outcome.reason, outcome.detail)
    return outcome


def enlarge_certificate(
    cert: IFCertificate, budget: Optional[Budget] = None, precision: Optional[int] = None
) -> Optional[IFCertificate]:
    """Search u > r, v > s (factors 1 + 2^-k) with IF(f; u, v) certified."""
    budget = budget or Budget(DEFAULT_BUDGET, name="enlarge")
    for k in range(1, MAX_ENLARGE_STEPS + 1):
        factor = 1 + Fraction(1, 1 << k)
        try:
            outcome = verify_IF(
                cert.f, cert.m, [v * factor for v in cert.r], [v * factor for v in cert.s],
                budget.child(f"enlarge-{k}"), precision,
            )
        except ValueError:
            continue
        if isinstance(outcome, IFCertificate):
            return outcome
    return None


# -- evaluation --------------------------------------------------------------

def _root_bounds(
    f: EnclosableMap, row: int, y_pos: int, others: Sequence[Interval], sign: int, s_y: Fraction, steps: int
) -> Interval:
    """Enclose the y with f_row(others, y) = 0 by bisecting both ends.

    Step t evaluates at a fixed working precision, so more steps refine the
    same bisection sequence.
    """
    def value(t: Fraction, step: int) -> Interval:
        ivs = list(others)
        ivs.insert(y_pos, Interval.point(t))
        return f.component(row, Box(tuple(ivs)), step + GUARD_BITS) * sign

    a, b = -s_y, s_y
    for step in range(steps):
        mid = (a + b) / 2
        if value(mid, step).hi < 0:
            a = mid
        else:
            b = mid
    c, d = -s_y, s_y
    for step in range(steps):
        mid = (c + d) / 2
        if value(mid, step).lo > 0:
            d = mid
        else:
            c = mid
    return Interval(a, d)


def eval_implicit(cert: IFCertificate, x: Union[Sequence[Fraction], Box, Tuple[Interval, ...]], precision: int) -> Box:
    """Enclose f_IF(x) ∈ (-s, s) for x in [-r, r].

    `x` may be a rational point or a tuple of intervals.

    Raises:
        ValueError: If x is outside [-r, r].
    """
    xs = tuple(Interval.coerce(v) for v in x)
    if len(xs) != cert.m:
        raise ValueError(f"point of dimension {len(xs)} for m={cert.m}")
    for iv, r in zip(xs, cert.r):
        if not Interval(-r, r).contains_interval(iv):
            raise ValueError(f"{iv} lies outside [-{r}, {r}]")
    steps = precision + 2
    node = cert.node
    if isinstance(node, BaseNode):
        y = _root_bounds(cert.f, node.row, node.y_pos, xs, node.sign, node.radii[node.y_pos], steps)
        return Box((y,))
    rest = eval_implicit(node.reduced, xs, precision)
    pivot = node.pivot.node
    others = xs + tuple(rest)
    yj = _root_bounds(cert.f, pivot.row, pivot.y_pos, others, pivot.sign, cert.s[node.j], steps)
    ys = list(rest)
    ys.insert(node.j, yj)
    return Box(tuple(ys))


# -- perturbation radius -----------------------------------------------------

def _mag(iv: Interval) -> Fraction:
    return iv.mag()


def perturbation_radius(cert: IFCertificate, eps: Fraction, precision: int = 12) -> Fraction:
    """δ > 0 such that ‖∂¹f̃ − ∂¹f‖ < δ keeps IF(f̃; r, s) and ‖f̃_IF − f_IF‖ < ε.

    Base case: δ = min(a/2, a·ε). Inductive case: bound how far f'∘H moves
    through h (|h̃ − h| < δ/A with A the pivot margin) and halve δ until the
    reduced certificate's own radius for ε/(2(1 + Σ|∂h|)) covers it.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    node = cert.node
    if isinstance(node, BaseNode):
        a = node.margin
        return min(a / 2, a * eps)

    f, m = cert.f, cert.m
    pivot = node.pivot.node
    A = pivot.margin
    yp = m + node.j
    full = _box(cert.r + cert.s)
    J = f.jacobian(full, precision)
    H = f.hessian(full, precision)
    rows = [k for k in range(f.out_dim) if k != node.i]
    others = [a for a in range(f.in_dim) if a != yp]
    B1f = max(_mag(J[k][yp]) for k in rows)
    B1F = max((_mag(J[node.i][a]) for a in others), default=Fraction(0))
    M2f = max(_mag(H[k][a][yp]) for k in rows for a in range(f.in_dim))
    M2F = max(_mag(H[node.i][a][yp]) for a in range(f.in_dim))
    M2 = max(M2f, M2F)

    reduced_map = node.reduced.f
    grad_box = _box(cert.r + tuple(v for k, v in enumerate(cert.s) if k != node.j))
    h_grad = reduced_map.implicit_gradient(grad_box, precision)
    Bh = max((_mag(g) for g in h_grad), default=Fraction(0))
    Bh_y = sum((_mag(g) for g in h_grad[m:]), Fraction(0))

    eps_inner = eps / (2 * (1 + Bh_y))
    delta_inner = perturbation_radius(node.reduced, eps_inner, precision)
    delta = min(A / 2, A * eps / 2, perturbation_radius(node.pivot, eps, precision))

    def psi(d: Fraction) -> Optional[Fraction]:
        dh = d / A
        dF = d + M2 * dh
        if dF >= A:
            return None
        e_dh = dF * (1 + B1F / A) / (A - dF)
        value = d + B1f * dh
        deriv = dF + dF * (Bh + e_dh) + B1f * e_dh
        return max(value, deriv)

    for _ in range(256):
        bound = psi(delta)
        if bound is not None and bound < delta_inner:
            return delta
        delta /= 2
    raise ValueError("perturbation radius search did not converge")


# -- section problems --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SectionProblem:
    """P: D -> R^(dim D − d) with the section over the coordinates λ on C."""

    P: SympyMap
    D: RationalBoxManifold
    C: RationalBoxManifold
    lam: Tuple[int, ...]
    lam_prime: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        D, C, lam = self.D, self.C, tuple(self.lam)
        object.__setattr__(self, "lam", lam)
        if len(set(lam)) != len(lam) or any(i not in D.E for i in lam):
            raise ValueError(f"λ={lam} must be an injection into E={D.E}")
        rest = tuple(i for i in D.E if i not in lam)
        lam_prime = rest if self.lam_prime is None else tuple(self.lam_prime)
        if sorted(lam_prime) != sorted(rest):
            raise ValueError(f"λ'={lam_prime} must list E minus im(λ)")
        object.__setattr__(self, "lam_prime", lam_prime)
        if C.m != D.m or C.E != D.E or C.u != D.u:
            raise ValueError("C must be open in D (same E and u)")
        if not C.is_bounded:
            raise ValueError("C must be bounded")
        if not D.as_box().contains_box(C.closure_box()):
            raise ValueError("the closure of C must lie in D")
        if self.P.in_dim != D.m:
            raise ValueError(f"P takes {self.P.in_dim} variables, D lives in R^{D.m}")
        if self.P.out_dim != D.dim - len(lam):
            raise ValueError(f"P must have dim(D) − d = {D.dim - len(lam)} components")

    @property
    def d(self) -> int:
        return len(self.lam)

    @property
    def order(self) -> Tuple[int, ...]:
        """The bijection σ onto E: λ first, then λ'."""
        return self.lam + self.lam_prime

    @property
    def center(self) -> Tuple[Fraction, ...]:
        return self.C.center()

    def radii(self) -> Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...]]:
        half = {i: self.C.factor(i).length() / 2 for i in self.D.E}
        return tuple(half[i] for i in self.lam), tuple(half[i] for i in self.lam_prime)

    def local_map(self) -> SympyMap:
        fixed = {i: self.C.factor(i).lo for i in self.D.E_complement}
        return affine_restriction(self.P, self.center, self.order, fixed)

    def with_C(self, C: RationalBoxManifold) -> "SectionProblem":
        return SectionProblem(self.P, self.D, C, self.lam, self.lam_prime)


@dataclass(frozen=True, eq=False)
class SectionCertificate:
    """IF_λ(P; C) together with the local certificate it reduces to."""

    problem: SectionProblem
    cert: IFCertificate

    def section(self, x_lam: Sequence[Union[Fraction, Interval]], precision: int) -> Box:
        """Enclose φ(x_λ) ∈ C ⊆ R^m."""
        prob = self.problem
        c = prob.center
        local_x = tuple(Interval.coerce(v) - c[i] for v, i in zip(x_lam, prob.lam))
        y = eval_implicit(self.cert, local_x, precision) if prob.lam_prime else Box(())
        coords: Dict[int, Interval] = {}
        for v, i in zip(x_lam, prob.lam):
            coords[i] = Interval.coerce(v)
        for iv, i in zip(y, prob.lam_prime):
            coords[i] = iv + c[i]
        for i in prob.D.E_complement:
            coords[i] = prob.C.factor(i)
        return Box(tuple(coords[i] for i in range(prob.D.m)))


def verify_IF_lambda(
    prob: SectionProblem, budget: Optional[Budget] = None, precision: Optional[int] = None
) -> Union[SectionCertificate, NotCertified]:
    """Verify IF_λ(P; C) = IF(P∘T_c∘Π_σ^-1; r, s)."""
    if not prob.lam_prime:
        return NotCertified("refuted", "dim(D) = d leaves no equations to solve")
    r, s = prob.radii()
    outcome = verify_IF(prob.local_map(), prob.d, r, s, budget, precision)
    if isinstance(outcome, NotCertified):
        return outcome
    return SectionCertificate(prob, outcome)


def augmented_system(prob: SectionProblem) -> SympyMap:
    """P(x) together with x_i − u_i for the fixed coordinates: a system on R^m."""
    extra = [
        prob.P.symbols[i] - sympy.Rational(prob.C.factor(i).lo.numerator, prob.C.factor(i).lo.denominator)
        for i in prob.D.E_complement
    ]
    return SympyMap(list(prob.P.exprs) + extra, prob.P.symbols)


def zero_enclosure(cert: SectionCertificate, precision: int) -> Box:
    """For d = 0: enclosure of the unique zero in C."""
    return cert.section((), precision)


def _ambient(B: RationalBoxManifold) -> RationalBoxManifold:
    """B with every factor widened by its own length on both sides."""
    return B.with_factors([Interval.open(iv.lo - iv.length(), iv.hi + iv.length()) for iv in B.U])


def shrink_certificate(
    P: SympyMap,
    B: RationalBoxManifold,
    C: RationalBoxManifold,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
) -> Tuple[RationalBoxManifold, SectionCertificate]:
    """Find A ⊆ B ∩ C containing the common zero with IF_∅(P; A) certified.

    Candidates are boxes around the zero enclosure, by decreasing width.

    Raises:
        BudgetExhausted: If no candidate certifies.
        ValueError: If IF_∅(P; B) does not hold, B and C are disjoint, or
            the zero of B is not inside C.
    """
    budget = budget or Budget(DEFAULT_BUDGET, name="shrink_certificate")
    precision = DEFAULT_PRECISION if precision is None else precision
    if not B.is_bounded:
        raise ValueError("B must be bounded")
    D = _ambient(B)
    outer = verify_IF_lambda(SectionProblem(P, D, B, ()), budget.child("shrink-outer"), precision)
    if isinstance(outer, NotCertified):
        raise ValueError(f"IF_∅(P; B) does not hold: {outer.reason}")
    both = B.as_box().intersect(C.as_box())
    if both is None:
        raise ValueError("B and C are disjoint")
    zero = zero_enclosure(outer, precision + 10)
    if not C.as_box().contains_box(zero):
        raise ValueError(f"the zero {zero} of B is not inside C")
    for k in range(0, 64):
        budget.acquire()
        factors = []
        for i in D.E:
            iv = both[i]
            z = zero[i]
            radius = iv.length() / (1 << k) / 2
            lo = max(iv.lo, z.lo - radius)
            hi = min(iv.hi, z.hi + radius)
            if not (lo < z.lo and hi > z.hi):
                factors = None
                break
            factors.append(Interval.open(lo, hi))
        if factors is None:
            continue
        A = B.with_factors(factors)
        outcome = verify_IF_lambda(SectionProblem(P, D, A, ()), budget.child(f"shrink-{k}"), precision)
        if isinstance(outcome, SectionCertificate):
            return A, outcome
    raise BudgetExhausted(budget.name, budget.max_steps)


# -- serialization -----------------------------------------------------------

def certificate_to_json(cert: IFCertificate) -> dict:
    node = cert.node
    doc = {
        "m": cert.m,
        "r": [frac_to_str(v) for v in cert.r],
        "s": [frac_to_str(v) for v in cert.s],
    }
    if isinstance(node, BaseNode):
        doc["node"] = {
            "kind": "base",
            "sign": node.sign,
            "margin": frac_to_str(node.margin),
            "row": node.row,
            "y_pos": node.y_pos,
            "radii": [frac_to_str(v) for v in node.radii],
        }
    else:
        doc["node"] = {
            "kind": "inductive",
            "i": node.i,
            "j": node.j,
            "enlarged": [frac_to_str(v) for v in node.enlarged],
            "pivot": certificate_to_json(node.pivot),
            "reduced": certificate_to_json(node.reduced),
        }
    return doc


def certificate_from_json(doc: dict, f: EnclosableMap) -> IFCertificate:
    """Rebuild a certificate for the map `f` (reduced maps are recreated)."""
    m = int(doc["m"])
    r = tuple(parse_frac(v) for v in doc["r"])
    s = tuple(parse_frac(v) for v in doc["s"])
    nd = doc["node"]
    if nd["kind"] == "base":
        node = BaseNode(
            int(nd["sign"]), parse_frac(nd["margin"]), int(nd["row"]), int(nd["y_pos"]),
            tuple(parse_frac(v) for v in nd["radii"]),
        )
        return IFCertificate(f, m, r, s, node)
    i, j = int(nd["i"]), int(nd["j"])
    pivot = certificate_from_json(nd["pivot"], f)
    reduced = certificate_from_json(nd["reduced"], ImplicitReducedMap(f, m, i, j, s[j]))
    enlarged = tuple(parse_frac(v) for v in nd["enlarged"])
    return IFCertificate(f, m, r, s, InductiveNode(i, j, pivot, reduced, enlarged))


def _margin_holds(f, node: BaseNode, radii, precision: int, budget: Budget) -> bool:
    """Re-check the recorded margin itself: σ-conditions exceed node.margin."""
    full = _box(radii)
    s_y = radii[node.y_pos]
    a = node.margin
    fns = [
        (lambda c, p: f.partial(node.row, node.y_pos, c, p) * node.sign - a, full, None),
        (lambda c, p: -(f.component(node.row, c, p) * node.sign) - a, full.replace(node.y_pos, Interval.point(-s_y)), node.y_pos),
        (lambda c, p: f.component(node.row, c, p) * node.sign - a, full.replace(node.y_pos, Interval.point(s_y)), node.y_pos),
    ]
    for fn, box, frozen in fns:
        if _subdivision_check(fn, box, frozen, precision, budget) == "refuted":
            return False
    return True


def replay_certificate(cert: IFCertificate, budget: Optional[Budget] = None, precision: Optional[int] = None) -> bool:
    """Re-verify every recorded sign, margin and pivot against cert.f.

    Returns False on a certified violation; BudgetExhausted propagates when
    the replay cannot decide.
    """
    budget = budget or Budget(DEFAULT_BUDGET, name="replay")
    precision = DEFAULT_PRECISION if precision is None else precision
    node = cert.node
    if isinstance(node, BaseNode):
        return _margin_holds(cert.f, node, node.radii, precision, budget)
    if not replay_certificate(node.pivot, budget, precision):
        return False
    pivot = node.pivot.node
    if not isinstance(_verify_base(cert.f, pivot.row, pivot.y_pos, node.enlarged, precision, budget), BaseNode):
        return False
    return replay_certificate(node.reduced, budget, precision)
