"""Audit trail of the genericity construction: realized zeros per round and perturbation steps."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from budget import DEFAULT_BUDGET, DEFAULT_PRECISION, Budget
from family import FamilyEvaluator
from ifcert import SectionCertificate, SectionProblem, verify_IF_lambda
from interval import Box, Interval, RationalBoxManifold
from polyalg import MultiPoly
from utils import box_from_json, box_to_json, frac_to_str, manifold_from_json, manifold_to_json, parse_frac

from .names import SPolyName, check_box_distinctness, enumerate_nonzero_polys, eval_name
from .zeros import RealizedZero, p_jacobian_det

logger = logging.getLogger("quasigen.genericity.ledger")


@dataclass(frozen=True)
class LedgerZero:
    """A realized zero as recorded in round `round`; `parent` links to the previous round."""

    id: str
    round: int
    name_index: int
    name: SPolyName
    zero: Box
    B_prime: RationalBoxManifold
    B_second: Tuple[Interval, ...]
    lam_prime: Tuple[int, ...]
    lam: Tuple[int, ...]
    inequations: Tuple[int, ...]
    parent: Optional[str] = None
    certificate: Optional[dict] = None

    @classmethod
    def from_realized(cls, z: RealizedZero, id: str, round: int, parent: Optional[str] = None) -> "LedgerZero":
        doc = z.to_json()
        return cls(
            id, round, z.name_index, z.name, z.zero, z.B_prime, tuple(z.B_second), z.lam_prime, z.lam,
            z.inequations, parent, doc["certificate"],
        )

    @property
    def box(self) -> Box:
        return Box(tuple(self.B_prime.closure_box()) + tuple(self.B_second))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "round": self.round,
            "name_index": self.name_index,
            "name": self.name.to_json(),
            "zero": box_to_json(self.zero),
            "B_prime": manifold_to_json(self.B_prime),
            "B_second": box_to_json(self.B_second),
            "lam_prime": list(self.lam_prime),
            "lam": list(self.lam),
            "inequations": list(self.inequations),
            "parent": self.parent,
            "certificate": self.certificate,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LedgerZero":
        return cls(
            str(doc["id"]),
            int(doc["round"]),
            int(doc.get("name_index", 0)),
            SPolyName.from_json(doc["name"]),
            box_from_json(doc["zero"]),
            manifold_from_json(doc["B_prime"]),
            tuple(box_from_json(doc.get("B_second", []))),
            tuple(int(i) for i in doc["lam_prime"]),
            tuple(int(i) for i in doc["lam"]),
            tuple(int(j) for j in doc.get("inequations", [])),
            doc.get("parent"),
            doc.get("certificate"),
        )


@dataclass(frozen=True)
class PerturbationRecord:
    """S_σ += polys[σ] in round `round`, chosen for zero `zero_id` with coefficients b."""

    round: int
    zero_id: str
    polys: Dict[str, MultiPoly]
    b: Tuple[Fraction, ...]
    step_bound: Fraction

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "zero_id": self.zero_id,
            "polys": {s: p.to_json() for s, p in sorted(self.polys.items())},
            "b": [frac_to_str(v) for v in self.b],
            "step_bound": frac_to_str(self.step_bound),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PerturbationRecord":
        return cls(
            int(doc["round"]),
            str(doc["zero_id"]),
            {s: MultiPoly.from_json(p) for s, p in doc.get("polys", {}).items()},
            tuple(parse_frac(v) for v in doc.get("b", [])),
            parse_frac(doc["step_bound"]),
        )


@dataclass
class ZeroLedger:
    rounds: List[List[LedgerZero]] = field(default_factory=list)
    perturbations: List[PerturbationRecord] = field(default_factory=list)

    def add_round(self, entries: Sequence[LedgerZero]) -> None:
        self.rounds.append(list(entries))

    def last_round(self) -> List[LedgerZero]:
        return self.rounds[-1] if self.rounds else []

    def entry(self, id: str) -> LedgerZero:
        for entries in reversed(self.rounds):
            for e in entries:
                if e.id == id:
                    return e
        raise KeyError(id)

    def chain(self, id: str) -> List[LedgerZero]:
        """The entry and its ancestors, newest first."""
        out = [self.entry(id)]
        while out[-1].parent is not None:
            out.append(self.entry(out[-1].parent))
        return out

    def to_json(self) -> dict:
        return {
            "rounds": [[e.to_json() for e in entries] for entries in self.rounds],
            "perturbations": [p.to_json() for p in self.perturbations],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ZeroLedger":
        return cls(
            [[LedgerZero.from_json(e) for e in entries] for entries in doc.get("rounds", [])],
            [PerturbationRecord.from_json(p) for p in doc.get("perturbations", [])],
        )


@dataclass
class LedgerReport:
    up_to: int
    checked: int = 0
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "up_to": self.up_to,
            "checked": self.checked,
            "passed": self.passed,
            "failures": [{"id": i, "reason": r} for i, r in self.failures],
        }


def _check_entry(entry: LedgerZero, fam: FamilyEvaluator, qs: Sequence[MultiPoly], budget: Budget,
                 precision: int) -> Optional[str]:
    name = entry.name
    try:
        outcome = verify_IF_lambda(SectionProblem(name.P(fam), name.D, entry.B_prime, ()), budget, precision)
    except ValueError as e:
        return f"invalid box: {e}"
    if not isinstance(outcome, SectionCertificate):
        return f"IF_∅ not certified on B' ({outcome.reason})"
    Bp = entry.B_prime.closure_box()
    if not check_box_distinctness(Bp, name):
        return "distinctness condition fails on B'"
    _, F = eval_name(name, fam, Bp, precision)
    box = Box(tuple(Bp) + tuple(F)[name.m:])
    if not p_jacobian_det(name, entry.lam_prime, box).excludes_zero():
        return f"∂p/∂(x,y)_{list(entry.lam_prime)} is not certified nonsingular"
    if name.n == 0:
        return None
    for j, q in enumerate(qs, start=1):
        if j > entry.round:
            break
        if not q.enclose(box.project(entry.lam)).excludes_zero():
            return f"inequation {j} ({q}) not certified"
    return None


def _check_chain(ledger: ZeroLedger, entry: LedgerZero) -> List[str]:
    problems = []
    try:
        chain = ledger.chain(entry.id)
    except KeyError as e:
        return [f"missing ancestor {e}"]
    for child, parent in zip(chain, chain[1:]):
        if not parent.B_prime.closure_box().contains_box(child.B_prime.closure_box()):
            problems.append(f"box of {child.id} is not inside the box of {parent.id}")
        if child.lam_prime != parent.lam_prime:
            problems.append(f"λ' changed between {parent.id} and {child.id}")
        if not set(parent.inequations) <= set(child.inequations):
            problems.append(f"{child.id} lost inequations of {parent.id}")
    return problems


def check_ledger(
    ledger: ZeroLedger,
    fam: FamilyEvaluator,
    up_to: int,
    budget: Optional[Budget] = None,
    precision: Optional[int] = None,
) -> LedgerReport:
    """Re-certify the surviving zeros of the last round against `fam`.

    Checks IF_∅ on B', distinctness, the λ' rank condition and the
    inequations q_{n,j}∘Π_λ ≠ 0 for j ≤ min(up_to, round). Association
    chains must nest boxes, keep λ' and never lose inequations.
    """
    report = LedgerReport(up_to)
    if up_to <= 0:
        return report
    budget = budget or Budget(DEFAULT_BUDGET, name="check_ledger")
    precision = DEFAULT_PRECISION if precision is None else precision
    polys: Dict[int, List[MultiPoly]] = {}
    for entry in ledger.last_round():
        report.checked += 1
        n = entry.name.n
        if n not in polys:
            polys[n] = enumerate_nonzero_polys(n, up_to)
        failure = _check_entry(entry, fam, polys[n], budget.child(f"check {entry.id}"), precision)
        if failure is not None:
            report.failures.append((entry.id, failure))
        report.failures.extend((entry.id, p) for p in _check_chain(ledger, entry))
    if report.failures:
        logger.warning("check_ledger: %d failures among %d zeros", len(report.failures), report.checked)
    else:
        logger.info("check_ledger: %d zeros pass up to inequation %d", report.checked, up_to)
    return report
