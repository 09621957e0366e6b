"""Names of S-polynomial maps, zero enumeration, membership decisions and the generic-family construction."""

from .decision import (
    MembershipIdeal,
    MembershipProblem,
    decide_ideal_membership,
    decide_precision,
    membership_ideal,
    sample_query,
)
from .ledger import LedgerReport, LedgerZero, PerturbationRecord, ZeroLedger, check_ledger
from .names import (
    NameSpecError,
    SPolyName,
    check_box_distinctness,
    enumerate_names,
    enumerate_nonzero_polys,
    eval_name,
    witness_distinctness,
)
from .pipeline import make_generic
from .quotient import EquivRelation, QuotientMaps, admissible_relations, quotient_name
from .zeros import RealizedZero, find_nonsingular_zeros, reverify_zero

__all__ = [
    "EquivRelation",
    "LedgerReport",
    "LedgerZero",
    "MembershipIdeal",
    "MembershipProblem",
    "NameSpecError",
    "PerturbationRecord",
    "QuotientMaps",
    "RealizedZero",
    "SPolyName",
    "ZeroLedger",
    "admissible_relations",
    "check_box_distinctness",
    "check_ledger",
    "decide_ideal_membership",
    "decide_precision",
    "enumerate_names",
    "enumerate_nonzero_polys",
    "eval_name",
    "find_nonsingular_zeros",
    "make_generic",
    "membership_ideal",
    "quotient_name",
    "reverify_zero",
    "sample_query",
    "witness_distinctness",
]
