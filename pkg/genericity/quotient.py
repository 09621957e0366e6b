"""Equivalence relations on the derivative slots of a name and the quotient maps they induce."""

import itertools
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import sympy

from expressions import variables
from family import FamilyEvaluator
from ideals import substitute_ideal
from interval import Box, RationalBoxManifold
from maps import SympyMap, interval_det, submatrix
from polyalg import MultiPoly

from .names import NameSpecError, SPolyName

logger = logging.getLogger("quasigen.genericity.quotient")

Partition = Tuple[Tuple[int, ...], ...]


def _canonical(blocks) -> Partition:
    return tuple(sorted(tuple(sorted(b)) for b in blocks if b))


@dataclass(frozen=True)
class EquivRelation:
    """A partition of the slots 0..n-1; classes sorted by their least member."""

    n: int
    classes: Partition

    def __post_init__(self):
        classes = _canonical(self.classes)
        if sorted(i for c in classes for i in c) != list(range(self.n)):
            raise ValueError(f"{classes} is not a partition of range({self.n})")
        object.__setattr__(self, "classes", classes)

    @classmethod
    def discrete(cls, n: int) -> "EquivRelation":
        return cls(n, tuple((j,) for j in range(n)))

    def class_of(self, j: int) -> int:
        for k, c in enumerate(self.classes):
            if j in c:
                return k
        raise KeyError(j)

    @property
    def is_discrete(self) -> bool:
        return all(len(c) == 1 for c in self.classes)

    def refines(self, other: "EquivRelation") -> bool:
        return all(any(set(c) <= set(o) for o in other.classes) for c in self.classes)

    def to_json(self) -> List[List[int]]:
        return [list(c) for c in self.classes]

    def __str__(self) -> str:
        return "{" + ", ".join("{" + ",".join(str(j) for j in c) + "}" for c in self.classes) + "}"


def _set_partitions(items: Sequence[int]) -> Iterator[List[List[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def slot_relation(name: SPolyName) -> EquivRelation:
    """≈_(σ,α): slots with the same member and multi-index."""
    groups: Dict[Tuple[str, tuple], List[int]] = {}
    for j in range(name.n):
        groups.setdefault((name.sigma[j], name.alpha[j]), []).append(j)
    return EquivRelation(name.n, tuple(tuple(g) for g in groups.values()))


def induced_coordinates(name: SPolyName, relation: EquivRelation) -> Partition:
    """∼ on 0..m-1: i1 ∼ i2 when both sit at the same position of related slots."""
    groups: Dict[tuple, List[int]] = {}
    for i in range(name.m):
        g = name.gamma(i)
        key = ("free", i) if g is None else ("slot", relation.class_of(g[0]), g[1])
        groups.setdefault(key, []).append(i)
    return _canonical(groups.values())


def admissible_relations(name: SPolyName, lam: Sequence[int]) -> List[EquivRelation]:
    """Relations refining ≈_(σ,α) whose induced ∼ keeps the λ coordinates apart.

    Coarsest first (fewest classes), ties broken by the sorted partition.
    """
    base = slot_relation(name)
    out = []
    for parts in itertools.product(*(list(_set_partitions(list(c))) for c in base.classes)):
        relation = EquivRelation(name.n, tuple(tuple(b) for part in parts for b in part))
        coords = induced_coordinates(name, relation)
        owners = [next(k for k, c in enumerate(coords) if i in c) for i in lam]
        if len(set(owners)) == len(owners):
            out.append(relation)
    out.sort(key=lambda r: (len(r.classes), r.classes))
    return out


@dataclass(frozen=True, eq=False)
class QuotientMaps:
    """Data of the quotient of a name by a relation on its slots.

    Class c of ∼ has representative mu[c]: its λ coordinate when it has one,
    else a fixed coordinate of D when it has one, else its least member. Φ' copies x̄_c to every coordinate of class c and
    Φ'' copies ȳ_k to every slot of class k; Φ = Φ'×Φ'' as polynomials.
    """

    name: SPolyName
    lam: Tuple[int, ...]
    relation: EquivRelation
    coord_classes: Partition
    mu: Tuple[int, ...]
    nu: Tuple[int, ...]
    coord_index: Tuple[int, ...]
    slot_index: Tuple[int, ...]
    E_bar: Tuple[int, ...]
    u_bar: Tuple[Fraction, ...]
    lam_bar: Tuple[int, ...]
    lam_bar_prime: Tuple[int, ...]
    D_bar: RationalBoxManifold
    Phi: Tuple[MultiPoly, ...]
    p_tilde: Tuple[MultiPoly, ...]
    delta: Optional[Tuple[int, ...]] = None

    @property
    def m_bar(self) -> int:
        return len(self.coord_classes)

    @property
    def n_bar(self) -> int:
        return len(self.relation.classes)

    @property
    def d(self) -> int:
        return len(self.lam)

    @property
    def sigma_bar(self) -> Tuple[str, ...]:
        return tuple(self.name.sigma[j] for j in self.nu)

    @property
    def alpha_bar(self) -> Tuple[tuple, ...]:
        return tuple(self.name.alpha[j] for j in self.nu)

    @property
    def xi_bar(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(self.coord_index[i] for i in self.name.xi[j]) for j in self.nu)

    @property
    def p_bar(self) -> Tuple[MultiPoly, ...]:
        if self.delta is None:
            raise ValueError("rows of p̃ have not been selected")
        return tuple(self.p_tilde[k] for k in self.delta)

    def project(self, x: Box) -> Box:
        """Π': the representative coordinates of a box in R^m."""
        return Box(tuple(x[i] for i in self.mu))

    def lift(self, x_bar: Box) -> Box:
        """Φ': duplicate reduced coordinates back into R^m."""
        return Box(tuple(x_bar[self.coord_index[i]] for i in range(self.name.m)))

    def C_bar(self, C: RationalBoxManifold) -> RationalBoxManifold:
        return self.D_bar.with_factors([C.factor(self.mu[c]) for c in self.E_bar])

    def f_bar_exprs(self, fam: FamilyEvaluator) -> Tuple[sympy.Expr, ...]:
        xb = variables(self.m_bar)
        out = []
        for s, a, coords in zip(self.sigma_bar, self.alpha_bar, self.xi_bar):
            member = fam.spec.member(s)
            out.append(fam.derivative_expr(s, a).xreplace({member.symbols[k]: xb[c] for k, c in enumerate(coords)}))
        return tuple(out)

    def P_tilde(self, fam: FamilyEvaluator) -> SympyMap:
        """P̃ = p̃∘F̄ on R^m̄."""
        xb = variables(self.m_bar)
        F = tuple(xb) + self.f_bar_exprs(fam)
        return SympyMap([q.to_sympy(F) for q in self.p_tilde], xb)

    def reduced_name(self) -> SPolyName:
        return SPolyName(
            self.m_bar, self.n_bar, self.d, self.p_bar, self.sigma_bar, self.alpha_bar, self.xi_bar, self.D_bar
        )

    def to_json(self) -> dict:
        return {
            "relation": self.relation.to_json(),
            "coord_classes": [list(c) for c in self.coord_classes],
            "mu": list(self.mu),
            "nu": list(self.nu),
            "E_bar": list(self.E_bar),
            "lam_bar": list(self.lam_bar),
            "lam_bar_prime": list(self.lam_bar_prime),
            "delta": None if self.delta is None else list(self.delta),
        }


def quotient_maps(name: SPolyName, lam: Sequence[int], relation: EquivRelation) -> QuotientMaps:
    """Everything of the quotient except the row selection δ.

    Raises:
        NameSpecError: If the relation does not refine ≈_(σ,α) or merges λ coordinates.
    """
    lam = tuple(lam)
    if relation.n != name.n or not relation.refines(slot_relation(name)):
        raise NameSpecError(f"{relation} does not refine the slot relation of the name")
    coords = induced_coordinates(name, relation)
    lam_set = set(lam)
    mu = []
    for c in coords:
        in_lam = [i for i in c if i in lam_set]
        if len(in_lam) > 1:
            raise NameSpecError(f"λ coordinates {in_lam} fall into one class")
        fixed = [i for i in c if i not in name.D.E]
        mu.append(in_lam[0] if in_lam else fixed[0] if fixed else c[0])
    coord_index = [0] * name.m
    for k, c in enumerate(coords):
        for i in c:
            coord_index[i] = k
    nu = tuple(c[0] for c in relation.classes)
    slot_index = tuple(relation.class_of(j) for j in range(name.n))
    D = name.D
    E_bar = tuple(k for k, i in enumerate(mu) if i in D.E)
    u_bar = tuple(D.factor(mu[k]).lo for k in range(len(coords)) if k not in E_bar)
    D_bar = RationalBoxManifold(len(coords), E_bar, tuple(D.factor(mu[k]) for k in E_bar), u_bar)
    lam_bar = tuple(coord_index[i] for i in lam)
    lam_bar_prime = tuple(k for k in E_bar if k not in lam_bar)
    m_bar, n_bar = len(coords), len(relation.classes)
    nv = m_bar + n_bar
    Phi = tuple(MultiPoly.variable(nv, coord_index[i]) for i in range(name.m)) + tuple(
        MultiPoly.variable(nv, m_bar + slot_index[j]) for j in range(name.n)
    )
    p_tilde = tuple(substitute_ideal(q, Phi) for q in name.p)
    return QuotientMaps(
        name, lam, relation, coords, tuple(mu), nu, tuple(coord_index), slot_index,
        E_bar, u_bar, lam_bar, lam_bar_prime, D_bar, Phi, p_tilde,
    )


def select_rows(maps: QuotientMaps, fam: FamilyEvaluator, base: Box, precision: int) -> Optional[Tuple[int, ...]]:
    """The first increasing δ with det ∂(Π_δ∘P̃)/∂x̄_λ̄' ≠ 0 on the base box."""
    size = len(maps.E_bar) - maps.d
    if size < 0:
        return None
    if size == 0:
        return ()
    P = maps.P_tilde(fam)
    J = P.jacobian(base, precision)
    for rows in itertools.combinations(range(len(maps.p_tilde)), size):
        if interval_det(submatrix(J, rows, maps.lam_bar_prime)).excludes_zero():
            return rows
    return None


def quotient_name(
    name: SPolyName,
    lam: Sequence[int],
    relation: EquivRelation,
    base: Box,
    fam: FamilyEvaluator,
    precision: int,
) -> Tuple[QuotientMaps, SPolyName]:
    """Quotient maps with rows selected at φ̄(a) ∈ `base`, and the reduced name.

    Raises:
        ValueError: If no nonsingular row selection is certified on `base`.
    """
    maps = quotient_maps(name, lam, relation)
    delta = select_rows(maps, fam, base, precision)
    if delta is None:
        raise ValueError(f"no nonsingular row selection for {relation} at {base}")
    maps = replace(maps, delta=delta)
    logger.debug("quotient: %s gives m̄=%d, n̄=%d, δ=%s", relation, maps.m_bar, maps.n_bar, delta)
    return maps, maps.reduced_name()
