"""
Enclosable maps R^k -> R^l with first and second derivative enclosures.

`SympyMap` covers everything written in the builtin expression language
(S-polynomial maps p∘F become plain sympy expressions once the family
members are substituted). `ImplicitReducedMap` is f'∘H from the inductive
step of the IF statement: one equation is solved for one unknown and
substituted into the rest.
"""
import logging
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple

import sympy

from expressions import enclose_expr, to_sympy_rational, validate, variables
from interval import Box, Interval

logger = logging.getLogger("quasigen.maps")

Matrix = Tuple[Tuple[Interval, ...], ...]


class EnclosableMap:
    """Interface: enclosures of values, Jacobian and Hessians on boxes."""

    in_dim: int
    out_dim: int

    def enclose(self, box: Box, precision: int) -> Tuple[Interval, ...]:
        raise NotImplementedError

    def jacobian(self, box: Box, precision: int) -> Matrix:
        """J[k][a] ⊇ ∂ f_k / ∂ v_a on box."""
        raise NotImplementedError

    def hessian(self, box: Box, precision: int) -> Tuple[Matrix, ...]:
        """H[k][a][b] ⊇ ∂² f_k / ∂ v_a ∂ v_b on box."""
        raise NotImplementedError

    def component(self, k: int, box: Box, precision: int) -> Interval:
        return self.enclose(box, precision)[k]

    def partial(self, k: int, a: int, box: Box, precision: int) -> Interval:
        return self.jacobian(box, precision)[k][a]

    def _check(self, box: Box) -> Box:
        if box.dim != self.in_dim:
            raise ValueError(f"box of dimension {box.dim} for a map on R^{self.in_dim}")
        return box.closure()


class SympyMap(EnclosableMap):
    """A map given by sympy expressions in an ordered tuple of symbols."""

    def __init__(self, exprs: Sequence[sympy.Expr], symbols: Sequence[sympy.Symbol], label: str = ""):
        self.exprs = tuple(sympy.sympify(e) for e in exprs)
        self.symbols = tuple(symbols)
        if not self.exprs:
            raise ValueError("a map needs at least one component")
        for e in self.exprs:
            validate(e, self.symbols)
        self.in_dim = len(self.symbols)
        self.out_dim = len(self.exprs)
        self.label = label
        self._jac: Optional[Tuple[Tuple[sympy.Expr, ...], ...]] = None
        self._hess: Optional[Tuple[Tuple[Tuple[sympy.Expr, ...], ...], ...]] = None

    def __repr__(self) -> str:
        return f"SympyMap({list(self.exprs)}, {list(self.symbols)})"

    @property
    def jacobian_exprs(self):
        if self._jac is None:
            self._jac = tuple(tuple(sympy.diff(e, s) for s in self.symbols) for e in self.exprs)
        return self._jac

    @property
    def hessian_exprs(self):
        if self._hess is None:
            self._hess = tuple(
                tuple(tuple(sympy.diff(de, s) for s in self.symbols) for de in row)
                for row in self.jacobian_exprs
            )
        return self._hess

    def _eval(self, expr: sympy.Expr, box: Box, precision: int) -> Interval:
        return enclose_expr(expr, self.symbols, box, precision)

    def enclose(self, box: Box, precision: int) -> Tuple[Interval, ...]:
        box = self._check(box)
        return tuple(self._eval(e, box, precision) for e in self.exprs)

    def component(self, k: int, box: Box, precision: int) -> Interval:
        return self._eval(self.exprs[k], self._check(box), precision)

    def partial(self, k: int, a: int, box: Box, precision: int) -> Interval:
        return self._eval(self.jacobian_exprs[k][a], self._check(box), precision)

    def jacobian(self, box: Box, precision: int) -> Matrix:
        box = self._check(box)
        return tuple(tuple(self._eval(e, box, precision) for e in row) for row in self.jacobian_exprs)

    def hessian(self, box: Box, precision: int) -> Tuple[Matrix, ...]:
        box = self._check(box)
        return tuple(
            tuple(tuple(self._eval(e, box, precision) for e in row) for row in block)
            for block in self.hessian_exprs
        )

    def substitute(self, mapping: Mapping[sympy.Symbol, sympy.Expr], symbols: Sequence[sympy.Symbol]) -> "SympyMap":
        """The composition with a substitution, as a map in new `symbols`."""
        return SympyMap([e.xreplace(dict(mapping)) for e in self.exprs], symbols, self.label)

    def add(self, extra: Sequence[sympy.Expr]) -> "SympyMap":
        """Componentwise sum with expressions in the same symbols."""
        if len(extra) != self.out_dim:
            raise ValueError("perturbation must have one expression per component")
        return SympyMap([sympy.expand(e + g) for e, g in zip(self.exprs, extra)], self.symbols, self.label)

    def select(self, rows: Sequence[int]) -> "SympyMap":
        return SympyMap([self.exprs[k] for k in rows], self.symbols, self.label)


def affine_restriction(
    P: SympyMap,
    center: Sequence[Fraction],
    free_order: Sequence[int],
    fixed: Mapping[int, Fraction],
) -> SympyMap:
    """P∘T_c∘Π^-1 as a map in local coordinates t1..tk.

    Coordinate free_order[k] of the ambient point becomes center[free_order[k]] + t_{k+1};
    coordinates in `fixed` are set to their values.
    """
    local = tuple(sympy.Symbol(f"t{k + 1}", real=True) for k in range(len(free_order)))
    mapping: Dict[sympy.Symbol, sympy.Expr] = {}
    for k, coord in enumerate(free_order):
        mapping[P.symbols[coord]] = to_sympy_rational(center[coord]) + local[k]
    for coord, value in fixed.items():
        mapping[P.symbols[coord]] = to_sympy_rational(value)
    missing = set(range(P.in_dim)) - set(free_order) - set(fixed)
    if missing:
        raise ValueError(f"coordinates {sorted(missing)} are neither free nor fixed")
    return P.substitute(mapping, local)


def _insert(box: Box, position: int, iv: Interval) -> Box:
    ivs = list(box.intervals)
    ivs.insert(position, iv)
    return Box(tuple(ivs))


class ImplicitReducedMap(EnclosableMap):
    """f'∘H where f_i(x, y) = 0 is solved for y_j = h(x, y without y_j).

    `f` maps R^(m+n) -> R^n with the y variables last. The reduced map has
    variables (x, y without y_j) and components f without f_i. `s_j` bounds
    the solved unknown: h takes values in (-s_j, s_j) wherever the base
    certificate for f_i holds.
    """

    def __init__(self, f: EnclosableMap, m: int, i: int, j: int, s_j: Fraction, search_depth: int = 24):
        self.f = f
        self.m = m
        self.i = i
        self.j = j
        self.s_j = Fraction(s_j)
        self.search_depth = search_depth
        self.in_dim = f.in_dim - 1
        self.out_dim = f.out_dim - 1
        if self.out_dim < 1:
            raise ValueError("nothing left to reduce")
        self.y_pos = m + j
        self.rows = tuple(k for k in range(f.out_dim) if k != i)

    def _full_box(self, box: Box, y: Interval) -> Box:
        return _insert(box, self.y_pos, y)

    def solve(self, box: Box, precision: int) -> Interval:
        """Enclose h(box) by discarding y-slabs where f_i excludes 0."""
        box = self._check(box)
        pieces = [Interval(-self.s_j, self.s_j)]
        depth = min(self.search_depth, 6 + precision)
        for _ in range(depth):
            refined = []
            for piece in pieces:
                for half in piece.split():
                    if self.f.component(self.i, self._full_box(box, half), precision).contains(0):
                        refined.append(half)
            if not refined:
                raise ValueError(f"no solution of component {self.i} over {box}")
            if len(refined) > 64:
                pieces = [refined[0].hull(refined[-1])]
                break
            pieces = refined
        return pieces[0].hull(pieces[-1])

    def _pieces(self, box: Box, precision: int):
        y = self.solve(box, precision)
        full = self._full_box(box, y)
        J = self.f.jacobian(full, precision)
        Fy = J[self.i][self.y_pos]
        if Fy.contains(0):
            raise ValueError(f"∂f_{self.i}/∂y_{self.j} is not bounded away from 0 on {full}")
        others = [a for a in range(self.f.in_dim) if a != self.y_pos]
        h_grad = tuple(-(J[self.i][a] / Fy) for a in others)
        return y, full, J, Fy, others, h_grad

    def enclose(self, box: Box, precision: int) -> Tuple[Interval, ...]:
        y = self.solve(box, precision)
        values = self.f.enclose(self._full_box(self._check(box), y), precision)
        return tuple(values[k] for k in self.rows)

    def component(self, k: int, box: Box, precision: int) -> Interval:
        y = self.solve(box, precision)
        return self.f.component(self.rows[k], self._full_box(self._check(box), y), precision)

    def implicit_gradient(self, box: Box, precision: int) -> Tuple[Interval, ...]:
        return self._pieces(box, precision)[5]

    def jacobian(self, box: Box, precision: int) -> Matrix:
        y, full, J, Fy, others, h = self._pieces(box, precision)
        yp = self.y_pos
        return tuple(
            tuple(J[k][a] + J[k][yp] * h[ai] for ai, a in enumerate(others))
            for k in self.rows
        )

    def hessian(self, box: Box, precision: int) -> Tuple[Matrix, ...]:
        y, full, J, Fy, others, h = self._pieces(box, precision)
        H = self.f.hessian(full, precision)
        yp, i = self.y_pos, self.i
        Hi = H[i]
        # second derivatives of h
        hh = [
            [
                -(Hi[a][b] + Hi[a][yp] * h[bi] + Hi[yp][b] * h[ai] + Hi[yp][yp] * h[ai] * h[bi]) / Fy
                for bi, b in enumerate(others)
            ]
            for ai, a in enumerate(others)
        ]
        out = []
        for k in self.rows:
            Hk, Jk = H[k], J[k]
            out.append(
                tuple(
                    tuple(
                        Hk[a][b]
                        + Hk[a][yp] * h[bi]
                        + (Hk[yp][b] + Hk[yp][yp] * h[bi]) * h[ai]
                        + Jk[yp] * hh[ai][bi]
                        for bi, b in enumerate(others)
                    )
                    for ai, a in enumerate(others)
                )
            )
        return tuple(out)


def interval_det(matrix: Sequence[Sequence[Interval]]) -> Interval:
    """Determinant enclosure by Laplace expansion along the first row."""
    rows = [tuple(row) for row in matrix]
    k = len(rows)
    if any(len(row) != k for row in rows):
        raise ValueError("determinant of a non-square matrix")
    if k == 0:
        return Interval.point(1)
    if k == 1:
        return rows[0][0]
    total = Interval.point(0)
    for col in range(k):
        minor = [row[:col] + row[col + 1:] for row in rows[1:]]
        term = rows[0][col] * interval_det(minor)
        total = total + term if col % 2 == 0 else total - term
    return total


def submatrix(matrix: Matrix, rows: Sequence[int], cols: Sequence[int]) -> Matrix:
    return tuple(tuple(matrix[r][c] for c in cols) for r in rows)


def polynomial_map(polys: Sequence[sympy.Expr], n_vars: int) -> SympyMap:
    """Convenience constructor over x1..x{n_vars}."""
    return SympyMap(polys, variables(n_vars))
