"""
Computably holomorphic evaluators and Cauchy-contour derivatives.

Members of a family are holomorphic on C(ρ, R) = {z : dist([-ρ, ρ], z) < R}
per coordinate. `HoloEvaluator` encloses them on complex rectangles inside
the rectangle |Re z| <= ρ + R/2, |Im z| <= R/2 (a subset of C(ρ, R)), and
recovers derivatives from Cauchy's integral formula over rectangular
contours with a certified quadrature error.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import sympy

from expressions import GUARD_BITS, compile_complex, pi_interval, to_sympy_rational
from family import DerivativeIndex, FamilyEvaluator, FamilySpec, alpha_factorial
from interval import Box, ComplexRect, Interval

logger = logging.getLogger("quasigen.holo")

DEFAULT_SHRINK = Fraction(1, 2)


class HoloError(ValueError):
    """Raised for contours or cells outside the holomorphy domain."""
    pass


def ceil_log2(q: Fraction) -> int:
    """Smallest integer k with 2**k >= q (q > 0), computed exactly."""
    q = Fraction(q)
    if q <= 0:
        raise ValueError("ceil_log2 needs a positive argument")
    k = q.numerator.bit_length() - q.denominator.bit_length()

    def pow2(e: int) -> Fraction:
        return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)

    while pow2(k) < q:
        k += 1
    while pow2(k - 1) >= q:
        k -= 1
    return k


class HoloEvaluator(FamilyEvaluator):
    """FamilyEvaluator that also encloses members on complex rectangles."""

    def domain_rects(self, sigma: str) -> Tuple[ComplexRect, ...]:
        member = self.spec.member(sigma)
        return tuple(
            ComplexRect(Interval(-(r + R / 2), r + R / 2), Interval(-R / 2, R / 2))
            for r, R in zip(member.rho, member.R)
        )

    def _check_cells(self, sigma: str, cells: Sequence[ComplexRect]) -> None:
        domain = self.domain_rects(sigma)
        if len(cells) != len(domain):
            raise HoloError(f"{len(cells)} complex coordinates for {sigma} of arity {len(domain)}")
        for cell, dom in zip(cells, domain):
            if not (dom.re.contains_interval(cell.re) and dom.im.contains_interval(cell.im)):
                raise HoloError(f"cell {cell} leaves the holomorphy domain {dom} of {sigma}")

    def enclose_complex(
        self, sigma: str, alpha: Sequence[int], cells: Sequence[ComplexRect], precision: int
    ) -> ComplexRect:
        """Enclose ∂^α S_σ on a product of complex rectangles."""
        self._check_cells(sigma, cells)
        expr = self.derivative_expr(sigma, alpha)
        fn = compile_complex(expr, self.spec.member(sigma).symbols)
        return fn(tuple(cells), precision + GUARD_BITS)


@dataclass(frozen=True)
class ContourSpec:
    """One counterclockwise rectangular path per coordinate.

    Each path is (re_lo, re_hi, im_lo, im_hi). `for_member` builds the
    boundary rectangle of [-ρ - cR/2, ρ + cR/2] x [-cR/2, cR/2].
    """

    paths: Tuple[Tuple[Fraction, Fraction, Fraction, Fraction], ...]
    c: Fraction = DEFAULT_SHRINK

    @classmethod
    def for_member(cls, evaluator: FamilyEvaluator, sigma: str, c: Fraction = DEFAULT_SHRINK) -> "ContourSpec":
        c = Fraction(c)
        if not 0 < c < 1:
            raise HoloError(f"shrink factor c={c} must lie in (0, 1)")
        member = evaluator.spec.member(sigma)
        paths = tuple(
            (-(r + c * R / 2), r + c * R / 2, -c * R / 2, c * R / 2)
            for r, R in zip(member.rho, member.R)
        )
        return cls(paths, c)

    @property
    def dim(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class _Segment:
    mid: ComplexRect
    cell: ComplexRect
    direction: ComplexRect
    length: Fraction


def _path_segments(path: Tuple[Fraction, ...], per_edge: int) -> List[_Segment]:
    re_lo, re_hi, im_lo, im_hi = path
    corners = [(re_lo, im_lo), (re_hi, im_lo), (re_hi, im_hi), (re_lo, im_hi), (re_lo, im_lo)]
    segments = []
    for (x0, y0), (x1, y1) in zip(corners, corners[1:]):
        dx = (x1 - x0) / per_edge
        dy = (y1 - y0) / per_edge
        for k in range(per_edge):
            ax, ay = x0 + k * dx, y0 + k * dy
            bx, by = ax + dx, ay + dy
            segments.append(
                _Segment(
                    mid=ComplexRect.point((ax + bx) / 2, (ay + by) / 2),
                    cell=ComplexRect(Interval(min(ax, bx), max(ax, bx)), Interval(min(ay, by), max(ay, by))),
                    direction=ComplexRect.point(dx, dy),
                    length=abs(dx) + abs(dy),
                )
            )
    return segments


def _midpoint_error(second: Dict[Tuple[int, int], Fraction], lengths: Sequence[Fraction]) -> Fraction:
    """Remainder bound of the tensor midpoint rule on one cell."""
    n = len(lengths)
    total = Fraction(0)
    for a in range(n):
        for b in range(n):
            S = second[(a, b)]
            if a == b:
                term = lengths[a] ** 3 / 12 * math.prod(lengths[c] for c in range(n) if c != a)
            else:
                term = (
                    lengths[a] ** 2 / 4
                    * lengths[b] ** 2 / 4
                    * math.prod(lengths[c] for c in range(n) if c not in (a, b))
                )
            total += S * term
    return total / 2


def cauchy_integral(
    fam: HoloEvaluator,
    sigma: str,
    alpha: Sequence[int],
    x: Sequence[Fraction],
    contour: ContourSpec,
    precision: int,
) -> ComplexRect:
    """Enclose α!/(2πi)^n ∮ f(z)/∏(z_i − x_i)^(α_i+1) dz as a complex rectangle.

    Each edge of each path is cut into 2**precision segments; the midpoint
    rule is applied per cell with a remainder bound from a certified sup of
    the integrand's second derivatives.

    Raises:
        HoloError: If a path leaves the holomorphy domain or fails to
            surround x strictly.
    """
    member = fam.spec.member(sigma)
    alpha = tuple(alpha)
    x = tuple(Fraction(v) for v in x)
    n = member.arity
    if contour.dim != n or len(alpha) != n or len(x) != n:
        raise HoloError(f"contour, alpha and point must all have dimension {n}")
    domain = fam.domain_rects(sigma)
    for (re_lo, re_hi, im_lo, im_hi), dom, xi in zip(contour.paths, domain, x):
        if not (dom.re.contains(re_lo) and dom.re.contains(re_hi) and dom.im.contains(im_lo) and dom.im.contains(im_hi)):
            raise HoloError(f"contour path leaves the holomorphy domain {dom}")
        if not (re_lo < xi < re_hi and im_lo < 0 < im_hi):
            raise HoloError(f"contour path does not surround {xi}")

    symbols = member.symbols
    g = member.definition
    for s, a, xi in zip(symbols, alpha, x):
        g = g * (s - to_sympy_rational(xi)) ** (-(a + 1))
    g_fn = compile_complex(g, symbols)
    second_fns = {
        (a, b): compile_complex(sympy.diff(g, symbols[a], symbols[b]), symbols)
        for a in range(n)
        for b in range(n)
    }
    bits = 2 * precision + GUARD_BITS
    per_edge = 1 << precision
    per_path = [_path_segments(path, per_edge) for path in contour.paths]

    total = ComplexRect.point(0)
    for cell in itertools.product(*per_path):
        mids = tuple(seg.mid for seg in cell)
        rects = tuple(seg.cell for seg in cell)
        weight = ComplexRect.point(1)
        for seg in cell:
            weight = weight * seg.direction
        value = g_fn(mids, bits) * weight
        second = {key: fn(rects, bits).mag_upper() for key, fn in second_fns.items()}
        err = _midpoint_error(second, [seg.length for seg in cell])
        total = total + ComplexRect(value.re.widen(err), value.im.widen(err))

    two_pi = pi_interval(bits) * 2
    scale = Interval.point(alpha_factorial(alpha)) / (two_pi ** n)
    # 1 / i**n = (-i)**n
    rotation = ComplexRect.point(0, -1) ** n
    return total * rotation * ComplexRect.coerce(scale)


def cauchy_derivative(
    fam: HoloEvaluator,
    sigma: str,
    alpha: Sequence[int],
    x: Sequence[Fraction],
    contour: Optional[ContourSpec] = None,
    precision: int = 6,
) -> Interval:
    """Enclose ∂^α S_σ(x) by Cauchy's integral formula (real part)."""
    contour = contour or ContourSpec.for_member(fam, sigma)
    rect = cauchy_integral(fam, sigma, alpha, x, contour, precision)
    logger.debug("cauchy_derivative %s%s at %s: %s", sigma, tuple(alpha), tuple(x), rect)
    return rect.re


class ConvergenceModulus:
    """K(σ, ε): index after which a sequence is ε-close to its limit.

    Must be monotone: ε' <= ε implies K(σ, ε') >= K(σ, ε).
    """

    EPS = sympy.Symbol("eps", positive=True)

    def __init__(self, func: Callable[[str, Fraction], int], description: str = ""):
        self._func = func
        self.description = description

    def __call__(self, sigma: str, eps: Fraction) -> int:
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        return max(0, int(self._func(sigma, eps)))

    @classmethod
    def geometric(cls, scale: Fraction = Fraction(1), offset: int = 0) -> "ConvergenceModulus":
        """K(σ, ε) = ⌈log2(scale/ε)⌉ + offset, for |S^(k) − S| <= scale·2^-(k−offset)."""
        scale = Fraction(scale)
        return cls(
            lambda sigma, eps: ceil_log2(scale / eps) + offset,
            f"ceil(log2({scale}/eps)) + {offset}",
        )

    @classmethod
    def from_expression(cls, text: str) -> "ConvergenceModulus":
        """K from a sympy expression in `eps`, e.g. "ceiling(log(2/eps, 2))"."""
        expr = sympy.sympify(text, locals={"eps": cls.EPS}, rational=True)
        if expr.free_symbols - {cls.EPS}:
            raise ValueError(f"convergence modulus may only use eps: {text!r}")

        def evaluate(sigma: str, eps: Fraction) -> int:
            value = sympy.ceiling(expr.subs(cls.EPS, to_sympy_rational(eps)))
            return int(value)

        return cls(evaluate, text)

    def __str__(self) -> str:
        return self.description


def derivative_convergence_index(
    K: ConvergenceModulus,
    sigma: str,
    alpha: Sequence[int],
    eps: Fraction,
    c: Fraction = DEFAULT_SHRINK,
    R: Optional[Sequence[Fraction]] = None,
) -> int:
    """K∞(σ, α, ε) = K(σ, c^|α| R^α ε / α!)."""
    eps, c = Fraction(eps), Fraction(c)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    alpha = tuple(alpha)
    R = tuple(Fraction(r) for r in (R if R is not None else [1] * len(alpha)))
    scaled = c ** sum(alpha) * math.prod((r ** a for r, a in zip(R, alpha)), start=Fraction(1)) * eps
    return K(sigma, scaled / alpha_factorial(alpha))


class CauchyLimit:
    """Evaluator for lim_k S^(k), given the sequence and its modulus K.

    At precision p the member (or derivative) is taken from S^(k) with
    k = K∞(σ, α, 2^-(p+1)) and widened by 2^-(p+1).
    """

    def __init__(self, seq: Callable[[int], HoloEvaluator], K: ConvergenceModulus, c: Fraction = DEFAULT_SHRINK):
        self._seq = seq
        self._cache: Dict[int, HoloEvaluator] = {}
        self.K = K
        self.c = Fraction(c)
        self.spec: FamilySpec = self.term(0).spec

    def term(self, k: int) -> HoloEvaluator:
        if k not in self._cache:
            self._cache[k] = self._seq(k)
        return self._cache[k]

    def index_for(self, d: DerivativeIndex, precision: int) -> int:
        member = self.spec.member(d.sigma)
        eps = Fraction(1, 1 << (precision + 1))
        return derivative_convergence_index(self.K, d.sigma, d.alpha, eps, self.c, member.R)

    def enclose(self, d: DerivativeIndex, B: Box, precision: int) -> Interval:
        k = self.index_for(d, precision)
        return self.term(k).enclose(d, B, precision + 1).widen(Fraction(1, 1 << (precision + 1)))

    def enclose_complex(self, sigma: str, cells: Sequence[ComplexRect], precision: int) -> ComplexRect:
        k = self.K(sigma, Fraction(1, 1 << (precision + 1)))
        arity = self.spec.arity(sigma)
        rect = self.term(k).enclose_complex(sigma, (0,) * arity, cells, precision + 1)
        eta = Fraction(1, 1 << (precision + 1))
        return ComplexRect(rect.re.widen(eta), rect.im.widen(eta))


def cauchy_limit(seq: Callable[[int], HoloEvaluator], K: ConvergenceModulus, c: Fraction = DEFAULT_SHRINK) -> CauchyLimit:
    """Evaluator for the limit of a computably Cauchy sequence of families."""
    return CauchyLimit(seq, K, c)
