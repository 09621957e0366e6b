"""
Builtin certified-analytic expression language.

Family members are written as sympy expressions in x1..xn built from
rationals, +, *, integer powers, exp, sin, cos and the constants E and pi.
This module parses and validates such expressions and compiles them into
interval evaluators (real boxes) and complex-rectangle evaluators. The
transcendental enclosures use mpmath's outward-rounded interval kernels and
are converted back to exact rationals.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from tokenize import TokenError
from typing import Callable, Dict, Sequence, Tuple

import sympy
from mpmath import libmp
from sympy.parsing.sympy_parser import (
    parse_expr,
    rationalize,
    standard_transformations,
)

from interval import ComplexRect, Interval, IntervalError

logger = logging.getLogger("quasigen.expressions")

# Extra bits on top of the requested precision for mpmath kernels.
GUARD_BITS = 20

_FUNCTIONS = {"exp": sympy.exp, "sin": sympy.sin, "cos": sympy.cos}
_CONSTANTS = {"E": sympy.E, "pi": sympy.pi}
_TRANSFORMS = standard_transformations + (rationalize,)


class ExpressionError(ValueError):
    """Raised when a definition falls outside the builtin language."""
    pass


@lru_cache(maxsize=None)
def variables(n: int) -> Tuple[sympy.Symbol, ...]:
    """The coordinate symbols x1..xn (real)."""
    return tuple(sympy.Symbol(f"x{i + 1}", real=True) for i in range(n))


def parse_definition(text: str, arity: int) -> sympy.Expr:
    """Parse and validate a definition over x1..x{arity}."""
    local_dict = {str(s): s for s in variables(arity)}
    local_dict.update(_FUNCTIONS)
    local_dict.update(_CONSTANTS)
    try:
        expr = parse_expr(text, local_dict=local_dict, transformations=_TRANSFORMS)
    except (SyntaxError, TypeError, TokenError) as e:
        raise ExpressionError(f"cannot parse {text!r}: {e}") from e
    expr = sympy.sympify(expr)
    validate(expr, variables(arity))
    return expr


def validate(expr: sympy.Expr, symbols: Sequence[sympy.Symbol]) -> None:
    """Check that `expr` only uses the builtin language over `symbols`."""
    allowed = set(symbols)
    for node in sympy.preorder_traversal(expr):
        if isinstance(node, sympy.Symbol):
            if node not in allowed:
                raise ExpressionError(f"unknown symbol {node} (expected one of {sorted(map(str, allowed))})")
        elif isinstance(node, sympy.Rational):
            continue
        elif node in (sympy.E, sympy.pi):
            continue
        elif isinstance(node, (sympy.Add, sympy.Mul)):
            continue
        elif isinstance(node, sympy.Pow):
            if not node.exp.is_Integer and node.base is not sympy.E:
                raise ExpressionError(f"only integer powers are supported: {node}")
        elif isinstance(node, (sympy.exp, sympy.sin, sympy.cos)):
            continue
        else:
            raise ExpressionError(f"unsupported construct {type(node).__name__}: {node}")


# -- mpmath bridge ---------------------------------------------------------

def _mpi_from_interval(iv: Interval, prec: int):
    lo = libmp.from_rational(iv.lo.numerator, iv.lo.denominator, prec, libmp.round_floor)
    hi = libmp.from_rational(iv.hi.numerator, iv.hi.denominator, prec, libmp.round_ceiling)
    return lo, hi


def _interval_from_mpi(mpi) -> Interval:
    lo, hi = mpi
    return Interval(Fraction(*libmp.to_rational(lo)), Fraction(*libmp.to_rational(hi)))


def exp_interval(iv: Interval, bits: int) -> Interval:
    return _interval_from_mpi(libmp.mpi_exp(_mpi_from_interval(iv, bits), bits))


def sin_interval(iv: Interval, bits: int) -> Interval:
    return _interval_from_mpi(libmp.mpi_sin(_mpi_from_interval(iv, bits), bits))


def cos_interval(iv: Interval, bits: int) -> Interval:
    return _interval_from_mpi(libmp.mpi_cos(_mpi_from_interval(iv, bits), bits))


def sinh_interval(iv: Interval, bits: int) -> Interval:
    """sinh is increasing; bound each end through exp."""
    def at(x: Fraction) -> Interval:
        return (exp_interval(Interval.point(x), bits) - exp_interval(Interval.point(-x), bits)) / 2

    return Interval(at(iv.lo).lo, at(iv.hi).hi)


def cosh_interval(iv: Interval, bits: int) -> Interval:
    """cosh is even and increasing in |x|."""
    def at(x: Fraction) -> Interval:
        return (exp_interval(Interval.point(x), bits) + exp_interval(Interval.point(-x), bits)) / 2

    return Interval(at(iv.mig()).lo, at(iv.mag()).hi)


@lru_cache(maxsize=64)
def pi_interval(bits: int) -> Interval:
    lo = libmp.mpf_pi(bits, libmp.round_floor)
    hi = libmp.mpf_pi(bits, libmp.round_ceiling)
    return _interval_from_mpi((lo, hi))


@lru_cache(maxsize=64)
def e_interval(bits: int) -> Interval:
    return exp_interval(Interval.point(1), bits)


# -- compilation -----------------------------------------------------------

RealEvaluator = Callable[[Sequence[Interval], int], Interval]
ComplexEvaluator = Callable[[Sequence[ComplexRect], int], ComplexRect]


def _compile_real(expr: sympy.Expr, index: Dict[sympy.Symbol, int]) -> RealEvaluator:
    if isinstance(expr, sympy.Symbol):
        i = index[expr]
        return lambda env, bits: env[i]
    if isinstance(expr, sympy.Rational):
        c = Interval.point(Fraction(int(expr.p), int(expr.q)))
        return lambda env, bits: c
    if expr is sympy.pi:
        return lambda env, bits: pi_interval(bits)
    if expr is sympy.E:
        return lambda env, bits: e_interval(bits)
    if isinstance(expr, sympy.Add):
        parts = [_compile_real(a, index) for a in expr.args]

        def add(env, bits):
            total = parts[0](env, bits)
            for part in parts[1:]:
                total = total + part(env, bits)
            return total

        return add
    if isinstance(expr, sympy.Mul):
        parts = [_compile_real(a, index) for a in expr.args]

        def mul(env, bits):
            total = parts[0](env, bits)
            for part in parts[1:]:
                total = total * part(env, bits)
            return total

        return mul
    if isinstance(expr, sympy.Pow):
        if expr.base is sympy.E:
            inner = _compile_real(expr.exp, index)
            return lambda env, bits: exp_interval(inner(env, bits), bits)
        base = _compile_real(expr.base, index)
        n = int(expr.exp)
        return lambda env, bits: base(env, bits) ** n
    kernels = {sympy.exp: exp_interval, sympy.sin: sin_interval, sympy.cos: cos_interval}
    for func, kernel in kernels.items():
        if isinstance(expr, func):
            inner = _compile_real(expr.args[0], index)
            return lambda env, bits, k=kernel: k(inner(env, bits), bits)
    raise ExpressionError(f"cannot evaluate {expr}")


def _complex_exp(z: ComplexRect, bits: int) -> ComplexRect:
    r = exp_interval(z.re, bits)
    return ComplexRect(r * cos_interval(z.im, bits), r * sin_interval(z.im, bits))


def _complex_sin(z: ComplexRect, bits: int) -> ComplexRect:
    return ComplexRect(
        sin_interval(z.re, bits) * cosh_interval(z.im, bits),
        cos_interval(z.re, bits) * sinh_interval(z.im, bits),
    )


def _complex_cos(z: ComplexRect, bits: int) -> ComplexRect:
    return ComplexRect(
        cos_interval(z.re, bits) * cosh_interval(z.im, bits),
        -(sin_interval(z.re, bits) * sinh_interval(z.im, bits)),
    )


def _compile_complex(expr: sympy.Expr, index: Dict[sympy.Symbol, int]) -> ComplexEvaluator:
    if isinstance(expr, sympy.Symbol):
        i = index[expr]
        return lambda env, bits: env[i]
    if isinstance(expr, sympy.Rational):
        c = ComplexRect.point(Fraction(int(expr.p), int(expr.q)))
        return lambda env, bits: c
    if expr is sympy.pi:
        return lambda env, bits: ComplexRect.coerce(pi_interval(bits))
    if expr is sympy.E:
        return lambda env, bits: ComplexRect.coerce(e_interval(bits))
    if isinstance(expr, (sympy.Add, sympy.Mul)):
        parts = [_compile_complex(a, index) for a in expr.args]
        is_add = isinstance(expr, sympy.Add)

        def fold(env, bits):
            total = parts[0](env, bits)
            for part in parts[1:]:
                total = total + part(env, bits) if is_add else total * part(env, bits)
            return total

        return fold
    if isinstance(expr, sympy.Pow):
        if expr.base is sympy.E:
            inner = _compile_complex(expr.exp, index)
            return lambda env, bits: _complex_exp(inner(env, bits), bits)
        base = _compile_complex(expr.base, index)
        n = int(expr.exp)
        return lambda env, bits: base(env, bits) ** n
    kernels = {sympy.exp: _complex_exp, sympy.sin: _complex_sin, sympy.cos: _complex_cos}
    for func, kernel in kernels.items():
        if isinstance(expr, func):
            inner = _compile_complex(expr.args[0], index)
            return lambda env, bits, k=kernel: k(inner(env, bits), bits)
    raise ExpressionError(f"cannot evaluate {expr}")


@lru_cache(maxsize=4096)
def compile_real(expr: sympy.Expr, symbols: Tuple[sympy.Symbol, ...]) -> RealEvaluator:
    """Compile `expr` into f(intervals, bits) -> Interval."""
    validate(expr, symbols)
    return _compile_real(expr, {s: i for i, s in enumerate(symbols)})


@lru_cache(maxsize=4096)
def compile_complex(expr: sympy.Expr, symbols: Tuple[sympy.Symbol, ...]) -> ComplexEvaluator:
    """Compile `expr` into f(rects, bits) -> ComplexRect."""
    validate(expr, symbols)
    return _compile_complex(expr, {s: i for i, s in enumerate(symbols)})


def enclose_expr(expr: sympy.Expr, symbols: Tuple[sympy.Symbol, ...], box, precision: int) -> Interval:
    """Natural interval extension of `expr` on `box` (no subdivision)."""
    try:
        return compile_real(expr, tuple(symbols))(tuple(box), precision + GUARD_BITS)
    except IntervalError:
        raise
    except (TypeError, ValueError) as e:
        raise ExpressionError(f"evaluation of {expr} failed: {e}") from e


def rational_value(expr: sympy.Expr) -> Fraction:
    """Exact value of a rational sympy constant."""
    if not isinstance(expr, sympy.Rational):
        raise ExpressionError(f"{expr} is not a rational constant")
    return Fraction(int(expr.p), int(expr.q))


def to_sympy_rational(x: Fraction) -> sympy.Rational:
    x = Fraction(x)
    return sympy.Rational(x.numerator, x.denominator)
