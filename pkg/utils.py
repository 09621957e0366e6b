"""Exact-rational helpers shared by the JSON serializers and the CLI."""
from fractions import Fraction
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union


def frac_to_str(x: Fraction) -> str:
    """Render a rational as "p/q" (or "p" for integers)."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_frac(value: Union[str, int, Fraction]) -> Fraction:
    """Parse "p/q", "p" or an int into a Fraction; floats are rejected."""
    if isinstance(value, bool) or isinstance(value, float):
        raise ValueError(f"expected an exact rational, got {value!r}")
    try:
        return Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise ValueError(f"invalid rational {value!r}") from e


def fracs_to_strs(values: Iterable[Fraction]) -> List[str]:
    return [frac_to_str(v) for v in values]


def parse_fracs(values: Iterable[Any]) -> Tuple[Fraction, ...]:
    return tuple(parse_frac(v) for v in values)


def interval_to_json(iv) -> dict:
    """{"lo": "p/q", "hi": "p/q", "lo_open": bool, "hi_open": bool}; null for unbounded ends."""
    return {
        "lo": None if iv.lo is None else frac_to_str(iv.lo),
        "hi": None if iv.hi is None else frac_to_str(iv.hi),
        "lo_open": iv.lo_open,
        "hi_open": iv.hi_open,
    }


def interval_from_json(doc: dict):
    from interval import Interval

    lo = doc.get("lo")
    hi = doc.get("hi")
    return Interval(
        None if lo is None else parse_frac(lo),
        None if hi is None else parse_frac(hi),
        bool(doc.get("lo_open", False)),
        bool(doc.get("hi_open", False)),
    )


def box_to_json(box) -> List[dict]:
    return [interval_to_json(iv) for iv in box]


def box_from_json(doc: Sequence[dict]):
    from interval import Box

    return Box(tuple(interval_from_json(d) for d in doc))


def manifold_to_json(D) -> dict:
    return {
        "m": D.m,
        "E": list(D.E),
        "U": [interval_to_json(iv) for iv in D.U],
        "u": fracs_to_strs(D.u),
    }


def manifold_from_json(doc: dict):
    """Parse a manifold; `E` defaults to all coordinates and intervals are forced open."""
    from interval import Interval, RationalBoxManifold

    U = [interval_from_json(d) for d in doc["U"]]
    m = int(doc.get("m", len(U) + len(doc.get("u", []))))
    E = tuple(doc.get("E", range(len(U))))
    return RationalBoxManifold(
        m, E, tuple(Interval.open(iv.lo, iv.hi) for iv in U), parse_fracs(doc.get("u", []))
    )


def dyadic_below(x: Fraction, bits: int) -> Optional[Fraction]:
    """Largest k/2**bits strictly below x, or None when that is not positive."""
    scale = 1 << bits
    k = -((-x * scale) // 1) - 1
    if k <= 0:
        return None
    return Fraction(k, scale)
