"""
Exact rational intervals, boxes and rational box manifolds.

Every endpoint is a `fractions.Fraction`; field operations are exact, so
results enclose the true image without any rounding. Ends may be open or
unbounded (``None``); arithmetic works on bounded intervals and returns
closed hulls.
"""
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

Number = Union[int, Fraction]


class IntervalError(ValueError):
    """Raised for malformed intervals or undefined interval operations."""
    pass


def _frac(x: Optional[Number]) -> Optional[Fraction]:
    if x is None:
        return None
    if isinstance(x, float):
        raise IntervalError(f"float endpoint {x!r} is not allowed")
    return Fraction(x)


@dataclass(frozen=True)
class Interval:
    """Interval with rational endpoints.

    ``lo=None`` / ``hi=None`` mean -inf / +inf and force the end open.
    """

    lo: Optional[Fraction]
    hi: Optional[Fraction]
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        lo, hi = _frac(self.lo), _frac(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo is None:
            object.__setattr__(self, "lo_open", True)
        if hi is None:
            object.__setattr__(self, "hi_open", True)
        if lo is not None and hi is not None:
            if lo > hi:
                raise IntervalError(f"lo {lo} exceeds hi {hi}")
            if lo == hi and (self.lo_open or self.hi_open):
                raise IntervalError(f"empty interval at {lo}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def point(cls, x: Number) -> "Interval":
        return cls(x, x)

    @classmethod
    def open(cls, lo: Optional[Number], hi: Optional[Number]) -> "Interval":
        return cls(lo, hi, True, True)

    @classmethod
    def coerce(cls, x: Union["Interval", Number]) -> "Interval":
        if isinstance(x, Interval):
            return x
        return cls.point(x)

    # -- predicates and measurements --------------------------------------

    @property
    def is_bounded(self) -> bool:
        return self.lo is not None and self.hi is not None

    @property
    def is_point(self) -> bool:
        return self.is_bounded and self.lo == self.hi

    @property
    def is_open(self) -> bool:
        return self.lo_open and self.hi_open

    def _require_bounded(self, what: str) -> None:
        if not self.is_bounded:
            raise IntervalError(f"{what} needs a bounded interval, got {self}")

    def length(self) -> Fraction:
        self._require_bounded("length")
        return self.hi - self.lo

    def mid(self) -> Fraction:
        self._require_bounded("mid")
        return (self.lo + self.hi) / 2

    def mag(self) -> Fraction:
        """Largest absolute value in the closure."""
        self._require_bounded("mag")
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> Fraction:
        """Smallest absolute value in the closure."""
        self._require_bounded("mig")
        if self.lo <= 0 <= self.hi:
            return Fraction(0)
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x: Number) -> bool:
        x = Fraction(x)
        if self.lo is not None:
            if x < self.lo or (self.lo_open and x == self.lo):
                return False
        if self.hi is not None:
            if x > self.hi or (self.hi_open and x == self.hi):
                return False
        return True

    def __contains__(self, x: Number) -> bool:
        return self.contains(x)

    def contains_interval(self, other: "Interval") -> bool:
        """True when ``other`` is a subset of this interval."""
        if self.lo is not None:
            if other.lo is None or other.lo < self.lo:
                return False
            if other.lo == self.lo and self.lo_open and not other.lo_open:
                return False
        if self.hi is not None:
            if other.hi is None or other.hi > self.hi:
                return False
            if other.hi == self.hi and self.hi_open and not other.hi_open:
                return False
        return True

    def excludes_zero(self) -> bool:
        return not self.contains(0)

    def is_positive(self) -> bool:
        return self.lo is not None and (self.lo > 0 or (self.lo == 0 and self.lo_open))

    def is_negative(self) -> bool:
        return self.hi is not None and (self.hi < 0 or (self.hi == 0 and self.hi_open))

    # -- lattice operations -----------------------------------------------

    def closure(self) -> "Interval":
        return Interval(self.lo, self.hi)

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        """Intersection, or None when empty."""
        if self.lo is None:
            lo, lo_open = other.lo, other.lo_open
        elif other.lo is None or self.lo > other.lo:
            lo, lo_open = self.lo, self.lo_open
        elif other.lo > self.lo:
            lo, lo_open = other.lo, other.lo_open
        else:
            lo, lo_open = self.lo, self.lo_open or other.lo_open
        if self.hi is None:
            hi, hi_open = other.hi, other.hi_open
        elif other.hi is None or self.hi < other.hi:
            hi, hi_open = self.hi, self.hi_open
        elif other.hi < self.hi:
            hi, hi_open = other.hi, other.hi_open
        else:
            hi, hi_open = self.hi, self.hi_open or other.hi_open
        if lo is not None and hi is not None:
            if lo > hi or (lo == hi and (lo_open or hi_open)):
                return None
        return Interval(lo, hi, lo_open, hi_open)

    def overlaps(self, other: "Interval") -> bool:
        return self.intersect(other) is not None

    def hull(self, other: "Interval") -> "Interval":
        self._require_bounded("hull")
        other._require_bounded("hull")
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def split(self) -> Tuple["Interval", "Interval"]:
        m = self.mid()
        return Interval(self.lo, m), Interval(m, self.hi)

    def widen(self, eta: Number) -> "Interval":
        self._require_bounded("widen")
        return Interval(self.lo - eta, self.hi + eta)

    def round_outward(self, bits: int) -> "Interval":
        """Round endpoints outward to the dyadic grid 2**-bits."""
        self._require_bounded("round_outward")
        scale = 1 << bits
        lo = Fraction(math.floor(self.lo * scale), scale)
        hi = Fraction(math.ceil(self.hi * scale), scale)
        return Interval(lo, hi)

    # -- arithmetic -------------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval(
            None if self.hi is None else -self.hi,
            None if self.lo is None else -self.lo,
            self.hi_open,
            self.lo_open,
        )

    def __add__(self, other) -> "Interval":
        other = Interval.coerce(other)
        self._require_bounded("add")
        other._require_bounded("add")
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        return self + (-Interval.coerce(other))

    def __rsub__(self, other) -> "Interval":
        return Interval.coerce(other) + (-self)

    def __mul__(self, other) -> "Interval":
        other = Interval.coerce(other)
        self._require_bounded("mul")
        other._require_bounded("mul")
        if other.is_point:
            c = other.lo
            a, b = self.lo * c, self.hi * c
            return Interval(min(a, b), max(a, b))
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        self._require_bounded("reciprocal")
        if self.lo <= 0 <= self.hi:
            raise IntervalError(f"division by interval containing zero: {self}")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other) -> "Interval":
        return self * Interval.coerce(other).reciprocal()

    def __rtruediv__(self, other) -> "Interval":
        return Interval.coerce(other) * self.reciprocal()

    def __abs__(self) -> "Interval":
        return Interval(self.mig(), self.mag())

    def __pow__(self, n: int) -> "Interval":
        if not isinstance(n, int):
            raise IntervalError(f"only integer powers are supported, got {n!r}")
        if n < 0:
            return (self ** (-n)).reciprocal()
        if n == 0:
            return Interval.point(1)
        self._require_bounded("pow")
        if n % 2 == 1:
            return Interval(self.lo ** n, self.hi ** n)
        return Interval(self.mig() ** n, self.mag() ** n)

    def max(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), max(self.hi, other.hi))

    def min(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), min(self.hi, other.hi))

    def __str__(self) -> str:
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "inf" if self.hi is None else str(self.hi)
        return f"{left}{lo}, {hi}{right}"


@dataclass(frozen=True)
class Box:
    """Ordered product of intervals, one per coordinate. `Box(())` is the point of R^0."""

    intervals: Tuple[Interval, ...]

    def __post_init__(self):
        ivs = tuple(Interval.coerce(iv) for iv in self.intervals)
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def from_bounds(cls, bounds: Iterable[Tuple[Number, Number]]) -> "Box":
        return cls(tuple(Interval(lo, hi) for lo, hi in bounds))

    @classmethod
    def from_point(cls, point: Iterable[Number]) -> "Box":
        return cls(tuple(Interval.point(x) for x in point))

    @classmethod
    def symmetric(cls, radii: Iterable[Number]) -> "Box":
        """The box [-r, r]."""
        return cls(tuple(Interval(-Fraction(r), r) for r in radii))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __getitem__(self, i):
        return self.intervals[i]

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def is_bounded(self) -> bool:
        return all(iv.is_bounded for iv in self.intervals)

    def mid(self) -> Tuple[Fraction, ...]:
        return tuple(iv.mid() for iv in self.intervals)

    def lengths(self) -> Tuple[Fraction, ...]:
        return tuple(iv.length() for iv in self.intervals)

    def widest_axis(self) -> int:
        if not self.intervals:
            raise IntervalError("a zero-dimensional box has no axis")
        lengths = self.lengths()
        return max(range(len(lengths)), key=lambda i: (lengths[i], -i))

    def split(self, axis: Optional[int] = None) -> Tuple["Box", "Box"]:
        """Bisect along ``axis`` (default: first widest coordinate)."""
        if axis is None:
            axis = self.widest_axis()
        left, right = self.intervals[axis].split()
        return self.replace(axis, left), self.replace(axis, right)

    def replace(self, axis: int, iv: Interval) -> "Box":
        ivs = list(self.intervals)
        ivs[axis] = iv
        return Box(tuple(ivs))

    def project(self, indices: Sequence[int]) -> "Box":
        return Box(tuple(self.intervals[i] for i in indices))

    def concat(self, other: "Box") -> "Box":
        return Box(self.intervals + other.intervals)

    def closure(self) -> "Box":
        return Box(tuple(iv.closure() for iv in self.intervals))

    def contains_point(self, point: Sequence[Number]) -> bool:
        return len(point) == self.dim and all(
            iv.contains(x) for iv, x in zip(self.intervals, point)
        )

    def contains_box(self, other: "Box") -> bool:
        return other.dim == self.dim and all(
            a.contains_interval(b) for a, b in zip(self.intervals, other.intervals)
        )

    def intersect(self, other: "Box") -> Optional["Box"]:
        out = []
        for a, b in zip(self.intervals, other.intervals):
            iv = a.intersect(b)
            if iv is None:
                return None
            out.append(iv)
        return Box(tuple(out))

    def overlaps(self, other: "Box") -> bool:
        return self.intersect(other) is not None

    def hull(self, other: "Box") -> "Box":
        return Box(tuple(a.hull(b) for a, b in zip(self.intervals, other.intervals)))

    def widen(self, eta: Number) -> "Box":
        return Box(tuple(iv.widen(eta) for iv in self.intervals))

    def round_outward(self, bits: int) -> "Box":
        return Box(tuple(iv.round_outward(bits) for iv in self.intervals))

    def __str__(self) -> str:
        return " x ".join(str(iv) for iv in self.intervals)


@dataclass(frozen=True)
class ComplexRect:
    """Axis-aligned rectangle enclosing complex values."""

    re: Interval
    im: Interval

    @classmethod
    def point(cls, re: Number, im: Number = 0) -> "ComplexRect":
        return cls(Interval.point(re), Interval.point(im))

    @classmethod
    def coerce(cls, x) -> "ComplexRect":
        if isinstance(x, ComplexRect):
            return x
        return cls(Interval.coerce(x), Interval.point(0))

    def __add__(self, other) -> "ComplexRect":
        other = ComplexRect.coerce(other)
        return ComplexRect(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self) -> "ComplexRect":
        return ComplexRect(-self.re, -self.im)

    def __sub__(self, other) -> "ComplexRect":
        return self + (-ComplexRect.coerce(other))

    def __rsub__(self, other) -> "ComplexRect":
        return ComplexRect.coerce(other) + (-self)

    def __mul__(self, other) -> "ComplexRect":
        other = ComplexRect.coerce(other)
        return ComplexRect(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def norm_squared(self) -> Interval:
        return self.re ** 2 + self.im ** 2

    def reciprocal(self) -> "ComplexRect":
        denom = self.norm_squared()
        if not denom.is_positive():
            raise IntervalError(f"complex division by rectangle containing zero: {self}")
        inv = denom.reciprocal()
        return ComplexRect(self.re * inv, -self.im * inv)

    def __truediv__(self, other) -> "ComplexRect":
        return self * ComplexRect.coerce(other).reciprocal()

    def __pow__(self, n: int) -> "ComplexRect":
        if n < 0:
            return (self ** (-n)).reciprocal()
        result = ComplexRect.point(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mag_upper(self) -> Fraction:
        """Upper bound for the modulus over the rectangle."""
        return self.re.mag() + self.im.mag()

    def contains_zero(self) -> bool:
        return self.re.contains(0) and self.im.contains(0)

    def round_outward(self, bits: int) -> "ComplexRect":
        return ComplexRect(self.re.round_outward(bits), self.im.round_outward(bits))

    def __str__(self) -> str:
        return f"{self.re} + i{self.im}"


@dataclass(frozen=True)
class RationalBoxManifold:
    """D = U x {u}: open rational box U over coordinates E, point u elsewhere.

    Coordinates are 0-based; ``E`` is sorted and ``U[k]`` is the factor of
    coordinate ``E[k]``. ``u`` lists the fixed values of the remaining
    coordinates in increasing order.
    """

    m: int
    E: Tuple[int, ...]
    U: Tuple[Interval, ...]
    u: Tuple[Fraction, ...]

    def __post_init__(self):
        E = tuple(self.E)
        U = tuple(self.U)
        u = tuple(Fraction(x) for x in self.u)
        if list(E) != sorted(set(E)) or any(i < 0 or i >= self.m for i in E):
            raise IntervalError(f"E={E} is not an increasing subset of range({self.m})")
        if len(U) != len(E):
            raise IntervalError("U must have one factor per coordinate in E")
        if len(u) != self.m - len(E):
            raise IntervalError("u must fix every coordinate outside E")
        for iv in U:
            if not iv.is_open or (iv.is_bounded and iv.lo == iv.hi):
                raise IntervalError(f"factor {iv} of U is not a nonempty open interval")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "u", u)

    @classmethod
    def open_box(cls, intervals: Sequence[Interval]) -> "RationalBoxManifold":
        """Manifold with E = all coordinates."""
        ivs = tuple(Interval.open(iv.lo, iv.hi) for iv in intervals)
        return cls(len(ivs), tuple(range(len(ivs))), ivs, ())

    @property
    def dim(self) -> int:
        return len(self.E)

    @property
    def E_complement(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.m) if i not in self.E)

    @property
    def is_bounded(self) -> bool:
        return all(iv.is_bounded for iv in self.U)

    def factor(self, i: int) -> Interval:
        """The factor of coordinate ``i`` (a point interval outside E)."""
        if i in self.E:
            return self.U[self.E.index(i)]
        return Interval.point(self.u[self.E_complement.index(i)])

    def as_box(self) -> Box:
        """The manifold as a box in R^m (open factors kept open)."""
        return Box(tuple(self.factor(i) for i in range(self.m)))

    def closure_box(self) -> Box:
        return self.as_box().closure()

    def center(self) -> Tuple[Fraction, ...]:
        return tuple(self.factor(i).mid() for i in range(self.m))

    def contains_point(self, point: Sequence[Number]) -> bool:
        return self.as_box().contains_point(point)

    def with_factors(self, U: Sequence[Interval]) -> "RationalBoxManifold":
        return RationalBoxManifold(self.m, self.E, tuple(U), self.u)

    def __str__(self) -> str:
        return str(self.as_box())


def width(b: Union[Box, RationalBoxManifold]) -> Fraction:
    """Largest coordinate length of a bounded box."""
    if isinstance(b, RationalBoxManifold):
        b = b.as_box()
    for iv in b:
        if not iv.is_bounded:
            raise IntervalError(f"width of unbounded box {b}")
    return max(iv.length() for iv in b)


def _shrink_factor(iv: Interval, delta: Fraction) -> Interval:
    lo = -1 / delta if iv.lo is None else iv.lo + delta
    hi = 1 / delta if iv.hi is None else iv.hi - delta
    if lo > hi:
        raise IntervalError(f"empty shrink of {iv} by {delta}")
    return Interval(lo, hi)


def shrink(D: RationalBoxManifold, delta: Number) -> Box:
    """The compact box D_delta: each open factor I replaced by I_delta."""
    delta = Fraction(delta)
    if delta <= 0:
        raise IntervalError("delta must be positive")
    factors = []
    for i in range(D.m):
        iv = D.factor(i)
        factors.append(_shrink_factor(iv, delta) if i in D.E else iv)
    return Box(tuple(factors))


def _coordinate_strata(iv: Interval) -> List[Interval]:
    if iv.is_point:
        return [iv]
    strata = []
    if iv.lo is not None and not iv.lo_open:
        strata.append(Interval.point(iv.lo))
    strata.append(Interval.open(iv.lo, iv.hi))
    if iv.hi is not None and not iv.hi_open:
        strata.append(Interval.point(iv.hi))
    return strata


def stratify(b: Box) -> Tuple[RationalBoxManifold, ...]:
    """Natural stratification: product of the per-coordinate strata."""
    per_coord = [_coordinate_strata(iv) for iv in b]
    strata = []
    for choice in itertools.product(*per_coord):
        E = tuple(i for i, iv in enumerate(choice) if not iv.is_point)
        U = tuple(choice[i] for i in E)
        u = tuple(iv.lo for iv in choice if iv.is_point)
        strata.append(RationalBoxManifold(b.dim, E, U, u))
    return tuple(strata)


def max_norm(b: Box) -> Interval:
    """Range of the max-norm over the box."""
    mags = [abs(iv) for iv in b]
    return Interval(max(iv.lo for iv in mags), max(iv.hi for iv in mags))


def point_max_norm(point: Sequence[Number]) -> Fraction:
    return max((abs(Fraction(x)) for x in point), default=Fraction(0))
