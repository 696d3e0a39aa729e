"""Exact rational arithmetic, positive scaling factors, 2D vectors and a
fraction-free linear solver.

Rationals are plain :class:`fractions.Fraction` values; everything here is
immutable and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rat = Fraction
RatLike = Union[Fraction, int, str]


class DimensionMismatch(ValueError):
    pass


class NoUniqueSolution(ArithmeticError):
    pass


def rat(value: RatLike) -> Fraction:
    """Coerce an int, Fraction or ``"a/b"`` string to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"refusing inexact rational input {value!r}")
    return Fraction(value)


def format_rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def rat_arith(a: Fraction, b: Fraction, op: str):
    """Apply ``op`` in {add, sub, mul, div, cmp}; cmp returns -1, 0 or 1."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0:
            raise ZeroDivisionError("rational division by zero")
        return a / b
    if op == "cmp":
        return (a > b) - (a < b)
    raise ValueError(f"unknown op {op!r}")


def log_rat(q: Fraction) -> float:
    """Natural log of a positive rational; safe for huge numerators."""
    if q <= 0:
        raise ValueError("log of non-positive rational")
    return math.log(q.numerator) - math.log(q.denominator)


@dataclass(frozen=True)
class Scale:
    """Positive scaling factor, either a finite ratio or infinite.

    ``ratio is None`` encodes the infinite scale.
    """

    ratio: Fraction | None

    def __post_init__(self):
        if self.ratio is not None:
            r = rat(self.ratio)
            if r <= 0:
                raise ValueError(f"scale ratio must be positive, got {r}")
            object.__setattr__(self, "ratio", r)

    @classmethod
    def finite(cls, r: RatLike) -> "Scale":
        return cls(rat(r))

    @property
    def is_infinite(self) -> bool:
        return self.ratio is None

    def __mul__(self, other: "Scale") -> "Scale":
        if self.ratio is None or other.ratio is None:
            return INF
        return Scale(self.ratio * other.ratio)

    def __pow__(self, k: int) -> "Scale":
        return scale_pow(self, k)

    def cmp_one(self) -> int:
        """-1, 0 or 1 as the scale is below, at or above 1."""
        if self.ratio is None:
            return 1
        return (self.ratio > 1) - (self.ratio < 1)

    def log(self) -> float:
        return math.inf if self.ratio is None else log_rat(self.ratio)

    def __lt__(self, other: "Scale") -> bool:
        if other.ratio is None:
            return self.ratio is not None
        if self.ratio is None:
            return False
        return self.ratio < other.ratio

    def __le__(self, other: "Scale") -> bool:
        return self == other or self < other

    def to_json(self):
        return "inf" if self.ratio is None else {"ratio": format_rat(self.ratio)}

    @classmethod
    def from_json(cls, obj) -> "Scale":
        if obj == "inf":
            return INF
        if isinstance(obj, dict) and "ratio" in obj:
            return cls.finite(obj["ratio"])
        raise ValueError(f"bad scale encoding {obj!r}")

    def __repr__(self):
        return "Scale(inf)" if self.ratio is None else f"Scale({format_rat(self.ratio)})"


INF = Scale(None)
ONE = Scale(Fraction(1))


def scale_pow(s: Scale, k: int) -> Scale:
    if k < 0:
        raise ValueError("exponent must be non-negative")
    if k == 0:
        return ONE
    if s.ratio is None:
        return INF
    return Scale(s.ratio**k)


def scale_product(scales: Iterable[Scale]) -> Scale:
    num, den = 1, 1
    for s in scales:
        if s.ratio is None:
            return INF
        num *= s.ratio.numerator
        den *= s.ratio.denominator
    return Scale(Fraction(num, den))


@dataclass(frozen=True)
class Vec2Q:
    x: Fraction
    y: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", rat(self.x))
        object.__setattr__(self, "y", rat(self.y))

    def __add__(self, other: "Vec2Q") -> "Vec2Q":
        return Vec2Q(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2Q") -> "Vec2Q":
        return Vec2Q(self.x - other.x, self.y - other.y)

    def scaled(self, a: RatLike) -> "Vec2Q":
        a = rat(a)
        return Vec2Q(a * self.x, a * self.y)

    def cross(self, other: "Vec2Q") -> Fraction:
        return self.x * other.y - self.y * other.x

    def dot(self, other: "Vec2Q") -> Fraction:
        return self.x * other.x + self.y * other.y

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def to_json(self):
        return [format_rat(self.x), format_rat(self.y)]


def inf_norm(v: Vec2Q) -> Fraction:
    return max(abs(v.x), abs(v.y))


@dataclass(frozen=True)
class RatMatrix:
    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[RatLike]]) -> "RatMatrix":
        n = len(rows)
        m = len(rows[0]) if n else 0
        if any(len(r) != m for r in rows):
            raise DimensionMismatch("ragged rows")
        return cls(n, m, tuple(rat(v) for r in rows for v in r))

    @classmethod
    def identity(cls, n: int) -> "RatMatrix":
        return cls(n, n, tuple(Fraction(int(i == j)) for i in range(n) for j in range(n)))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def to_rows(self) -> list[list[Fraction]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def __matmul__(self, other: "RatMatrix") -> "RatMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        ocols = [[other[k, j] for k in range(other.rows)] for j in range(other.cols)]
        out = []
        for i in range(self.rows):
            r = self.row(i)
            nz = [(k, v) for k, v in enumerate(r) if v]
            for col in ocols:
                out.append(sum((v * col[k] for k, v in nz), Fraction(0)))
        return RatMatrix(self.rows, other.cols, tuple(out))

    def matvec(self, v: Sequence[Fraction]) -> list[Fraction]:
        if len(v) != self.cols:
            raise DimensionMismatch("vector length does not match columns")
        return [sum((a * b for a, b in zip(self.row(i), v) if a), Fraction(0)) for i in range(self.rows)]


def _integer_row(row: Sequence[Fraction]) -> list[int]:
    lcm = 1
    for v in row:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    return [v.numerator * (lcm // v.denominator) for v in row]


def solve_linear(A: RatMatrix, b: Sequence[RatLike]) -> list[Fraction]:
    """Exact solution of ``A x = b`` for square or over-determined systems.

    Uses Bareiss fraction-free elimination on integer-scaled rows, then
    back-substitutes in rationals. The result is checked by substitution.
    Raises :class:`NoUniqueSolution` when ``A`` has rank below its column
    count or the extra equations are inconsistent.
    """
    b = [rat(v) for v in b]
    m, n = A.rows, A.cols
    if len(b) != m:
        raise DimensionMismatch(f"rhs length {len(b)} != {m} rows")
    if m < n:
        raise NoUniqueSolution(f"under-determined system ({m} equations, {n} unknowns)")
    M = [_integer_row(list(A.row(i)) + [b[i]]) for i in range(m)]
    prev = 1
    for k in range(n):
        piv = next((r for r in range(k, m) if M[r][k] != 0), None)
        if piv is None:
            raise NoUniqueSolution(f"rank deficient at column {k}")
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
        pk = M[k]
        p = pk[k]
        tail = range(k + 1, n + 1)
        for r in range(k + 1, m):
            row = M[r]
            f = row[k]
            if f == 0:
                if p != prev:
                    for c in tail:
                        if row[c]:
                            row[c] = row[c] * p // prev
            else:
                for c in tail:
                    row[c] = (row[c] * p - f * pk[c]) // prev
                row[k] = 0
        prev = p
    for r in range(n, m):
        if M[r][n] != 0:
            raise NoUniqueSolution("inconsistent over-determined system")
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        row = M[i]
        acc = Fraction(row[n])
        for j in range(i + 1, n):
            if row[j]:
                acc -= row[j] * x[j]
        x[i] = acc / row[i]
    if A.matvec(x) != b:
        raise ArithmeticError("back-substitution check failed")
    return x
