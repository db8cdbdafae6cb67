"""Exact piecewise-linear functions on a rational breakpoint grid."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .bits import format_rational, parse_rational
from .errors import DomainError


@dataclass(frozen=True)
class PiecewiseLinear:
    """Breakpoints with values, linearly interpolated in between, exact."""

    xs: tuple[Fraction, ...]
    ys: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise DomainError("need at least two breakpoints with matching values")
        if any(a >= b for a, b in zip(self.xs, self.xs[1:])):
            raise DomainError("breakpoints must be strictly increasing")

    @property
    def lo(self) -> Fraction:
        return self.xs[0]

    @property
    def hi(self) -> Fraction:
        return self.xs[-1]

    def value(self, x: Fraction) -> Fraction:
        if not self.lo <= x <= self.hi:
            raise DomainError(f"{x} outside domain [{self.lo}, {self.hi}]")
        i = bisect_right(self.xs, x)
        if i == len(self.xs):
            return self.ys[-1]
        if self.xs[i - 1] == x:
            return self.ys[i - 1]
        x0, x1 = self.xs[i - 1], self.xs[i]
        y0, y1 = self.ys[i - 1], self.ys[i]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def __call__(self, x: Fraction) -> Fraction:
        return self.value(x)

    def slope(self, a: Fraction, b: Fraction) -> Fraction:
        if not a < b:
            raise DomainError(f"slope needs a < b, got {a}, {b}")
        return (self.value(b) - self.value(a)) / (b - a)

    def is_nondecreasing(self) -> bool:
        return all(y0 <= y1 for y0, y1 in zip(self.ys, self.ys[1:]))

    def lipschitz_bound(self) -> Fraction:
        return max(
            abs(y1 - y0) / (x1 - x0)
            for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:])
        )

    def breakpoint_pairs(self) -> list[tuple[Fraction, Fraction]]:
        return list(zip(self.xs, self.ys))

    def to_json(self) -> dict:
        return {
            "xs": [format_rational(x) for x in self.xs],
            "ys": [format_rational(y) for y in self.ys],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "PiecewiseLinear":
        return cls(
            tuple(parse_rational(x) for x in payload["xs"]),
            tuple(parse_rational(y) for y in payload["ys"]),
        )
