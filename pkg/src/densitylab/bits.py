"""Exact rationals, dyadic points, and finite bit strings.

Rationals are stdlib ``fractions.Fraction`` and serialize as ``"p/q"``.
Bit strings are plain ASCII strings over ``'0'``/``'1'``; the empty string is
the root.  ``cylinder_interval`` ties a string sigma to the closed interval
[0.sigma, 0.sigma + 2^-|sigma|].
"""

from __future__ import annotations

from fractions import Fraction

from .errors import AmbiguousExpansionError, DomainError, SchemaError

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" (or "p") into an exact Fraction; reject junk loudly."""
    if not isinstance(text, str):
        raise SchemaError(f"rational must be a string, got {type(text).__name__}")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad rational {text!r}: {exc}") from None


def format_rational(q: Fraction) -> str:
    """Serialize exactly, always with an explicit denominator."""
    return f"{q.numerator}/{q.denominator}"


def require_unit(q: Fraction, what: str = "value") -> Fraction:
    if not ZERO <= q <= ONE:
        raise DomainError(f"{what} {q} outside [0,1]")
    return q


def is_dyadic(q: Fraction) -> bool:
    """True iff q = a * 2^-b for integers a, b >= 0."""
    d = q.denominator
    return d & (d - 1) == 0


def dyadic_point(mantissa: int, exponent: int) -> Fraction:
    """The rational mantissa * 2^-exponent."""
    if exponent < 0:
        raise DomainError(f"negative exponent {exponent}")
    return Fraction(mantissa, 1 << exponent)


def validate_bits(sigma: str) -> str:
    if not isinstance(sigma, str) or any(ch not in "01" for ch in sigma):
        raise SchemaError(f"bit string must consist of '0'/'1', got {sigma!r}")
    return sigma


def is_prefix(sigma: str, tau: str) -> bool:
    """sigma is an initial segment of tau (improper prefixes count)."""
    return tau.startswith(sigma)


def bit_value(sigma: str) -> Fraction:
    """0.sigma as an exact rational."""
    if not sigma:
        return ZERO
    return Fraction(int(sigma, 2), 1 << len(sigma))


def cylinder_bounds(sigma: str) -> tuple[Fraction, Fraction]:
    lo = bit_value(sigma)
    return lo, lo + Fraction(1, 1 << len(sigma))


def children(sigma: str) -> tuple[str, str]:
    return sigma + "0", sigma + "1"


def binary_prefix(x: Fraction, n: int, expansion: str | None = None) -> str:
    """First n bits of the binary expansion of x in [0,1].

    Interior dyadic rationals have two expansions; the caller must pick
    "lower" (eventually all ones) or "upper" (eventually all zeros).
    0 and 1 each have a single expansion and need no choice.
    """
    require_unit(x, "x")
    if n < 0:
        raise DomainError(f"negative prefix length {n}")
    if expansion not in (None, "lower", "upper"):
        raise SchemaError(f"expansion must be 'lower' or 'upper', got {expansion!r}")
    if is_dyadic(x) and ZERO < x < ONE and expansion is None:
        raise AmbiguousExpansionError(
            f"{x} is an interior dyadic; select expansion='lower' or 'upper'"
        )
    take_upper = expansion != "lower"
    bits = []
    y = x
    for _ in range(n):
        y = 2 * y
        if y > ONE or (y == ONE and take_upper):
            bits.append("1")
            y -= ONE
        else:
            bits.append("0")
        # once y hits an endpoint the remaining bits are forced
        if y == ONE and not take_upper:
            # lower expansion of a dyadic: y stays pinned at 1, emitting ones
            bits.extend("1" * (n - len(bits)))
            break
        if y == ZERO:
            bits.extend("0" * (n - len(bits)))
            break
    return "".join(bits)


def prefix_of_point(x: Fraction, n: int) -> str:
    """Length-n prefix for a non-dyadic x (unique expansion)."""
    if is_dyadic(x) and ZERO < x < ONE:
        raise AmbiguousExpansionError(f"{x} is dyadic; use binary_prefix with a side")
    return binary_prefix(x, n)


def all_strings(length: int) -> list[str]:
    """All bit strings of the exact given length, lexicographic."""
    if length < 0:
        raise DomainError(f"negative length {length}")
    return [format(i, f"0{length}b") if length else "" for i in range(1 << length)]


def is_antichain(strings) -> bool:
    """No member is a proper prefix of another."""
    items = sorted(set(strings), key=len)
    for i, s in enumerate(items):
        for t in items[i + 1 :]:
            if s != t and t.startswith(s):
                return False
    return True
