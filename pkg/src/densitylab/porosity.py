"""Porosity witnesses and the staged porosity test.

All cylinder emptiness and meeting tests are taken against the open cylinder
(0.sigma, 0.sigma + 2^-|sigma|): a removed hole whose endpoints remain in the
stage class still counts as vacated.  Levels are handled through integer index
ranges, so each stage works entirely in exact integer arithmetic.

For a base sigma and reach constant c, a string rho >= sigma qualifies when
some tau >= sigma of the same length with |0.tau - 0.rho| <= 2^(c-|tau|)
(equivalently, index distance <= 2^c at that level) has open cylinder disjoint
from the stage class.  N_t(sigma) is the antichain of minimal qualifying rho.
Scanning stops one level past the point where every relevant gap has produced
an empty cylinder inside sigma: beyond that the qualifying value regions only
shrink, so no new minimal elements can appear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .bits import cylinder_bounds, is_antichain, validate_bits
from .errors import DomainError
from .intervals import Interval, IntervalSet, StagedOpenEnumeration, canonicalize

_SCAN_SAFETY = 400


def cylinder_meets_class(class_set: IntervalSet, tau: str) -> bool:
    lo, hi = cylinder_bounds(validate_bits(tau))
    return class_set.meets_open(lo, hi)


def _merge_ranges(ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for a, b in sorted(ranges):
        if a > b:
            continue
        if out and a <= out[-1][1] + 1:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _subtract_ranges(
    ranges: list[tuple[int, int]], covered: list[tuple[int, int]]
) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for a, b in ranges:
        cur = a
        for ca, cb in covered:
            if cb < cur:
                continue
            if ca > b:
                break
            if ca > cur:
                out.append((cur, min(b, ca - 1)))
            cur = max(cur, cb + 1)
            if cur > b:
                break
        if cur <= b:
            out.append((cur, b))
    return out


def _string_at(index: int, level: int) -> str:
    return format(index, f"0{level}b") if level else ""


@dataclass(frozen=True)
class PorousExtensions:
    """N_t(sigma): minimal qualifying extensions plus scan bookkeeping."""

    base: str
    constant: int
    elements: tuple[str, ...]
    scan_depth: int
    completion_depth: int
    truncated: bool


def minimal_porous_extensions(
    class_set: IntervalSet, sigma: str, c: int, depth_cap: int | None = None
) -> PorousExtensions:
    """Antichain of minimal rho >= sigma reached by an empty cylinder.

    With depth_cap None the scan runs to the exact completion depth and the
    result is the full N(sigma); a lower cap is honest truncation and is
    flagged in the output.
    """
    validate_bits(sigma)
    if c < 0:
        raise DomainError(f"reach constant must be nonnegative, got {c}")
    s_len = len(sigma)
    s_idx = int(sigma, 2) if sigma else 0
    slo, shi = cylinder_bounds(sigma)
    gaps = [
        g
        for g in class_set.gaps()
        if not g.is_degenerate and g.lo < shi and g.hi > slo
    ]
    if not gaps:
        return PorousExtensions(sigma, c, (), s_len, s_len, False)

    activations = []
    for g in gaps:
        level = s_len
        while True:
            scale = 1 << level
            e1 = max(math.ceil(g.lo * scale), s_idx << (level - s_len))
            e2 = min(
                math.floor(g.hi * scale) - 1,
                ((s_idx + 1) << (level - s_len)) - 1,
            )
            if e1 <= e2:
                activations.append(level)
                break
            level += 1
            if level > s_len + _SCAN_SAFETY:
                raise RuntimeError(f"gap {g.to_json()} never activates below {sigma!r}")
    completion = max(activations) + 1
    if depth_cap is None:
        scan_to = completion
        truncated = False
    else:
        scan_to = min(depth_cap, completion)
        truncated = depth_cap < completion

    reach = 1 << c
    covered: list[tuple[int, int]] = []
    found: list[str] = []
    for level in range(s_len, scan_to + 1):
        if level > s_len:
            covered = [(2 * a, 2 * b + 1) for a, b in covered]
        lo_idx = s_idx << (level - s_len)
        hi_idx = ((s_idx + 1) << (level - s_len)) - 1
        scale = 1 << level
        qualifying = []
        for g in gaps:
            e1 = max(math.ceil(g.lo * scale), lo_idx)
            e2 = min(math.floor(g.hi * scale) - 1, hi_idx)
            if e1 > e2:
                continue
            qualifying.append((max(e1 - reach, lo_idx), min(e2 + reach, hi_idx)))
        fresh = _subtract_ranges(_merge_ranges(qualifying), covered)
        if level == completion and not truncated:
            # shrinkage of the qualifying value regions past the last
            # activation level makes this a checked no-op
            assert not fresh, "qualifying region grew past completion depth"
        for a, b in fresh:
            found.extend(_string_at(j, level) for j in range(a, b + 1))
        covered = _merge_ranges(covered + fresh)
    return PorousExtensions(sigma, c, tuple(sorted(found)), scan_to, completion, truncated)


@dataclass(frozen=True)
class PorosityWitness:
    rho: str
    tau: str
    level: int


def porosity_witness(
    class_set: IntervalSet, sigma: str, c: int, max_level: int
) -> PorosityWitness | None:
    """First qualifying pair below sigma: lowest level, leftmost rho, nearest tau."""
    validate_bits(sigma)
    s_len = len(sigma)
    s_idx = int(sigma, 2) if sigma else 0
    reach = 1 << c
    for level in range(s_len, max_level + 1):
        lo_idx = s_idx << (level - s_len)
        hi_idx = ((s_idx + 1) << (level - s_len)) - 1
        width = Fraction(1, 1 << level)
        empties = [
            j
            for j in range(lo_idx, hi_idx + 1)
            if not class_set.meets_open(j * width, (j + 1) * width)
        ]
        if not empties:
            continue
        best = None
        for j in range(lo_idx, hi_idx + 1):
            near = min(empties, key=lambda e: (abs(e - j), e))
            if abs(near - j) <= reach:
                best = (j, near)
                break
        if best is not None:
            return PorosityWitness(
                _string_at(best[0], level), _string_at(best[1], level), level
            )
    return None


@dataclass(frozen=True)
class PorosityTest:
    """Staged boxes B_{n,t}, their cylinder unions, and the decay bounds."""

    enum: StagedOpenEnumeration
    constant: int
    levels: int
    stages: int
    boxes: dict[tuple[int, int], tuple[str, ...]] = field(repr=False)
    components: tuple[IntervalSet, ...] = field(repr=False)
    node_records: tuple[tuple[str, Fraction, Fraction, bool], ...] = field(repr=False)

    @property
    def decay(self) -> Fraction:
        return 1 - Fraction(1, 1 << (self.constant + 2))

    def meeting_mass(self, n: int, t: int) -> Fraction:
        cls = self.enum.stage_class(t)
        return sum(
            (
                Fraction(1, 1 << len(rho))
                for rho in self.boxes[(n, t)]
                if cylinder_meets_class(cls, rho)
            ),
            Fraction(0),
        )

    def bound_checks(self) -> list[tuple[str, Fraction, Fraction, bool]]:
        out = []
        for n in range(self.levels + 1):
            worst_lhs = Fraction(0)
            bound = self.decay**n
            for t in range(self.stages + 1):
                worst_lhs = max(worst_lhs, self.meeting_mass(n, t))
            out.append(
                (f"level {n}: max_t meeting mass <= decay^n", worst_lhs, bound,
                 worst_lhs <= bound)
            )
        final = self.enum.stage_class(self.stages)
        for n in range(self.levels + 1):
            lhs = self.components[n].intersect(final).measure
            bound = self.decay**n
            out.append(
                (f"level {n}: lambda(U_n cap C_final) <= decay^n", lhs, bound,
                 lhs <= bound)
            )
        return out

    def holds(self) -> bool:
        return all(ok for *_x, ok in self.bound_checks())


def porosity_test(
    enum: StagedOpenEnumeration, c: int, levels: int, stages: int
) -> PorosityTest:
    """Build B_{n,t} for n <= levels, t <= stages, with U_n from the last stage.

    The stage count is clamped to the enumeration length since the stage
    classes are constant beyond it.  Stage-to-stage nesting (each member of
    B_{n,t} extends a member of B_{n,t+1}) is verified here, which makes the
    last-stage union equal to the union over all stages.
    """
    if levels < 0 or stages < 0:
        raise DomainError("levels and stages must be nonnegative")
    stages = min(stages, len(enum.items))
    boxes: dict[tuple[int, int], tuple[str, ...]] = {}
    extension_cache: dict[tuple[int, str], PorousExtensions] = {}
    node_records: list[tuple[str, Fraction, Fraction, bool]] = []
    decay = 1 - Fraction(1, 1 << (c + 2))

    for t in range(stages + 1):
        cls = enum.stage_class(t)
        boxes[(0, t)] = ("",)
        for n in range(1, levels + 1):
            collected: list[str] = []
            for sigma in boxes[(n - 1, t)]:
                key = (t, sigma)
                if key not in extension_cache:
                    ext = minimal_porous_extensions(cls, sigma, c)
                    extension_cache[key] = ext
                    lhs = sum(
                        (
                            Fraction(1, 1 << len(rho))
                            for rho in ext.elements
                            if cylinder_meets_class(cls, rho)
                        ),
                        Fraction(0),
                    )
                    bound = decay * Fraction(1, 1 << len(sigma))
                    node_records.append(
                        (f"node t={t} sigma={sigma!r}", lhs, bound, lhs <= bound)
                    )
                collected.extend(extension_cache[key].elements)
            members = tuple(sorted(set(collected)))
            if not is_antichain(members):
                raise RuntimeError(f"B_({n},{t}) is not an antichain")
            boxes[(n, t)] = members

    for n in range(levels + 1):
        for t in range(stages):
            later = set(boxes[(n, t + 1)])
            for rho in boxes[(n, t)]:
                if not any(rho[:k] in later for k in range(len(rho) + 1)):
                    raise RuntimeError(
                        f"{rho!r} in B_({n},{t}) has no prefix in B_({n},{t + 1})"
                    )

    components = tuple(
        canonicalize(
            [Interval(*cylinder_bounds(rho)) for rho in boxes[(n, stages)]]
        )
        for n in range(levels + 1)
    )
    return PorosityTest(enum, c, levels, stages, boxes, components, tuple(node_records))
