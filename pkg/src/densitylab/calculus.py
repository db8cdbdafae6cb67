"""Point-function oracles, slopes, pseudo-derivatives, envelopes, extension.

Oracles answer (q, n) queries with |answer - f(q)| <= 2^-n.  Builtins carry
an exact evaluator alongside the sampler, so slope computations on them are
exact; rounded oracles exercise the approximation accounting.  A declared
Lipschitz constant stands in for a modulus of continuity: extrema and
envelopes are computed by modulus-driven grid refinement with explicit error
margins, never by assuming where the extremum sits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .bits import ONE, ZERO
from .errors import BudgetExhausted, DomainError
from .intervals import Interval, IntervalSet, StagedOpenEnumeration
from .piecewise import PiecewiseLinear


class PointFunctionOracle:
    """Sampler (q, n) -> rational with error at most 2^-n, memoized."""

    def __init__(
        self,
        sampler: Callable[[Fraction, int], Fraction],
        domain="all",
        exact: Callable[[Fraction], Fraction] | None = None,
        lipschitz: Fraction | None = None,
        name: str = "",
    ):
        self.sampler = sampler
        self.domain = domain if domain == "all" else tuple(sorted(domain))
        self.exact = exact
        self.lipschitz = None if lipschitz is None else Fraction(lipschitz)
        self.name = name
        self._memo: dict[tuple[Fraction, int], Fraction] = {}

    def in_domain(self, q: Fraction) -> bool:
        return self.domain == "all" or q in self.domain

    def sample(self, q: Fraction, n: int) -> Fraction:
        if not self.in_domain(q):
            raise DomainError(f"{q} outside the domain of oracle {self.name!r}")
        key = (q, n)
        if key not in self._memo:
            self._memo[key] = Fraction(self.sampler(q, n))
        return self._memo[key]


def oracle_from_exact(fn, lipschitz=None, name: str = "", domain="all") -> PointFunctionOracle:
    return PointFunctionOracle(
        lambda q, n: fn(q), domain=domain, exact=fn, lipschitz=lipschitz, name=name
    )


def identity_oracle() -> PointFunctionOracle:
    return oracle_from_exact(lambda q: q, lipschitz=1, name="identity")


def constant_oracle(c) -> PointFunctionOracle:
    c = Fraction(c)
    return oracle_from_exact(lambda q: c, lipschitz=0, name=f"constant {c}")


def polynomial_oracle(coeffs) -> PointFunctionOracle:
    """Exact polynomial sum c_i x^i; Lipschitz bound on [0,1] is sum i |c_i|."""
    cs = tuple(Fraction(c) for c in coeffs)

    def fn(q: Fraction) -> Fraction:
        acc = ZERO
        for c in reversed(cs):
            acc = acc * q + c
        return acc

    lip = sum((i * abs(c) for i, c in enumerate(cs)), ZERO)
    return oracle_from_exact(fn, lipschitz=lip, name=f"polynomial {cs}")


def piecewise_linear_oracle(pl: PiecewiseLinear, name: str = "piecewise") -> PointFunctionOracle:
    return oracle_from_exact(pl.value, lipschitz=pl.lipschitz_bound(), name=name)


def rounded_oracle(base: PointFunctionOracle, name: str = "") -> PointFunctionOracle:
    """Floor the base oracle's exact values to the 2^-n grid (error < 2^-n)."""
    if base.exact is None:
        raise DomainError("rounding wrapper needs an exact base")

    def sampler(q: Fraction, n: int) -> Fraction:
        v = base.exact(q) * (1 << n)
        return Fraction(v.numerator // v.denominator, 1 << n)

    return PointFunctionOracle(
        sampler,
        domain=base.domain,
        lipschitz=base.lipschitz,
        name=name or f"rounded {base.name}",
    )


@dataclass(frozen=True)
class SlopeSample:
    a: Fraction
    b: Fraction
    value: Fraction
    precision: int

    @property
    def error_bound(self) -> Fraction:
        return 2 * Fraction(1, 1 << self.precision) / abs(self.b - self.a)


def _sample_index_for(width: Fraction, n: int) -> int:
    # smallest m with 2 * 2^-m / width <= 2^-n
    m = max(n + 1, 0)
    while (1 << m) * width < (1 << (n + 1)):
        m += 1
    return m


def slope(f: PointFunctionOracle, a: Fraction, b: Fraction, n: int) -> SlopeSample:
    """S_f(a,b) from samples at an index making the slope error <= 2^-n."""
    a, b = Fraction(a), Fraction(b)
    if a == b:
        raise DomainError("slope needs distinct endpoints")
    m = _sample_index_for(abs(b - a), n)
    if f.exact is not None:
        value = (f.exact(a) - f.exact(b)) / (a - b)
    else:
        value = (f.sample(a, m) - f.sample(b, m)) / (a - b)
    return SlopeSample(a, b, value, m)


def _dyadic_points(lo: Fraction, hi: Fraction, depth: int) -> list[Fraction]:
    scale = 1 << depth
    first = (lo * scale).numerator // (lo * scale).denominator
    if Fraction(first, scale) < lo:
        first += 1
    out = []
    k = first
    while Fraction(k, scale) <= hi:
        out.append(Fraction(k, scale))
        k += 1
    return out


def _straddling_candidates(f, x, lo, hi, depth) -> list[Fraction]:
    pts = set(_dyadic_points(max(lo, ZERO), min(hi, ONE), depth))
    if f.domain != "all":
        pts = {p for p in f.domain if lo <= p <= hi}
    elif lo <= x <= hi:
        pts.add(x)
    return sorted(p for p in pts if f.in_domain(p))


@dataclass(frozen=True)
class DerivativeEstimate:
    side: str
    value: Fraction
    witness: tuple[Fraction, Fraction]
    scale: Fraction
    grid_depth: int


def pseudo_derivative_estimate(
    f: PointFunctionOracle, x: Fraction, h: Fraction, grid_depth: int, side: str
) -> DerivativeEstimate:
    """Extremal slope over straddling pairs a <= x <= b with 0 < b-a <= h.

    Upper mode is a certified lower bound on the upper pseudo-derivative at
    scale h, lower mode a certified upper bound on the lower one; sampled
    oracles get the 2^-(grid_depth+2) slope-error adjustment, exact ones
    none.  Pairs must straddle x; one-sided pairs are excluded by definition.
    """
    x, h = Fraction(x), Fraction(h)
    if side not in ("upper", "lower"):
        raise DomainError(f"side must be upper or lower, got {side!r}")
    if h <= 0:
        raise DomainError("scale h must be positive")
    cands = _straddling_candidates(f, x, x - h, x + h, grid_depth)
    lefts = [a for a in cands if a <= x]
    rights = [b for b in cands if b >= x]
    prec = grid_depth + 2
    adjust = ZERO if f.exact is not None else Fraction(1, 1 << prec)
    best = None
    witness = None
    for a in lefts:
        for b in rights:
            if not ZERO < b - a <= h:
                continue
            v = slope(f, a, b, prec).value
            v = v - adjust if side == "upper" else v + adjust
            if best is None or (v > best if side == "upper" else v < best):
                best, witness = v, (a, b)
    if best is None:
        raise DomainError(
            f"no straddling pair around {x} at depth {grid_depth} within scale {h}"
        )
    return DerivativeEstimate(side, best, witness, h, grid_depth)


@dataclass(frozen=True)
class DenjoyReport:
    verdict: str
    curves: tuple[tuple[Fraction, Fraction, Fraction], ...]  # (scale, upper, lower)


def denjoy_classify(
    f: PointFunctionOracle,
    x: Fraction,
    scales,
    grid_depth: int,
    gap: Fraction,
    blowup: Fraction,
) -> DenjoyReport:
    """Derivative-like, denjoy-bad, or inconclusive, from both estimate curves."""
    scales = [Fraction(s) for s in scales]
    if not scales or any(s <= 0 for s in scales) or any(
        scales[i] <= scales[i + 1] for i in range(len(scales) - 1)
    ):
        raise DomainError("scales must be positive and strictly decreasing")
    curves = []
    for s in scales:
        up = pseudo_derivative_estimate(f, x, s, grid_depth, "upper").value
        lo = pseudo_derivative_estimate(f, x, s, grid_depth, "lower").value
        curves.append((s, up, lo))
    _, up, lo = curves[-1]
    if up - lo <= gap:
        verdict = "derivative-like"
    elif up >= blowup and lo <= -blowup:
        verdict = "denjoy-bad"
    else:
        verdict = "inconclusive"
    return DenjoyReport(verdict, tuple(curves))


def slope_threshold_witness(
    f: PointFunctionOracle, z: Fraction, p: Fraction, t: Fraction, grid_depth: int
) -> tuple[Fraction, Fraction] | None:
    """A straddling pair with certified slope < p and width <= t, if any."""
    z, p, t = Fraction(z), Fraction(p), Fraction(t)
    if t <= 0:
        raise DomainError("width bound t must be positive")
    cands = _straddling_candidates(f, z, z - t, z + t, grid_depth)
    prec = grid_depth + 2
    adjust = ZERO if f.exact is not None else Fraction(1, 1 << prec)
    for a in (c for c in cands if c <= z):
        for b in (c for c in cands if c >= z):
            if not ZERO < b - a <= t:
                continue
            if slope(f, a, b, prec).value + adjust < p:
                return (a, b)
    return None


def E_membership(
    f: PointFunctionOracle,
    x: Fraction,
    n: int,
    r: Fraction,
    s: Fraction,
    grid_depth: int,
) -> bool:
    """First-approximant slope condition S_f(a,b)_0 > -n+1 over all grid pairs.

    Quantifies over r <= a <= x <= b <= s with a < b from the depth-bounded
    grid augmented by the interval endpoints; a depth-bounded certificate of
    membership in the stage-approximated E_{n,r,s}.
    """
    return e_violation(f, x, n, r, s, grid_depth) is None


def e_violation(
    f: PointFunctionOracle,
    x: Fraction,
    n: int,
    r: Fraction,
    s: Fraction,
    grid_depth: int,
) -> tuple[Fraction, Fraction] | None:
    """The witness pair behind an E_membership failure, or None."""
    r, s, x = Fraction(r), Fraction(s), Fraction(x)
    if not r < s:
        raise DomainError("need r < s")
    if not r <= x <= s:
        raise DomainError("x must lie in [r, s]")
    pts = set(_dyadic_points(r, s, grid_depth)) | {r, s}
    if f.domain != "all":
        pts = {p for p in f.domain if r <= p <= s}
    cands = sorted(p for p in pts if f.in_domain(p))
    threshold = Fraction(1 - n)
    for a in (c for c in cands if c <= x):
        for b in (c for c in cands if c >= x):
            if a == b:
                continue
            if slope(f, a, b, 0).value <= threshold:
                return (a, b)
    return None


def sup_function(
    f: PointFunctionOracle, r: Fraction, x: Fraction, n: int, grid_depth: int
) -> Fraction:
    """f_*(x) = max of f(a)_n over grid points a in [r, x]."""
    r, x = Fraction(r), Fraction(x)
    if r > x:
        raise DomainError("need r <= x")
    pts = set(_dyadic_points(r, x, grid_depth)) | {r, x}
    if f.domain != "all":
        pts = {p for p in f.domain if r <= p <= x}
    cands = [p for p in pts if f.in_domain(p)]
    if not cands:
        raise DomainError(f"no domain points in [{r}, {x}]")
    return max(f.sample(a, n) for a in cands)


def _refined_grid(lo: Fraction, hi: Fraction, max_step: Fraction) -> list[Fraction]:
    if lo == hi or max_step <= 0:
        return [lo] if lo == hi else [lo, hi]
    steps = (hi - lo) / max_step
    count = steps.numerator // steps.denominator
    if count * max_step < hi - lo:
        count += 1
    delta = (hi - lo) / count
    return [lo + k * delta for k in range(count + 1)]


def interval_extremum(
    p: PointFunctionOracle, a: Fraction, b: Fraction, n: int, which: str
) -> Fraction:
    """Sup or inf over [a,b] within 2^-n, by modulus-driven refinement."""
    a, b = Fraction(a), Fraction(b)
    if which not in ("sup", "inf"):
        raise DomainError(f"which must be sup or inf, got {which!r}")
    if a > b:
        raise DomainError("need a <= b")
    if p.lipschitz is None:
        raise DomainError("interval extremum needs a declared modulus")
    if a == b or p.lipschitz == 0:
        return p.sample(a, n)
    # grid step d with L d / 2 <= 2^-(n+1) makes grid value + sample error <= 2^-n
    step = Fraction(1, 1 << n) / p.lipschitz
    values = [p.sample(q, n + 1) for q in _refined_grid(a, b, step)]
    return max(values) if which == "sup" else min(values)


def envelope(
    h: PointFunctionOracle,
    c_set: IntervalSet,
    a: Fraction,
    b: Fraction,
    n: int,
    which: str,
) -> Fraction:
    """One-sided certified extremum of h over C intersected with [a,b].

    lower_inf returns a value at or below the true infimum (and within
    2^-n+1 of it); upper_sup symmetrically from above.  Inf over a shrinking
    stage class rises, sup falls: the sides match the semicomputability the
    construction needs.
    """
    a, b = Fraction(a), Fraction(b)
    if which not in ("lower_inf", "upper_sup"):
        raise DomainError(f"which must be lower_inf or upper_sup, got {which!r}")
    if h.lipschitz is None:
        raise DomainError("envelope needs a declared modulus")
    window = c_set.intersect_interval(Interval(min(a, b), max(a, b)))
    if not window:
        raise DomainError(f"C does not meet [{a}, {b}]")
    step = (
        Fraction(1, 1 << (n + 1)) / h.lipschitz if h.lipschitz > 0 else ZERO
    )
    margin = h.lipschitz * step / 2 + Fraction(1, 1 << (n + 1))
    values = []
    for part in window:
        values.extend(h.sample(q, n + 1) for q in _refined_grid(part.lo, part.hi, step))
    if which == "lower_inf":
        return min(values) - margin
    return max(values) + margin


def smooth_approximant(a: Fraction, b: Fraction, s: int, x: Fraction) -> Fraction:
    """The rational bump s min(|x-a|,|x-b|)/(1 + s min(...)), 0 off [a,b].

    Nondecreasing in s at fixed x, valued in [0,1), tending to the indicator
    of (a,b) as s grows.
    """
    a, b, x = Fraction(a), Fraction(b), Fraction(x)
    if not a < b:
        raise DomainError("need a < b")
    if x <= a or x >= b:
        return ZERO
    m = s * min(x - a, b - x)
    return m / (1 + m)


@dataclass(frozen=True)
class ExtensionBudget:
    grid_depth: int | None = None
    precision: int | None = None
    max_stage: int | None = None


class MonotoneExtension:
    """Nondecreasing extension of h from a stage-enumerated closed class.

    Internals follow the two-envelope recipe: f(x) = sup of h over C to the
    left of x, g(x) = inf to the right; F approximates f from above (falling
    in the stage), G approximates g from below (rising), both regularized to
    be monotone in x (running max / running min over the internal grid) and
    in the stage index.  The stage axis is interpolated linearly, the value
    at x is F at the first F = G crossing; where the curves never cross the
    final F is returned once its gap to G is below 2^-n, else the achieved
    gap is reported.  Queries snap down to the internal grid, so outputs are
    exactly nondecreasing and C-grid points (depth <= grid_depth) are exact
    queries.
    """

    def __init__(
        self,
        h: PointFunctionOracle,
        enum: StagedOpenEnumeration,
        n: int,
        budget: ExtensionBudget | None = None,
    ):
        if h.lipschitz is None:
            raise DomainError("monotone extension needs a declared modulus")
        budget = budget or ExtensionBudget()
        lip = h.lipschitz
        gd = budget.grid_depth
        if gd is None:
            gd = n + 3
            while lip * Fraction(1, 1 << gd) > Fraction(1, 1 << (n + 3)):
                gd += 1
        prec = budget.precision if budget.precision is not None else n + 4
        max_stage = budget.max_stage if budget.max_stage is not None else len(enum)
        self.h, self.enum, self.n = h, enum, n
        self.grid_depth, self.precision = gd, prec
        self.epsilon = Fraction(1, 1 << n)
        self._margin = lip * Fraction(1, 1 << gd) + Fraction(1, 1 << prec)
        mid = h.sample(Fraction(1, 2), 2)
        self._hi_bound = mid + lip + 1
        self._lo_bound = mid - lip - 1
        final = min(len(enum), max_stage)
        self.stages = []
        step = 1
        while step < final:
            self.stages.append(step)
            step *= 2
        self.stages.append(final)
        self.stages = sorted(set(self.stages))
        size = (1 << gd) + 1
        self._grid = [Fraction(k, 1 << gd) for k in range(size)]
        self._f_rows = [[self._hi_bound] * size]  # sup side starts high
        self._g_rows = [[self._lo_bound] * size]  # inf side starts low
        for t in self.stages:
            f_row, g_row = self._stage_rows(enum.stage_class(t))
            prev_f, prev_g = self._f_rows[-1], self._g_rows[-1]
            self._f_rows.append([min(u, v) for u, v in zip(prev_f, f_row)])
            self._g_rows.append([max(u, v) for u, v in zip(prev_g, g_row)])
        self._check_monotone_on_class(enum.stage_class(self.stages[-1]))

    def _stage_rows(self, c_set: IntervalSet) -> tuple[list, list]:
        gd, prec = self.grid_depth, self.precision
        cands: list[Fraction] = []
        for part in c_set:
            cands.append(part.lo)
            cands.extend(
                q for q in _dyadic_points(part.lo, part.hi, gd) if q != part.lo and q != part.hi
            )
            if part.hi != part.lo:
                cands.append(part.hi)
        samples = [self.h.sample(q, prec) for q in cands]
        f_row, g_row = [], []
        j, running = 0, None
        for x in self._grid:
            while j < len(cands) and cands[j] <= x:
                running = samples[j] if running is None else max(running, samples[j])
                j += 1
            f_row.append(self._lo_bound if running is None else running + self._margin)
        j, running = len(cands) - 1, None
        for x in reversed(self._grid):
            while j >= 0 and cands[j] >= x:
                running = samples[j] if running is None else min(running, samples[j])
                j -= 1
            g_row.append(self._hi_bound if running is None else running - self._margin)
        g_row.reverse()
        return f_row, g_row

    def _check_monotone_on_class(self, c_set: IntervalSet) -> None:
        slack = Fraction(1, 1 << (self.precision - 1))
        run_q = run_max = None
        for part in c_set:
            for q in _refined_grid(part.lo, part.hi, Fraction(1, 1 << self.grid_depth)):
                v = self.h.sample(q, self.precision)
                if run_max is not None and v < run_max - slack:
                    raise DomainError(
                        f"h is not nondecreasing on the class: h({run_q}) > h({q})"
                    )
                if run_max is None or v > run_max:
                    run_q, run_max = q, v

    def value(self, x: Fraction) -> Fraction:
        x = Fraction(x)
        if not ZERO <= x <= ONE:
            raise DomainError(f"{x} outside [0,1]")
        i = (x * (1 << self.grid_depth)).numerator // (
            x * (1 << self.grid_depth)
        ).denominator
        i = min(i, len(self._grid) - 1)
        prev_f = prev_g = None
        for k in range(len(self._f_rows)):
            f_v, g_v = self._f_rows[k][i], self._g_rows[k][i]
            if f_v <= g_v:
                # crossed between stage k-1 and k: solve the linear crossing
                rise = (prev_f - prev_g) + (g_v - f_v)
                lam = (prev_f - prev_g) / rise
                return prev_f + lam * (f_v - prev_f)
            prev_f, prev_g = f_v, g_v
        if prev_f - prev_g < self.epsilon:
            return prev_f
        raise BudgetExhausted(
            f"envelope gap never closed at {x}", achieved=prev_f - prev_g
        )


def monotone_extension(
    h: PointFunctionOracle,
    enum: StagedOpenEnumeration,
    x: Fraction,
    n: int,
    budget: ExtensionBudget | None = None,
) -> Fraction:
    return MonotoneExtension(h, enum, n, budget).value(x)
