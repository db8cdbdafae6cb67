"""Spike construction defeating the Denjoy alternative at a rational limit.

From a finite enumeration of closed rational intervals the builder tracks the
leftmost uncovered point alpha, assigns each stage a flat or a triangular
spike, and sizes spike heights 2^(-n/2) by the smallest dyadic scale whose
grid meets the previous increase interval.  The verifier then certifies, per
realized height parameter k, a straddling slope <= -2^(k/2) at the final
alpha together with zero-slope witnesses on the upper side.  All comparisons
stay exact: odd-k heights are sqrt(2)-multiples compared via squares.

Policy constants (the height rule needs two choices the prose leaves open):
qualifying multiples of 2^-n are positive (0 never qualifies) and endpoint
containment counts; the first increase measures its own interval, with
alpha_0 = 0 as the previous mark.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import PointFunctionOracle
from .errors import DomainError, EnumerationOverlapError, SchemaError
from .bits import ONE, ZERO, format_rational, parse_rational
from .intervals import Interval, IntervalSet
from .roottwo import QuadValue, half_power, sqrt2_power

MAX_HEIGHT_EXPONENT = 128

OVERLAP_POLICIES = ("reject", "split")


def smallest_dyadic_exponent(lo: Fraction, hi: Fraction) -> tuple[int, Fraction]:
    """Smallest n >= 0 such that [lo, hi] holds a positive multiple of 2^-n."""
    if lo > hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    for n in range(MAX_HEIGHT_EXPONENT + 1):
        scale = 1 << n
        k = -((-lo * scale).numerator // (-lo * scale).denominator)  # ceil
        if k < 1:
            k = 1
        if Fraction(k, scale) <= hi:
            return n, Fraction(k, scale)
    raise DomainError(
        f"no positive dyadic multiple up to 2^-{MAX_HEIGHT_EXPONENT} in [{lo}, {hi}]"
    )


def largest_dyadic_multiple(lo: Fraction, hi: Fraction, n: int) -> Fraction | None:
    """Largest positive multiple of 2^-n in [lo, hi], if any."""
    scale = 1 << n
    k = (hi * scale).numerator // (hi * scale).denominator  # floor
    if k < 1 or Fraction(k, scale) < lo:
        return None
    return Fraction(k, scale)


@dataclass(frozen=True)
class SpikeStage:
    interval: Interval
    kind: str  # "flat" | "spike"
    height_exponent: int | None = None
    source: Interval | None = None  # increase interval that set the exponent
    anchor: Fraction | None = None  # its qualifying multiple of 2^-n

    def __post_init__(self):
        if self.kind not in ("flat", "spike"):
            raise DomainError(f"stage kind must be flat or spike, got {self.kind!r}")
        if (self.kind == "spike") != (self.height_exponent is not None):
            raise DomainError("spike stages and only they carry a height exponent")

    @property
    def height(self):
        """2^(-n/2): Fraction for even n, sqrt(2)-multiple for odd n."""
        if self.kind == "flat":
            return ZERO
        return half_power(self.height_exponent)

    def to_json(self) -> dict:
        out = {"interval": self.interval.to_json(), "kind": self.kind}
        if self.kind == "spike":
            out["height_exponent"] = self.height_exponent
            out["source"] = self.source.to_json()
            out["anchor"] = format_rational(self.anchor)
        return out

    @staticmethod
    def from_json(obj: dict) -> "SpikeStage":
        if obj.get("kind") == "flat":
            return SpikeStage(Interval.from_json(obj["interval"]), "flat")
        return SpikeStage(
            Interval.from_json(obj["interval"]),
            "spike",
            int(obj["height_exponent"]),
            Interval.from_json(obj["source"]),
            parse_rational(obj["anchor"]),
        )


@dataclass(frozen=True)
class SpikePlan:
    stages: tuple[SpikeStage, ...]

    @property
    def spike_stages(self) -> tuple[SpikeStage, ...]:
        return tuple(s for s in self.stages if s.kind == "spike")

    def realized_exponents(self) -> tuple[int, ...]:
        return tuple(sorted({s.height_exponent for s in self.spike_stages}))

    def max_slope(self):
        """Exact Lipschitz constant: max over spikes of 2 v / |I_s|."""
        best = QuadValue(ZERO, ZERO)
        for s in self.spike_stages:
            cand = 2 * QuadValue(ZERO, ZERO) + s.height  # coerce to QuadValue
            cand = 2 * cand / s.interval.length
            if cand > best:
                best = cand
        return best

    def rational_lipschitz(self) -> Fraction:
        """Rational upper bound on max_slope (sqrt 2 < 3/2)."""
        m = self.max_slope()
        if isinstance(m, QuadValue):
            return m.a + m.b * Fraction(3, 2)
        return Fraction(m)

    def to_json(self) -> dict:
        return {"stages": [s.to_json() for s in self.stages]}

    @staticmethod
    def from_json(obj: dict) -> "SpikePlan":
        return SpikePlan(tuple(SpikeStage.from_json(s) for s in obj["stages"]))


@dataclass(frozen=True)
class AlphaTrace:
    alphas: tuple[Fraction, ...]  # length = stage count + 1, alpha_0 = 0

    def __post_init__(self):
        if not self.alphas or self.alphas[0] != ZERO:
            raise DomainError("trace must start at alpha_0 = 0")
        for a, b in zip(self.alphas, self.alphas[1:]):
            if b < a:
                raise DomainError(f"alpha trace decreases: {a} then {b}")

    @property
    def final(self) -> Fraction:
        return self.alphas[-1]

    def to_json(self) -> dict:
        return {"alphas": [format_rational(a) for a in self.alphas]}

    @staticmethod
    def from_json(obj: dict) -> "AlphaTrace":
        return AlphaTrace(tuple(parse_rational(a) for a in obj["alphas"]))


def leftmost_uncovered(cover: IntervalSet) -> Fraction:
    """Leftmost point of [0,1] minus the union; 1 when nothing remains."""
    comp = cover.complement()
    return comp.parts[0].lo if comp.parts else ONE


def _normalize_enumeration(enumeration) -> list[Interval]:
    out = []
    for item in enumeration:
        if isinstance(item, Interval):
            out.append(item)
        else:
            lo, hi = item
            out.append(Interval(Fraction(lo), Fraction(hi)))
    return out


def build_counterexample(
    enumeration, overlap_policy: str = "reject"
) -> tuple[SpikePlan, AlphaTrace, PointFunctionOracle]:
    """Assign flat/spike per stage and return the exact evaluation oracle.

    Stage intervals may share endpoints but not interior; under "reject" an
    interior overlap raises, under "split" the incoming interval is clipped
    to the uncovered parts and each resulting piece becomes its own stage
    (fully covered intervals vanish).
    """
    if overlap_policy not in OVERLAP_POLICIES:
        raise DomainError(f"overlap_policy must be one of {OVERLAP_POLICIES}")
    pending = _normalize_enumeration(enumeration)

    stages: list[SpikeStage] = []
    alphas: list[Fraction] = [ZERO]
    covered = IntervalSet(())
    increases: list[int] = []  # indices of spike stages

    queue = list(reversed(pending))
    while queue:
        iv = queue.pop()
        clash = covered.intersect_interval(iv)
        if clash.measure > ZERO:
            if overlap_policy == "reject":
                raise EnumerationOverlapError(
                    f"stage interval {iv} overlaps earlier coverage beyond endpoints"
                )
            pieces = IntervalSet((iv,)).subtract_open(covered).drop_degenerate()
            queue.extend(reversed(pieces.parts))
            continue

        alpha = alphas[-1]
        covered = covered.union(IntervalSet((iv,)))
        alpha_next = leftmost_uncovered(covered)
        s = len(stages)
        if alpha_next > alpha:
            if increases:
                t = increases[-1]
                source = Interval(alphas[t], alphas[t + 1])
            else:
                source = Interval(ZERO, alpha_next)
            n, anchor = smallest_dyadic_exponent(source.lo, source.hi)
            stages.append(SpikeStage(iv, "spike", n, source, anchor))
            increases.append(s)
        else:
            stages.append(SpikeStage(iv, "flat"))
        alphas.append(alpha_next)

    plan = SpikePlan(tuple(stages))
    trace = AlphaTrace(tuple(alphas))
    return plan, trace, oracle_from_plan(plan)


def plan_value(plan: SpikePlan, q: Fraction):
    """Exact f(q): 0 off spike intervals, triangular inside them."""
    q = Fraction(q)
    for s in plan.stages:
        iv = s.interval
        if iv.lo <= q <= iv.hi and s.kind == "spike" and not iv.is_degenerate:
            mid = (iv.lo + iv.hi) / 2
            if q <= mid:
                return s.height * ((q - iv.lo) / (mid - iv.lo))
            return s.height * ((iv.hi - q) / (iv.hi - mid))
    return ZERO


def oracle_from_plan(plan: SpikePlan, name: str = "denjoy-counterexample") -> PointFunctionOracle:
    def sampler(q: Fraction, n: int) -> Fraction:
        v = plan_value(plan, q)
        return v.approx(n) if isinstance(v, QuadValue) else v

    return PointFunctionOracle(
        sampler,
        domain="all",
        exact=lambda q: plan_value(plan, q),
        lipschitz=plan.rational_lipschitz(),
        name=name,
    )


def oracle_descriptor(plan: SpikePlan, name: str = "denjoy-counterexample") -> dict:
    """JSON descriptor from which oracle_from_plan reconstructs f."""
    return {"oracle": "spike-plan", "name": name, "plan": plan.to_json()}


def oracle_from_descriptor(desc: dict) -> PointFunctionOracle:
    if desc.get("oracle") != "spike-plan":
        raise SchemaError(f"not a spike-plan descriptor: {desc.get('oracle')!r}")
    return oracle_from_plan(SpikePlan.from_json(desc["plan"]), desc.get("name", ""))


def default_enumeration() -> list[Interval]:
    """Eighteen intervals marching on 196607/196608, realizing heights 1..17.

    Cut points sit at 1 - 2^-k + 2^-(k+3), so stage k contains the odd
    multiple 1 - 2^-k of 2^-k and nothing coarser: the k-th stage interval
    has scale exponent exactly k, and the following stage carries the height
    2^(-k/2) spike within 2^-k of the final alpha.
    """
    cuts = [ZERO]
    for k in range(1, 18):
        cuts.append(ONE - Fraction(1, 1 << k) + Fraction(1, 1 << (k + 3)))
    cuts.append(ONE - Fraction(1, 1 << 17) + Fraction(1, 1 << 18))
    return [Interval(a, b) for a, b in zip(cuts, cuts[1:])]


@dataclass(frozen=True)
class SlopeCertificate:
    k: int
    x_k: Fraction  # spike midpoint
    q: Fraction  # rational beyond the final alpha
    b_k: Fraction  # anchoring multiple of 2^-k
    slope: object  # Fraction | QuadValue
    threshold: object  # -2^(k/2)
    holds: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "x_k": format_rational(self.x_k),
            "q": format_rational(self.q),
            "b_k": format_rational(self.b_k),
            "slope": _value_json(self.slope),
            "threshold": _value_json(self.threshold),
            "holds": self.holds,
            "note": self.note,
        }


@dataclass(frozen=True)
class ZeroWitness:
    k: int
    a: Fraction
    b: Fraction
    slope_is_zero: bool

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "a": format_rational(self.a),
            "b": format_rational(self.b),
            "slope_is_zero": self.slope_is_zero,
        }


@dataclass(frozen=True)
class TailBound:
    prefix_groups: int
    tail_sup: object  # max height past the prefix
    tail_sum: object  # exact sum of group sup-norms past the prefix
    series_bound: object  # closed-form sum_{n > m} 2^(-n/2)
    holds: bool

    def to_json(self) -> dict:
        return {
            "prefix_groups": self.prefix_groups,
            "tail_sup": _value_json(self.tail_sup),
            "tail_sum": _value_json(self.tail_sum),
            "series_bound": _value_json(self.series_bound),
            "holds": self.holds,
        }


@dataclass(frozen=True)
class DenjoyFailureReport:
    alpha_final: Fraction
    certificates: tuple[SlopeCertificate, ...]
    unrealized: tuple[int, ...]
    zero_witnesses: tuple[ZeroWitness, ...]
    straddle_bound: Fraction  # declared bound for beyond-region slopes
    straddle_max: object | None  # largest slope seen in the sweep
    straddle_ok: bool
    upper_estimate: object  # best upper slope near alpha (0 when witnessed)
    lower_estimate: object  # most negative slope seen
    groups: tuple[tuple[int, int], ...]  # (exponent, spike count)
    tail_bounds: tuple[TailBound, ...]
    lipschitz: Fraction
    limit_claim: str  # finite-stage disclaimer; never an infinity claim

    @property
    def all_hold(self) -> bool:
        return (
            all(c.holds for c in self.certificates)
            and all(w.slope_is_zero for w in self.zero_witnesses)
            and self.straddle_ok
            and all(t.holds for t in self.tail_bounds)
        )

    def to_json(self) -> dict:
        return {
            "alpha_final": format_rational(self.alpha_final),
            "certificates": [c.to_json() for c in self.certificates],
            "unrealized": list(self.unrealized),
            "zero_witnesses": [w.to_json() for w in self.zero_witnesses],
            "straddle_bound": format_rational(self.straddle_bound),
            "straddle_max": None if self.straddle_max is None else _value_json(self.straddle_max),
            "straddle_ok": self.straddle_ok,
            "upper_estimate": _value_json(self.upper_estimate),
            "lower_estimate": _value_json(self.lower_estimate),
            "groups": [list(g) for g in self.groups],
            "tail_bounds": [t.to_json() for t in self.tail_bounds],
            "lipschitz": format_rational(self.lipschitz),
            "limit_claim": self.limit_claim,
            "all_hold": self.all_hold,
        }


def _value_json(v) -> dict:
    if isinstance(v, QuadValue):
        return v.to_json()
    return QuadValue(Fraction(v), ZERO).to_json()


def _plan_zeros(plan: SpikePlan, alpha_final: Fraction) -> list[Fraction]:
    """Known-zero points of f at or below the final alpha."""
    zeros = {ZERO, alpha_final}
    for s in plan.stages:
        zeros.update((s.interval.lo, s.interval.hi))
    return sorted(z for z in zeros if z <= alpha_final and plan_value(plan, z) == 0)


def verify_denjoy_failure(
    plan: SpikePlan,
    trace: AlphaTrace,
    f: PointFunctionOracle,
    k_max: int,
) -> DenjoyFailureReport:
    """Certify lower-slope blowup and upper-slope vanishing at the final alpha.

    Requested k without a spike of that height parameter are reported, not
    raised.  Every inequality in the report is exact; slopes at odd k are
    sqrt(2)-multiples and compare via squared arithmetic.
    """
    if k_max < 0:
        raise DomainError("k_max must be nonnegative")
    alpha = trace.final
    by_exponent: dict[int, SpikeStage] = {}
    for s in plan.spike_stages:  # keep the last spike per exponent: nearest alpha
        by_exponent[s.height_exponent] = s

    certificates = []
    unrealized = []
    for k in range(1, k_max + 1):
        stage = by_exponent.get(k)
        if stage is None:
            unrealized.append(k)
            continue
        iv = stage.interval
        x_k = (iv.lo + iv.hi) / 2
        step = Fraction(1, 1 << k)
        b_k = largest_dyadic_multiple(stage.source.lo, stage.source.hi, k)
        if b_k is None:  # cannot happen when the exponent rule chose k
            b_k = stage.anchor
        room = b_k + step
        if room <= alpha:
            certificates.append(
                SlopeCertificate(
                    k, x_k, alpha, b_k, ZERO, -sqrt2_power(k), False,
                    note="no rational beyond alpha within 2^-k of b_k",
                )
            )
            continue
        q = (max(alpha, b_k) + room) / 2
        f_q = f.exact(q)
        f_x = f.exact(x_k)
        slope_val = (f_q - f_x) / (q - x_k)
        threshold = -sqrt2_power(k)
        holds = (
            q > alpha
            and q - b_k < step
            and b_k <= x_k
            and f_q == 0
            and slope_val <= threshold
        )
        certificates.append(
            SlopeCertificate(k, x_k, q, b_k, slope_val, threshold, holds)
        )

    zeros = _plan_zeros(plan, alpha)
    zero_witnesses = []
    for k in range(1, k_max + 1):
        half = Fraction(1, 1 << (k + 1))
        a_cands = [z for z in zeros if alpha - z <= half]
        b = min(alpha + half, ONE)
        if a_cands and b == a_cands[-1] and len(a_cands) > 1:
            a_cands.pop()
        if not a_cands or b == a_cands[-1]:
            continue  # alpha = 1 with no distinct zero nearby; nothing to witness
        a = a_cands[-1]
        s = (f.exact(b) - f.exact(a)) / (b - a)
        zero_witnesses.append(ZeroWitness(k, a, b, s == 0))

    region_end = max((s.interval.hi for s in plan.spike_stages), default=ZERO)
    lefts = set(zeros)
    for s in plan.spike_stages:
        iv = s.interval
        lefts.update(
            p for p in (
                (iv.lo + iv.hi) / 2,
                (3 * iv.lo + iv.hi) / 4,
                (iv.lo + 3 * iv.hi) / 4,
            ) if p <= alpha
        )
    rights = {ONE} if alpha < ONE else set()
    gap = ONE - alpha
    for j in range(1, min(k_max, 20) + 1):
        b = alpha + gap / (1 << j)
        if b > region_end and b > alpha:
            rights.add(b)
    straddle_bound = ZERO  # f >= 0 and f = 0 beyond the region force slope <= 0
    straddle_max = None
    straddle_ok = True
    for b in sorted(rights):
        f_b = f.exact(b)
        for a in sorted(lefts):
            if a >= b:
                continue
            s = (f_b - f.exact(a)) / (b - a)
            if straddle_max is None or s > straddle_max:
                straddle_max = s
            if s > straddle_bound:
                straddle_ok = False

    slopes_seen = [c.slope for c in certificates if c.holds]
    if straddle_max is not None:
        slopes_seen.append(straddle_max)
    lower_estimate = min(slopes_seen, default=ZERO)
    upper_estimate = ZERO if zero_witnesses or not plan.spike_stages else straddle_max

    counts: dict[int, int] = {}
    for s in plan.spike_stages:
        counts[s.height_exponent] = counts.get(s.height_exponent, 0) + 1
    groups = tuple(sorted(counts.items()))
    series_scale = 2 + sqrt2_power(1)  # sum_{j>=0} 2^(-j/2) = 2 + sqrt(2)
    tail_bounds = []
    for m in range(len(groups) + 1):
        tail = groups[m:]
        tail_sup = half_power(tail[0][0]) if tail else ZERO
        tail_sum = sum((QuadValue(ZERO, ZERO) + half_power(n) for n, _ in tail),
                       QuadValue(ZERO, ZERO))
        cutoff = groups[m - 1][0] if m > 0 else 0
        bound = half_power(cutoff + 1) * series_scale
        holds = tail_sup <= bound and tail_sum <= bound
        tail_bounds.append(TailBound(m, tail_sup, tail_sum, bound, holds))

    return DenjoyFailureReport(
        alpha_final=alpha,
        certificates=tuple(certificates),
        unrealized=tuple(unrealized),
        zero_witnesses=tuple(zero_witnesses),
        straddle_bound=straddle_bound,
        straddle_max=straddle_max,
        straddle_ok=straddle_ok,
        upper_estimate=upper_estimate,
        lower_estimate=lower_estimate,
        groups=groups,
        tail_bounds=tuple(tail_bounds),
        lipschitz=plan.rational_lipschitz(),
        limit_claim="finite-stage certificates only; no claim about the limit",
    )
