"""Exact martingales, slope martingales, strategy constructions, conditions.

A martingale here is a total map from bit strings to rationals with the
fairness identity M(s) = (M(s0) + M(s1))/2, checked exactly to whatever depth
a caller cares about.  Values may be negative for slope martingales (betting
with debt); every construction that promises nonnegativity gets it checked.

The approximation adapter realizes the index-n Cauchy approximant M(t)_n with
|M(t)_n - M(t)| <= 2^-n; the default adapter is the exact value itself, and
floor_adapter gives a genuinely rounded one so the index-0 tests exercise the
approximation path.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .bits import (
    ZERO,
    all_strings,
    cylinder_bounds,
    format_rational,
    is_prefix,
    parse_rational,
    validate_bits,
)
from .errors import BudgetExhausted, DomainError
from .intervals import Interval, canonicalize
from .piecewise import PiecewiseLinear


class Martingale:
    """Evaluator plus optional approximation adapter, memoized, immutable."""

    def __init__(
        self,
        evaluator: Callable[[str], Fraction],
        adapter: Callable[[str, int], Fraction] | None = None,
        nonnegative: bool = True,
        description: str = "",
    ):
        self._evaluator = evaluator
        self._memo: dict[str, Fraction] = {}
        self.nonnegative = nonnegative
        self.description = description
        self._adapter = adapter

    def value(self, tau: str) -> Fraction:
        if tau not in self._memo:
            self._memo[tau] = Fraction(self._evaluator(validate_bits(tau)))
        return self._memo[tau]

    def __call__(self, tau: str) -> Fraction:
        return self.value(tau)

    def approx(self, tau: str, n: int) -> Fraction:
        """M(tau)_n with error at most 2^-n; exact when no adapter is set."""
        if self._adapter is None:
            return self.value(tau)
        got = self._adapter(tau, n)
        if abs(got - self.value(tau)) > Fraction(1, 1 << n):
            raise DomainError(f"adapter broke its 2^-{n} error bound at {tau!r}")
        return got


def floor_adapter(m: Martingale) -> Callable[[str, int], Fraction]:
    """Adapter rounding down to the 2^-n grid (error < 2^-n)."""

    def adapt(tau: str, n: int) -> Fraction:
        v = m.value(tau) * (1 << n)
        return Fraction(v.numerator // v.denominator, 1 << n)

    return adapt


def with_floor_adapter(m: Martingale) -> Martingale:
    out = Martingale(m.value, nonnegative=m.nonnegative, description=m.description)
    out._adapter = floor_adapter(m)
    return out


def fairness_violations(m: Martingale, depth: int, base: str = "") -> list[str]:
    """Strings sigma (with base <= sigma, |sigma| < base+depth) breaking fairness."""
    bad = []
    for k in range(depth):
        for suffix in all_strings(k):
            sigma = base + suffix
            if m.value(sigma) * 2 != m.value(sigma + "0") + m.value(sigma + "1"):
                bad.append(sigma)
    return bad


def verify_fairness(m: Martingale, depth: int, base: str = "") -> bool:
    return not fairness_violations(m, depth, base)


def negativity_witnesses(m: Martingale, depth: int, base: str = "") -> list[str]:
    return [
        base + s
        for k in range(depth + 1)
        for s in all_strings(k)
        if m.value(base + s) < 0
    ]


class TableMartingale(Martingale):
    """Martingale given by a value table on all strings to a depth.

    Beyond the table the last tabulated prefix's value continues (the player
    stops betting), which keeps fairness exact at every depth.
    """

    def __init__(self, table: dict[str, Fraction], depth: int, nonnegative: bool | None = None):
        for k in range(depth + 1):
            for s in all_strings(k):
                if s not in table:
                    raise DomainError(f"table missing string {s!r} at depth {k}")
        bad = [
            s
            for k in range(depth)
            for s in all_strings(k)
            if table[s] * 2 != table[s + "0"] + table[s + "1"]
        ]
        if bad:
            raise DomainError(f"table is not fair at {bad[:3]}")
        self.table = {s: Fraction(v) for s, v in table.items()}
        self.depth = depth
        if nonnegative is None:
            nonnegative = all(v >= 0 for v in self.table.values())
        super().__init__(
            lambda tau: self.table[tau if len(tau) <= depth else tau[:depth]],
            nonnegative=nonnegative,
            description=f"table martingale, depth {depth}",
        )

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "values": {s: format_rational(v) for s, v in sorted(self.table.items())},
        }

    @classmethod
    def from_json(cls, payload: dict) -> "TableMartingale":
        return cls(
            {s: parse_rational(v) for s, v in payload["values"].items()},
            int(payload["depth"]),
        )


def slope_martingale(g, depth: int) -> Martingale:
    """tau -> slope of g over Cyl tau; exact, fair, possibly negative.

    g may be a PiecewiseLinear, any exact callable on rationals, or an oracle
    exposing one as .exact; an oracle without exact dyadic values cannot
    support an exact slope martingale and is rejected.
    """
    if isinstance(g, PiecewiseLinear):
        fn = g.value
    elif callable(g):
        fn = g
    else:
        fn = getattr(g, "exact", None)
        if fn is None:
            raise DomainError("slope martingale needs exact dyadic evaluations")

    def evaluator(tau: str) -> Fraction:
        if len(tau) > depth:
            raise DomainError(f"slope oracle only certified to depth {depth}")
        lo, hi = cylinder_bounds(tau)
        return (fn(hi) - fn(lo)) / (hi - lo)

    m = Martingale(evaluator, nonnegative=False, description=f"slope martingale to depth {depth}")
    m.valid_depth = depth
    return m


def martingale_to_function(m: Martingale, tau0: str, depth: int) -> PiecewiseLinear:
    """Integrate M over Cyl tau0: slope of the result over Cyl rho is M(rho).

    The base value is 0 at 0.tau0 and each leaf rho of length depth
    contributes M(rho) 2^-depth.  Rejects negative values: the result is
    promised nondecreasing and Lipschitz with constant max M.
    """
    validate_bits(tau0)
    if depth < len(tau0):
        raise DomainError(f"depth {depth} shallower than |tau0| = {len(tau0)}")
    lo, _hi = cylinder_bounds(tau0)
    step = Fraction(1, 1 << depth)
    xs = [lo]
    ys = [ZERO]
    acc = ZERO
    for suffix in all_strings(depth - len(tau0)):
        v = m.value(tau0 + suffix)
        if v < 0:
            raise DomainError(f"negative martingale value {v} at {tau0 + suffix!r}")
        acc += v * step
        xs.append(xs[-1] + step)
        ys.append(acc)
    return PiecewiseLinear(tuple(xs), tuple(ys))


def combine_scaled(m: Martingale, n: Martingale, sigma: str, delta: Fraction) -> Martingale:
    """M + 2^-|sigma| delta N, the capital-injection step of the forcing proof."""
    validate_bits(sigma)
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if n.value("") != 1:
        raise DomainError(f"N must start with capital 1, got {n.value('')}")
    scale = Fraction(1, 1 << len(sigma)) * delta
    return Martingale(
        lambda tau: m.value(tau) + scale * n.value(tau),
        nonnegative=m.nonnegative and n.nonnegative,
        description=f"combined at {sigma!r} with delta {delta}",
    )


def diagonalize_against(m: Martingale, sigma: str, q: Fraction, length: int) -> str:
    """Extend sigma to the given length always taking the cheaper child.

    Fairness keeps the minimum child at or below the parent, so the whole
    path stays strictly below q; that is re-checked exactly at every step.
    """
    validate_bits(sigma)
    if length < len(sigma):
        raise DomainError(f"length {length} shorter than |sigma| = {len(sigma)}")
    if m.value(sigma) >= q:
        raise DomainError(f"M(sigma) = {m.value(sigma)} is not below q = {q}")
    tau = sigma
    while len(tau) < length:
        v0, v1 = m.value(tau + "0"), m.value(tau + "1")
        tau += "0" if v0 <= v1 else "1"
        if m.value(tau) >= q:
            raise DomainError(
                f"min child {m.value(tau)} at {tau!r} reached q = {q}: evaluator is unfair"
            )
    return tau


def cap_at(m: Martingale, q: Fraction) -> Martingale:
    """Stop betting at the first prefix whose value exceeds q + 1.

    On the frozen subtree the value stays at the first-exceed value, so the
    cap is fair and never exceeds its pre-cap value there.
    """

    def evaluator(tau: str) -> Fraction:
        for i in range(len(tau) + 1):
            v = m.value(tau[:i])
            if v > q + 1:
                return v
        return m.value(tau)

    return Martingale(
        evaluator, nonnegative=m.nonnegative, description=f"capped above {q}+1"
    )


def _low_child(sg: Martingale, tau: str) -> str | None:
    """First child whose index-0 approximant is at most 1."""
    if sg.approx(tau + "0", 0) <= 1:
        return "0"
    if sg.approx(tau + "1", 0) <= 1:
        return "1"
    return None


def anti_debt_strategy(sg: Martingale, sigma: str, mode: int, depth: int) -> Martingale:
    """The nonnegative strategies of the slope-martingale dichotomy.

    Case 1 (a low child exists within depth): start with capital 1 at sigma,
    put everything on the sibling of the first low child at each node that
    has one, abandon the low child's subtree.  Case 2 (no low child within
    depth): copy S_g while both children's approximants stay above 1, freeze
    otherwise; freezing also applies past the certified depth.  Off the cone
    of sigma the value is the starting capital, which keeps global fairness.
    The requested mode must match the detected pattern.
    """
    validate_bits(sigma)
    if mode not in (1, 2):
        raise DomainError(f"mode must be 1 or 2, got {mode}")
    if depth < len(sigma):
        raise DomainError("depth must reach at least sigma")
    lows = [
        sigma + s
        for k in range(depth - len(sigma))
        for s in all_strings(k)
        if _low_child(sg, sigma + s) is not None
    ]
    if mode == 1 and not lows:
        raise DomainError(f"mode 1 requested but no low child found to depth {depth}")
    if mode == 2 and lows:
        raise DomainError(
            f"mode 2 requested but {lows[0]!r} has a low child within depth {depth}"
        )

    if mode == 1:
        def evaluator(rho: str) -> Fraction:
            if not is_prefix(sigma, rho):
                return Fraction(1)
            cap = Fraction(1)
            for i in range(len(sigma), len(rho)):
                tau = rho[:i]
                low = _low_child(sg, tau) if i < depth else None
                if low is None:
                    continue
                if rho[i] == low:
                    return ZERO
                cap *= 2
            return cap

        return Martingale(evaluator, nonnegative=True, description="anti-debt case 1")

    start = sg.value(sigma)
    if start < 0:
        raise DomainError(
            f"mode 2 needs S_g(sigma) >= 0, got {start}: pattern mismatch"
        )

    def evaluator(rho: str) -> Fraction:
        if not is_prefix(sigma, rho):
            return start
        val = start
        for i in range(len(sigma), len(rho)):
            tau = rho[:i]
            if i < depth and sg.approx(tau + "0", 0) > 1 and sg.approx(tau + "1", 0) > 1:
                val = sg.value(rho[: i + 1])
            else:
                break
        return val

    return Martingale(evaluator, nonnegative=True, description="anti-debt case 2")


@dataclass(frozen=True)
class Condition:
    """Forcing condition <sigma, M, q>; valid only while M(sigma) < q."""

    sigma: str
    martingale: Martingale
    q: Fraction

    def __post_init__(self):
        validate_bits(self.sigma)
        v = self.martingale.value(self.sigma)
        if v >= self.q:
            raise DomainError(f"invalid condition: M({self.sigma!r}) = {v} >= q = {self.q}")

    def to_json(self) -> dict:
        if not isinstance(self.martingale, TableMartingale):
            raise DomainError("only table martingales serialize")
        return {
            "sigma": self.sigma,
            "q": format_rational(self.q),
            "martingale": self.martingale.to_json(),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Condition":
        return cls(
            payload["sigma"],
            TableMartingale.from_json(payload["martingale"]),
            parse_rational(payload["q"]),
        )


def condition_extension_violations(c2: Condition, c1: Condition, depth: int) -> list[str]:
    """Reasons c2 fails to extend c1, checked exhaustively to depth."""
    problems = []
    if not is_prefix(c1.sigma, c2.sigma):
        problems.append(f"{c2.sigma!r} does not extend {c1.sigma!r}")
        return problems
    if c2.q > c1.q:
        problems.append(f"q' = {c2.q} exceeds q = {c1.q}")
    for i in range(len(c1.sigma), len(c2.sigma) + 1):
        rho = c2.sigma[:i]
        if c1.martingale.value(rho) >= c1.q:
            problems.append(f"base martingale reaches q on the chain at {rho!r}")
    for k in range(depth - len(c2.sigma) + 1):
        for s in all_strings(k):
            tau = c2.sigma + s
            if c2.martingale.value(tau) < c2.q and c1.martingale.value(tau) >= c1.q:
                problems.append(f"implication fails at {tau!r}")
                return problems
    return problems


def condition_extends(c2: Condition, c1: Condition, depth: int) -> bool:
    """Depth-bounded certificate for the forcing extension relation."""
    return not condition_extension_violations(c2, c1, depth)


@dataclass(frozen=True)
class SavingsExtension:
    tau: str
    r: Fraction
    s: Fraction
    d_hat: Fraction
    reachable_min: Fraction
    search_depth: int
    condition: Condition


def savings_extension(cond: Condition, eps: Fraction, search_depth: int) -> SavingsExtension:
    """Find tau realizing (almost) the depth-bounded savings of M below q.

    d_hat is the exact minimum of M over all extensions of sigma to
    search_depth, reachable or not.  tau is the shortest, then leftmost,
    reachable extension (every intermediate value < q) attaining the
    reachable minimum, required to lie below d_hat + eps (q - d_hat); r and s
    sit at thirds of the remaining gap, so M(tau) < r < s and
    s - d_hat <= eps (q - d_hat) hold exactly.  When the reachable minimum
    does not qualify (the true argmin hides behind a q-wall), that is
    reported as exhaustion with the achieved minimum, not papered over.
    """
    if not ZERO < eps < 1:
        raise DomainError(f"eps must be in (0,1), got {eps}")
    m, q, sigma = cond.martingale, cond.q, cond.sigma
    if search_depth < len(sigma):
        raise DomainError("search_depth must reach sigma")
    d_hat: Fraction | None = None
    reach_min: Fraction | None = None
    best_tau: str | None = None
    # exact global minimum (for d_hat) over the full depth-bounded subtree
    for k in range(search_depth - len(sigma) + 1):
        for s_ in all_strings(k):
            v = m.value(sigma + s_)
            if d_hat is None or v < d_hat:
                d_hat = v
    # reachable minimum: descend only below-q nodes
    frontier = [sigma] if m.value(sigma) < q else []
    while frontier:
        nxt = []
        for tau in frontier:
            v = m.value(tau)
            if reach_min is None or v < reach_min:
                reach_min = v
                best_tau = tau
            if len(tau) < search_depth:
                for b in "01":
                    if m.value(tau + b) < q:
                        nxt.append(tau + b)
        frontier = nxt
    assert d_hat is not None
    if reach_min is None or best_tau is None:
        raise BudgetExhausted(
            f"no extension of {sigma!r} stays below q = {q}", achieved=None
        )
    cap = d_hat + eps * (q - d_hat)
    if reach_min >= cap:
        raise BudgetExhausted(
            f"no qualifying tau within depth {search_depth}: reachable minimum "
            f"{reach_min} is not below d_hat + eps (q - d_hat) = {cap}",
            achieved=reach_min,
        )
    gap = cap - reach_min
    r = reach_min + gap / 3
    s = reach_min + 2 * gap / 3
    return SavingsExtension(
        best_tau, r, s, d_hat, reach_min, search_depth, Condition(best_tau, m, r)
    )


def threshold_cylinders(m: Martingale, base: str, q: Fraction, depth: int) -> tuple[str, ...]:
    """Minimal extensions of base (to depth) where M first reaches q."""
    out: list[str] = []

    def walk(tau: str):
        if m.value(tau) >= q:
            out.append(tau)
            return
        if len(tau) >= depth:
            return
        walk(tau + "0")
        walk(tau + "1")

    walk(validate_bits(base))
    return tuple(out)


def claim5_density_records(
    m: Martingale,
    tau: str,
    q: Fraction,
    s: Fraction,
    eps: Fraction,
    depth: int,
    window_depth: int,
) -> list[tuple[str, Fraction, Fraction, bool]]:
    """Exact window checks for the savings claim.

    D is the union of minimal cylinders above tau where M reaches q; for each
    basic dyadic window inside Cyl tau of depth at most window_depth whose
    slope of the integrated function stays below s, the relative measure of D
    in the window must stay within eps.
    """
    if window_depth > depth:
        raise DomainError("windows cannot be finer than the integration depth")
    f = martingale_to_function(m, tau, depth)
    dset = canonicalize(
        [Interval(*cylinder_bounds(rho)) for rho in threshold_cylinders(m, tau, q, depth)]
    )
    lo, hi = cylinder_bounds(tau)
    records = []
    for j in range(len(tau), window_depth + 1):
        step = Fraction(1, 1 << j)
        k = lo / step
        while k * step < hi:
            a = k * step
            b = a + step
            k += 1
            slope = (f.value(b) - f.value(a)) / step
            if slope >= s:
                continue
            rel = dset.intersect_interval(Interval(a, b)).measure / step
            records.append(
                (f"window [{a},{b}] slope {slope} < s", rel, eps, rel <= eps)
            )
    return records


@dataclass(frozen=True)
class ForcingStep:
    kind: str
    condition: Condition
    extends_ok: bool
    payload: dict


def forcing_chain(start: Condition, steps, check_depth: int) -> list[ForcingStep]:
    """Meet a finite list of dense-set targets, verifying each extension.

    steps is a sequence of ("length", n), ("claim3", N, delta-or-None) or
    ("savings", eps, search_depth); each produced condition is checked
    against its predecessor with the depth-bounded extension certificate.
    """
    chain: list[ForcingStep] = []
    cur = start
    for spec in steps:
        kind = spec[0]
        if kind == "length":
            n = spec[1]
            tau = diagonalize_against(cur.martingale, cur.sigma, cur.q, n)
            new = Condition(tau, cur.martingale, cur.q)
            payload = {"length": n}
        elif kind == "claim3":
            n_mart = spec[1]
            delta = spec[2] if len(spec) > 2 and spec[2] is not None else None
            gap = cur.q - cur.martingale.value(cur.sigma)
            if delta is None:
                weight = Fraction(1, 1 << len(cur.sigma)) * n_mart.value(cur.sigma)
                delta = gap / (2 * (1 + weight))
            combined = combine_scaled(cur.martingale, n_mart, cur.sigma, delta)
            new = Condition(cur.sigma, combined, cur.q)
            payload = {"delta": delta}
        elif kind == "savings":
            ext = savings_extension(cur, spec[1], spec[2])
            new = ext.condition
            payload = {"r": ext.r, "s": ext.s, "d_hat": ext.d_hat}
        else:
            raise DomainError(f"unknown forcing step {kind!r}")
        ok = condition_extends(new, cur, check_depth)
        chain.append(ForcingStep(kind, new, ok, payload))
        cur = new
    return chain
