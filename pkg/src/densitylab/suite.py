"""The ten-battery verification suite over seeded instance batches.

Each battery checks one family of inequalities at its stated tolerance;
"exact" batteries compare rationals with no slack anywhere.  Outcomes carry
the full check list so reports can show both sides of every inequality.
Wall-clock seconds are tracked for the runtime budget line only and never
enter serialized reports.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .bits import ONE, ZERO, all_strings
from .calculus import (
    MonotoneExtension,
    identity_oracle,
    interval_extremum,
    piecewise_linear_oracle,
    polynomial_oracle,
    pseudo_derivative_estimate,
)
from .counterexample import (
    build_counterexample,
    default_enumeration,
    verify_denjoy_failure,
)
from .density import brute_force_low_density_oracle, low_density_open_set
from .errors import BudgetExhausted
from .instances import (
    COVERING_EPSILONS,
    battery_rng,
    claim5_instance,
    covering_instance,
    domination_instance,
    escape_instance,
    extension_instance,
    forcing_instance,
    golden_extremum_cases,
    normalized_fair_table,
    oracle_match_instance,
    porosity_instance,
    random_fair_table,
)
from .martingales import (
    cap_at,
    claim5_density_records,
    combine_scaled,
    condition_extends,
    fairness_violations,
    martingale_to_function,
    slope_martingale,
)
from .piecewise import PiecewiseLinear
from .porosity import porosity_test
from .randomness import (
    CylinderDifferenceTest,
    build_domination_tests,
    build_escape_sets,
    least_density_drop,
)
from .report import Check, check_rows
from .roottwo import QuadValue

DEFAULT_SEED = 1


@dataclass
class CriterionOutcome:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def violations(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def add(self, rows, prefix: str = "") -> None:
        for row in rows:
            c = row if isinstance(row, Check) else Check(*row[:3], bool(row[3]))
            if prefix:
                c = Check(f"{prefix}: {c.name}", c.lhs, c.rhs, c.ok, c.note)
            self.checks.append(c)


def _count_check(out, name: str, count: int) -> None:
    out.checks.append(Check(f"{name} == 0", Fraction(count), ZERO, count == 0))


def criterion_covering(seed: int) -> CriterionOutcome:
    """200 instances x 3 thresholds: both covering bounds, exact."""
    out = CriterionOutcome(1, "covering bounds")
    for index in range(200):
        c = covering_instance(seed, index)
        for eps in COVERING_EPSILONS:
            fc = low_density_open_set(c, eps)
            out.add(check_rows(fc.inequalities()), f"instance {index} eps {eps}")
    return out


def criterion_oracle_match(seed: int) -> CriterionOutcome:
    """50 instances: fat-interval U equals the prefix-mass oracle exactly."""
    out = CriterionOutcome(2, "U-oracle equivalence")
    for index in range(50):
        c, eps = oracle_match_instance(seed, index)
        fc = low_density_open_set(c, eps)
        extras = [x for i in fc.fat_intervals for x in (i.lo, i.hi)]
        oracle = brute_force_low_density_oracle(c, eps, 8, extras)
        a = fc.U.drop_degenerate()
        b = oracle.drop_degenerate()
        diff = a.subtract(b).measure + b.subtract(a).measure
        out.checks.append(
            Check(
                f"instance {index}: U equals the oracle after boundary "
                f"normalization (eps {eps}), symmetric difference",
                diff,
                ZERO,
                a == b,
            )
        )
    return out


def criterion_porosity(seed: int) -> CriterionOutcome:
    """50 enumerations: per-node and per-level decay bounds, exact."""
    out = CriterionOutcome(3, "porosity bounds")
    for index in range(50):
        enum, c, levels = porosity_instance(seed, index)
        pt = porosity_test(enum, c, levels, 200)
        prefix = f"instance {index} (c={c}, levels={levels})"
        out.add(check_rows(pt.bound_checks()), prefix)
        bad = [r for r in pt.node_records if not r[3]]
        out.checks.append(
            Check(
                f"{prefix}: all {len(pt.node_records)} per-node bounds hold, "
                "violations",
                Fraction(len(bad)),
                ZERO,
                not bad,
            )
        )
        if pt.node_records:
            worst = max(pt.node_records, key=lambda r: r[1] / r[2])
            out.add(check_rows([worst]), f"{prefix}: tightest node")
        out.checks.append(
            Check(
                f"{prefix}: antichain and stage-nesting verified during "
                "construction",
                ONE,
                ONE,
                True,
            )
        )
    return out


def criterion_escape(seed: int) -> CriterionOutcome:
    """30 difference tests: box decay, escape certificates, component caps."""
    out = CriterionOutcome(4, "escape sets")
    for index in range(30):
        inst = escape_instance(seed, index)
        dt = CylinderDifferenceTest(inst.enum, inst.component_fn())
        esc = build_escape_sets(dt, inst.r, inst.m_max, inst.z)
        prefix = f"instance {index} (r={inst.r}, m_max={inst.m_max})"
        out.add(check_rows(esc.records), prefix)
        out.add(check_rows(dt.certify()), f"{prefix}: component cap")
        agrees = esc.verdict == inst.flavor
        out.checks.append(
            Check(
                f"{prefix}: verdict matches the constructed dynamics "
                f"({inst.flavor})",
                Fraction(int(agrees)),
                ONE,
                agrees,
            )
        )
    return out


def criterion_domination(seed: int) -> CriterionOutcome:
    """12 scenarios: Solovay budget plus independently recomputed captures."""
    out = CriterionOutcome(5, "domination tests")
    for index in range(12):
        scenario, case, n_blocks = domination_instance(seed, index)
        if case == 1:
            h = lambda s: least_density_drop(scenario, s)  # noqa: E731
        else:
            chain = [least_density_drop(scenario, 0)]
            for _ in range(n_blocks):
                chain.append(least_density_drop(scenario, chain[-1]))
            h = chain.__getitem__
        dom = build_domination_tests(scenario, h, case, n_blocks)
        prefix = f"instance {index} (case {case})"
        out.add(check_rows(dom.records), prefix)
        for i, (block, want, got) in enumerate(
            zip(dom.blocks, dom.expected_capture, dom.captured)
        ):
            if not want:
                continue
            s, t = block
            cls = scenario.word_class(s, t)
            extras = [
                x for iv in dom.covers[i].fat_intervals for x in (iv.lo, iv.hi)
            ] + [scenario.z]
            member = brute_force_low_density_oracle(
                cls, scenario.eps, 6, extras
            ).contains_point(scenario.z)
            out.checks.append(
                Check(
                    f"{prefix}: block {i} capture recomputed from prefix masses",
                    Fraction(int(member)),
                    ONE,
                    member,
                )
            )
            out.checks.append(
                Check(
                    f"{prefix}: block {i} driver flag agrees with recomputation",
                    Fraction(int(got)),
                    Fraction(int(member)),
                    got == member,
                )
            )
    return out


def _roundtrip_mismatches(m, depth: int) -> int:
    g = martingale_to_function(m, "", depth)
    sm = slope_martingale(g, depth)
    return sum(
        1
        for k in range(depth + 1)
        for s in all_strings(k)
        if sm.value(s) != m.value(s)
    )


def criterion_martingale_algebra(seed: int) -> CriterionOutcome:
    """Fairness, round-trip identity, and closure under combine/cap; depth 16."""
    out = CriterionOutcome(6, "martingale algebra")
    t3 = random_fair_table(battery_rng(seed, "martingale-table", 0), 3)
    t4 = random_fair_table(battery_rng(seed, "martingale-table", 1), 4)
    t5 = random_fair_table(battery_rng(seed, "martingale-table", 2), 5)
    n1 = normalized_fair_table(battery_rng(seed, "martingale-aux", 0), 3)
    combined = combine_scaled(t4, n1, "01", Fraction(1, 3))
    capped = cap_at(t5, t5.value(""))
    constructed = [
        ("random table depth 3", t3),
        ("random table depth 4", t4),
        ("random table depth 5", t5),
        ("capital injection combine_scaled(t4, n1, '01', 1/3)", combined),
        ("cap_at(t5, t5(''))", capped),
    ]
    for label, m in constructed:
        bad = fairness_violations(m, 16)
        _count_check(out, f"{label}: fairness violations to depth 16", len(bad))
    for label, m in (("random table depth 3", t3), ("random table depth 4", t4)):
        _count_check(
            out,
            f"{label}: round-trip slope(integral) mismatches to depth 16",
            _roundtrip_mismatches(m, 16),
        )
    return out


def criterion_forcing(seed: int) -> CriterionOutcome:
    """Forcing chains extend at depth 12; savings gap and window density exact."""
    out = CriterionOutcome(7, "forcing mechanics")
    for index in range(10):
        cond, steps, chain = forcing_instance(seed, index)
        prefix = f"chain {index}"
        for step in chain:
            out.checks.append(
                Check(
                    f"{prefix}: {step.kind} step extends its predecessor "
                    "(depth 12)",
                    Fraction(int(step.extends_ok)),
                    ONE,
                    step.extends_ok,
                )
            )
            if step.kind == "savings":
                eps = steps[-1][1]
                d_hat = step.payload["d_hat"]
                lhs = step.payload["s"] - d_hat
                rhs = eps * (cond.q - d_hat)
                out.checks.append(
                    Check(f"{prefix}: s - d_hat <= eps (q - d_hat)", lhs, rhs,
                          lhs <= rhs)
                )
    for index in range(10):
        cond, eps0, ext = claim5_instance(seed, index)
        m, q = cond.martingale, cond.q
        prefix = f"savings {index}"
        ok = condition_extends(ext.condition, cond, 12)
        out.checks.append(
            Check(f"{prefix}: extension is a forcing extension (depth 12)",
                  Fraction(int(ok)), ONE, ok)
        )
        lhs = ext.s - ext.d_hat
        rhs = eps0 * (q - ext.d_hat)
        out.checks.append(
            Check(f"{prefix}: s - d_hat <= eps (q - d_hat)", lhs, rhs, lhs <= rhs)
        )
        v = m.value(ext.tau)
        out.checks.append(
            Check(f"{prefix}: M(tau) < r", v, ext.r, v < ext.r)
        )
        out.checks.append(
            Check(f"{prefix}: r < s < q", ext.r, ext.s, ext.r < ext.s < q)
        )
        # the decomposition bound: windows of slope < s have relative
        # D-measure below (s - reachable_min)/(q - reachable_min); the
        # table depth sits below the search depth, so the reachable minimum
        # bounds every deeper leaf as well
        eps_claim = (ext.s - ext.reachable_min) / (q - ext.reachable_min)
        recs = claim5_density_records(m, ext.tau, q, ext.s, eps_claim, 10, 10)
        out.checks.append(
            Check(
                f"{prefix}: low-slope windows examined (depth <= 10)",
                Fraction(len(recs)),
                ONE,
                len(recs) >= 1,
            )
        )
        out.add(check_rows(recs), prefix)
    return out


def denjoy_check_rows(rep) -> list[Check]:
    """Check rows for a spike-plan failure report; irrational-threshold
    certificates are split into sign and squared comparisons so every row
    carries plain rational sides."""
    rows: list[Check] = []
    for cert in rep.certificates:
        slope = cert.slope if isinstance(cert.slope, QuadValue) else QuadValue(
            Fraction(cert.slope), ZERO
        )
        name = f"scale k={cert.k}: certified slope <= -2^(k/2)"
        if slope.b == 0:
            rows.append(
                Check(name, slope.a, -Fraction(1 << (cert.k // 2)), cert.holds)
            )
        elif slope.a == 0:
            rows.append(
                Check(f"{name} (sqrt2 coefficient < 0)", slope.b, ZERO,
                      slope.b < 0)
            )
            rows.append(
                Check(
                    f"{name} (squared comparison)",
                    Fraction(1 << cert.k),
                    2 * slope.b * slope.b,
                    cert.holds,
                )
            )
        else:  # mixed components never arise from triangular spikes
            rows.append(Check(name, slope, cert.threshold, cert.holds))
    for w in rep.zero_witnesses:
        rows.append(
            Check(
                f"scale k={w.k}: upper-side zero-slope witness on "
                f"[{w.a},{w.b}]",
                ZERO,
                ZERO,
                w.slope_is_zero,
            )
        )
    if rep.straddle_max is not None:
        rows.append(
            Check(
                "straddling pairs above alpha never exceed the declared bound",
                rep.straddle_max,
                rep.straddle_bound,
                rep.straddle_ok,
            )
        )
    rows.append(
        Check("upper estimate over flat stretches is exactly 0",
              rep.upper_estimate, ZERO, rep.upper_estimate == 0)
    )
    # The lower estimate is the steepest certified slope, so it must sit at
    # or below the deepest even-scale threshold; it is finite by design.
    even_ks = [c.k for c in rep.certificates if c.k % 2 == 0 and c.holds]
    if even_ks:
        steepest = -Fraction(1 << (max(even_ks) // 2))
        rows.append(
            Check(
                f"lower estimate <= -2^{max(even_ks) // 2} "
                "(steepest certified even scale)",
                rep.lower_estimate, steepest, rep.lower_estimate <= steepest,
            )
        )
    for tb in rep.tail_bounds:
        rows.append(
            Check(
                f"tail of heights past exponent {tb.prefix_groups} stays below "
                "the geometric bound (sup)",
                tb.tail_sup,
                tb.series_bound,
                tb.holds,
            )
        )
    claims_limit = "no claim" not in rep.limit_claim
    rows.append(
        Check(
            "the report does not claim the limit derivative",
            Fraction(int(claims_limit)),
            ZERO,
            not claims_limit,
            note=rep.limit_claim,
        )
    )
    return rows


def criterion_counterexample(seed: int) -> CriterionOutcome:
    """Default spike plan: per-scale slope certificates, no limit claim."""
    out = CriterionOutcome(8, "counterexample certificates")
    plan, trace, oracle = build_counterexample(default_enumeration())
    rep = verify_denjoy_failure(plan, trace, oracle, 16)
    realized = {c.k for c in rep.certificates}
    missing = [k for k in range(2, 17, 2) if k not in realized]
    _count_check(out, "even scales k <= 16 missing a certificate", len(missing))
    out.add(denjoy_check_rows(rep))
    return out


def criterion_extension(seed: int) -> CriterionOutcome:
    """20 instances: monotone on the 2^-12 grid, close to h on the class."""
    out = CriterionOutcome(9, "monotone extension")
    n = 10
    tol = 2 * Fraction(1, 1 << n)
    grid = [Fraction(k, 1 << 12) for k in range((1 << 12) + 1)]
    for index in range(20):
        h, enum = extension_instance(seed, index)
        ext = MonotoneExtension(h, enum, n)
        vals = [ext.value(x) for x in grid]
        drops = sum(1 for i in range(len(vals) - 1) if vals[i] > vals[i + 1])
        _count_check(
            out, f"instance {index}: decreases across the 2^-12 grid", drops
        )
        cls = enum.final_class()
        worst = ZERO
        for x, v in zip(grid, vals):
            if cls.contains_point(x):
                worst = max(worst, abs(v - h.exact(x)))
        out.checks.append(
            Check(
                f"instance {index}: worst disagreement with h on class grid "
                "points <= 2 2^-10",
                worst,
                tol,
                worst <= tol,
            )
        )
    return out


def criterion_calculus(seed: int) -> CriterionOutcome:
    """Estimate ordering, sign on monotone oracles, golden extrema."""
    out = CriterionOutcome(10, "calculus sanity")
    for i, (p, a, b, which, target) in enumerate(golden_extremum_cases()):
        v = interval_extremum(p, a, b, 10, which)
        err = abs(v - target)
        out.checks.append(
            Check(
                f"golden case {i}: {which} over [{a},{b}] within 2^-10 of "
                f"{target}",
                err,
                Fraction(1, 1 << 10),
                err <= Fraction(1, 1 << 10),
            )
        )
    vee = piecewise_linear_oracle(
        PiecewiseLinear(
            (ZERO, Fraction(1, 2), ONE), (ZERO, Fraction(1, 2), ZERO)
        ),
        name="vee",
    )
    staircase, _enum = extension_instance(seed, 0)
    square = polynomial_oracle((0, 0, 1))
    sweep = (
        ("identity", identity_oracle()),
        ("square", square),
        ("vee", vee),
        ("staircase", staircase),
    )
    for label, f in sweep:
        for x in (Fraction(1, 3), Fraction(1, 2), Fraction(5, 8)):
            for depth in (4, 6):
                up = pseudo_derivative_estimate(f, x, Fraction(1, 4), depth,
                                                "upper").value
                lo = pseudo_derivative_estimate(f, x, Fraction(1, 4), depth,
                                                "lower").value
                out.checks.append(
                    Check(
                        f"{label} at {x}, grid depth {depth}: lower estimate "
                        "<= upper estimate",
                        lo,
                        up,
                        lo <= up,
                    )
                )
    for label, f in (("identity", identity_oracle()), ("square", square),
                     ("staircase", staircase)):
        for x in (Fraction(1, 3), Fraction(5, 8)):
            lo = pseudo_derivative_estimate(f, x, Fraction(1, 4), 6,
                                            "lower").value
            out.checks.append(
                Check(
                    f"nondecreasing {label} at {x}: lower estimate >= 0",
                    ZERO,
                    lo,
                    lo >= 0,
                )
            )
    return out


CRITERIA = (
    (1, "covering bounds", criterion_covering),
    (2, "U-oracle equivalence", criterion_oracle_match),
    (3, "porosity bounds", criterion_porosity),
    (4, "escape sets", criterion_escape),
    (5, "domination tests", criterion_domination),
    (6, "martingale algebra", criterion_martingale_algebra),
    (7, "forcing mechanics", criterion_forcing),
    (8, "counterexample certificates", criterion_counterexample),
    (9, "monotone extension", criterion_extension),
    (10, "calculus sanity", criterion_calculus),
)


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> CriterionOutcome:
    for num, _title, fn in CRITERIA:
        if num == number:
            start = time.perf_counter()
            try:
                out = fn(seed)
            except BudgetExhausted as exc:
                out = CriterionOutcome(num, _title)
                out.checks.append(
                    Check(f"battery aborted: {exc}", ZERO, ONE, False)
                )
                out.notes.append(str(exc))
            out.seconds = time.perf_counter() - start
            return out
    raise ValueError(f"no criterion numbered {number}")


def run_all(seed: int = DEFAULT_SEED) -> list[CriterionOutcome]:
    return [run_criterion(num, seed) for num, _t, _f in CRITERIA]
