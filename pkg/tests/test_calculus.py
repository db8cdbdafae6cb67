"""Oracles, slopes, pseudo-derivatives, envelopes, monotone extension."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densitylab.calculus import (
    DenjoyReport,
    E_membership,
    ExtensionBudget,
    MonotoneExtension,
    constant_oracle,
    denjoy_classify,
    e_violation,
    envelope,
    identity_oracle,
    interval_extremum,
    monotone_extension,
    oracle_from_exact,
    piecewise_linear_oracle,
    polynomial_oracle,
    pseudo_derivative_estimate,
    rounded_oracle,
    slope,
    slope_threshold_witness,
    smooth_approximant,
    sup_function,
)
from densitylab.errors import BudgetExhausted, DomainError
from densitylab.intervals import IntervalSet, enumeration, interval
from densitylab.piecewise import PiecewiseLinear

VEE = PiecewiseLinear((F(0), F(1, 2), F(1)), (F(1, 2), F(0), F(1, 2)))  # |x - 1/2|


def test_slope_exact_samples():
    assert slope(identity_oracle(), F(1, 4), F(3, 4), 8).value == 1
    assert slope(polynomial_oracle([0, 0, 1]), F(0), F(1), 8).value == 1
    assert slope(constant_oracle(F(2, 7)), F(0), F(1, 3), 8).value == 0


def test_slope_rejects_equal_endpoints_and_bad_domain():
    with pytest.raises(DomainError):
        slope(identity_oracle(), F(1, 2), F(1, 2), 4)
    listed = oracle_from_exact(lambda q: q, domain=[F(0), F(1)], lipschitz=1)
    with pytest.raises(DomainError):
        listed.sample(F(1, 2), 3)


def test_slope_error_bound_on_rounded_oracle():
    base = polynomial_oracle([0, 0, 1])
    noisy = rounded_oracle(base)
    s = slope(noisy, F(1, 4), F(3, 4), 6)
    assert abs(s.value - 1) <= F(1, 64)
    assert s.error_bound <= F(1, 64)


def test_pseudo_derivative_identity():
    f = identity_oracle()
    for side in ("upper", "lower"):
        est = pseudo_derivative_estimate(f, F(1, 3), F(1, 8), 6, side)
        assert est.value == 1


def test_pseudo_derivative_vee_spec_example():
    f = piecewise_linear_oracle(VEE)
    up = pseudo_derivative_estimate(f, F(1, 2), F(1, 4), 6, "upper")
    lo = pseudo_derivative_estimate(f, F(1, 2), F(1, 4), 6, "lower")
    assert up.value == 1
    assert lo.value == -1
    # the extremes need a pair with one endpoint at the kink itself
    assert F(1, 2) in up.witness
    assert F(1, 2) in lo.witness
    # the symmetric pair has slope exactly 0: check via the slope op
    assert slope(f, F(1, 2) - F(1, 16), F(1, 2) + F(1, 16), 8).value == 0


def test_pseudo_derivative_requires_straddling_pair():
    listed = oracle_from_exact(lambda q: q, domain=[F(0)], lipschitz=1)
    with pytest.raises(DomainError):
        pseudo_derivative_estimate(listed, F(1, 2), F(1, 8), 4, "upper")


@settings(max_examples=30, deadline=None)
@given(
    st.integers(min_value=1, max_value=63),
    st.integers(min_value=3, max_value=6),
    st.integers(min_value=2, max_value=5),
)
def test_pseudo_derivative_order_and_depth_monotonicity(num, depth, k):
    f = piecewise_linear_oracle(VEE)
    depth = max(depth, k)  # grid must resolve the scale
    x, h = F(num, 64), F(1, 1 << k)
    up = pseudo_derivative_estimate(f, x, h, depth, "upper").value
    lo = pseudo_derivative_estimate(f, x, h, depth, "lower").value
    assert up >= lo
    up2 = pseudo_derivative_estimate(f, x, h, depth + 1, "upper").value
    lo2 = pseudo_derivative_estimate(f, x, h, depth + 1, "lower").value
    assert up2 >= up and lo2 <= lo


def test_nondecreasing_oracle_lower_estimate_nonnegative():
    for f in (identity_oracle(), polynomial_oracle([F(1, 3), F(1, 2), F(1, 4)])):
        est = pseudo_derivative_estimate(f, F(3, 8), F(1, 4), 5, "lower")
        assert est.value >= 0


def test_denjoy_classify_identity_and_vee():
    scales = [F(1, 4), F(1, 8), F(1, 16)]
    report = denjoy_classify(identity_oracle(), F(1, 3), scales, 6, F(0), F(4))
    assert isinstance(report, DenjoyReport)
    assert report.verdict == "derivative-like"
    assert all(up == lo == 1 for (_, up, lo) in report.curves)
    vee = piecewise_linear_oracle(VEE)
    report = denjoy_classify(vee, F(1, 2), scales, 6, F(1, 8), F(4))
    assert report.verdict == "inconclusive"
    assert report.curves[-1][1] == 1 and report.curves[-1][2] == -1
    with pytest.raises(DomainError):
        denjoy_classify(vee, F(1, 2), [F(1, 8), F(1, 4)], 6, F(1), F(2))


def test_slope_threshold_witness_identity():
    f = identity_oracle()
    assert slope_threshold_witness(f, F(1, 2), F(2), F(1, 8), 6) is not None
    assert slope_threshold_witness(f, F(1, 2), F(1), F(1, 8), 6) is None


def test_e_membership_nondecreasing_and_dip():
    f = identity_oracle()
    assert E_membership(f, F(1, 2), 2, F(0), F(1), 5)
    # a dip of slope -5 around 1/2 defeats n = 2 (threshold -1)
    dip = PiecewiseLinear(
        (F(0), F(7, 16), F(9, 16), F(1)),
        (F(0), F(7, 16), F(7, 16) - F(5, 8), F(7, 16) - F(5, 8)),
    )
    g = piecewise_linear_oracle(dip)
    assert not E_membership(g, F(1, 2), 2, F(0), F(1), 5)
    pair = e_violation(g, F(1, 2), 2, F(0), F(1), 5)
    assert pair is not None and pair[0] <= F(1, 2) <= pair[1]
    # n large enough clears any bounded-slope oracle
    assert E_membership(g, F(1, 2), 9, F(0), F(1), 5)


def test_e_membership_antitone_in_interval():
    dip = PiecewiseLinear(
        (F(0), F(7, 16), F(9, 16), F(1)),
        (F(0), F(7, 16), F(7, 16) - F(5, 8), F(7, 16) - F(5, 8)),
    )
    g = piecewise_linear_oracle(dip)
    for r, s, r2, s2 in [(F(0), F(1), F(1, 4), F(3, 4)), (F(1, 4), F(3, 4), F(3, 8), F(5, 8))]:
        if E_membership(g, F(1, 2), 2, r, s, 4):
            assert E_membership(g, F(1, 2), 2, r2, s2, 4)


def test_sup_function_examples():
    f = identity_oracle()
    assert sup_function(f, F(0), F(5, 8), 6, 6) == F(5, 8)
    hump = piecewise_linear_oracle(
        PiecewiseLinear((F(0), F(1, 4), F(1, 2)), (F(-1, 4), F(0), F(-1, 4)))
    )
    assert sup_function(hump, F(0), F(1, 2), 6, 6) == 0
    assert sup_function(constant_oracle(F(3, 7)), F(1, 8), F(1, 2), 6, 4) == F(3, 7)


def test_sup_function_nondecreasing_in_x():
    hump = piecewise_linear_oracle(
        PiecewiseLinear((F(0), F(1, 4), F(1)), (F(0), F(1), F(0)))
    )
    vals = [sup_function(hump, F(0), F(k, 16), 8, 6) for k in range(17)]
    assert all(vals[i] <= vals[i + 1] for i in range(16))


def test_interval_extremum_golden_cases():
    n = 8
    tol = F(1, 1 << n)
    # p(x) = x(1-x): sup 1/4 at 1/2
    assert abs(interval_extremum(polynomial_oracle([0, 1, -1]), F(0), F(1), n, "sup") - F(1, 4)) <= tol
    assert abs(interval_extremum(identity_oracle(), F(1, 8), F(3, 4), n, "inf") - F(1, 8)) <= tol
    assert interval_extremum(constant_oracle(F(2, 3)), F(0), F(1), n, "sup") == F(2, 3)
    with pytest.raises(DomainError):
        interval_extremum(
            oracle_from_exact(lambda q: q), F(0), F(1), n, "sup"
        )


def test_envelope_sides_and_reduction():
    n = 6
    p = polynomial_oracle([0, 1, -1])
    full = IntervalSet((interval(0, 1),))
    sup_env = envelope(p, full, F(0), F(1), n, "upper_sup")
    sup_ext = interval_extremum(p, F(0), F(1), n, "sup")
    assert sup_env >= F(1, 4)  # certified from above
    assert abs(sup_env - sup_ext) <= F(1, 1 << (n - 1))
    inf_env = envelope(p, full, F(0), F(1), n, "lower_inf")
    assert inf_env <= 0
    assert abs(inf_env - 0) <= F(1, 1 << (n - 1))
    # excluding the maximizer pulls the sup down
    holed = IntervalSet((interval(0, F(1, 4)), interval(F(3, 4), 1)))
    assert envelope(p, holed, F(0), F(1), n, "upper_sup") < sup_env
    # single-point class
    point = IntervalSet((interval(F(1, 3), F(1, 3)),))
    assert abs(envelope(p, point, F(0), F(1), n, "upper_sup") - F(2, 9)) <= F(1, 1 << n)
    with pytest.raises(DomainError):
        envelope(p, point, F(1, 2), F(1), n, "lower_inf")


def test_smooth_approximant_formula():
    assert smooth_approximant(F(0), F(1), 2, F(1, 2)) == F(1, 2)
    assert smooth_approximant(F(0), F(1), 1, F(1, 2)) == F(1, 3)
    assert smooth_approximant(F(0), F(1), 2, F(0)) == 0
    assert smooth_approximant(F(0), F(1), 5, F(2)) == 0
    vals = [smooth_approximant(F(1, 4), F(3, 4), s, F(3, 8)) for s in range(8)]
    assert all(vals[i] <= vals[i + 1] for i in range(7))
    assert all(0 <= v < 1 for v in vals)


def test_monotone_extension_trivial_class():
    ext = MonotoneExtension(identity_oracle(), enumeration(), 8)
    for k in range(0, 17):
        x = F(k, 16)
        assert abs(ext.value(x) - x) <= F(1, 1 << 7)


def test_monotone_extension_one_hole_identity():
    n = 8
    enum = enumeration((F(1, 4), F(1, 2)))
    ext = MonotoneExtension(identity_oracle(), enum, n)
    grid = [F(k, 1 << 10) for k in range(0, (1 << 10) + 1)]
    vals = [ext.value(x) for x in grid]
    assert all(vals[i] <= vals[i + 1] for i in range(len(vals) - 1))
    c_set = enum.final_class()
    tol = 2 * F(1, 1 << n)
    for x, v in zip(grid, vals):
        if c_set.contains_point(x):
            assert abs(v - x) <= tol
    inside = ext.value(F(3, 8))
    assert F(1, 4) - tol <= inside <= F(1, 2) + tol


def test_monotone_extension_two_plateau():
    n = 8
    steps = PiecewiseLinear(
        (F(0), F(1, 4), F(1, 2), F(3, 4), F(1)),
        (F(0), F(0), F(1, 2), F(1, 2), F(1)),
    )
    h = piecewise_linear_oracle(steps)
    enum = enumeration((F(1, 8), F(1, 4)), (F(5, 8), F(3, 4)))
    ext = MonotoneExtension(h, enum, n)
    grid = [F(k, 1 << 9) for k in range(0, (1 << 9) + 1)]
    vals = [ext.value(x) for x in grid]
    assert all(vals[i] <= vals[i + 1] for i in range(len(vals) - 1))
    c_set = enum.final_class()
    tol = 2 * F(1, 1 << n)
    for x, v in zip(grid, vals):
        if c_set.contains_point(x):
            assert abs(v - steps.value(x)) <= tol


def test_monotone_extension_rejects_decreasing_h():
    h = piecewise_linear_oracle(VEE)
    with pytest.raises(DomainError):
        MonotoneExtension(h, enumeration(), 6)


def test_monotone_extension_budget_exhaustion_reported():
    enum = enumeration((F(1, 4), F(1, 2)))
    tight = ExtensionBudget(grid_depth=4, precision=4)
    with pytest.raises(BudgetExhausted) as err:
        monotone_extension(identity_oracle(), enum, F(1, 8), 8, tight)
    assert err.value.achieved is not None and err.value.achieved >= F(1, 1 << 8)
