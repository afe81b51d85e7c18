import math
import time

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from delayswitch.charpoly import evaluate, quasi_polynomial
from delayswitch.model import DelayPlacement, InteractionMatrix, NonGenericError, Verdict, build_system
from delayswitch.oracle import oracle_switches, verify_report
from delayswitch.switches import (
    Direction,
    Regime,
    SwitchReport,
    TwoExponentialError,
    analytic_report,
    auxiliary_polynomial,
    auxiliary_quadratic,
    classify_theorem_case,
    critical_angle,
    critical_delays,
    crossing_frequencies,
    enumerate_switches,
    find_n_switch_region,
    full_delay_crossing_rate,
    switch_count,
    trig_function,
    trig_scan,
    zsubstitution_analysis,
)

from strategies import coef, nonzero, planar, random_matrices


def own(*m):
    return build_system(InteractionMatrix(*m), "own")


# --------------------------------------------------------------------------
# auxiliary quadratic


@pytest.mark.parametrize("m, coeffs, delta", [
    ((-4, 1, -2, -2), (1, -16, -60), 496),
    ((-2, -4, 3, -2), (1, -24, 128), 64),
    ((-1, 3, -1, -2), (1, -3, 5), -11),
])
def test_auxiliary_examples(m, coeffs, delta):
    f = auxiliary_quadratic(quasi_polynomial(own(*m)))
    assert (f.c2, f.c1, f.c0) == pytest.approx(coeffs)
    assert f.discriminant == pytest.approx(delta)


@given(planar())
def test_own_auxiliary_hand_formula(m):
    a11, a12, a21, a22 = m.coefficients
    f = auxiliary_quadratic(quasi_polynomial(build_system(m, "own")))
    k = a12 * a21
    assert f.c1 == pytest.approx(a22 ** 2 - a11 ** 2 + 2 * k, abs=1e-9)
    assert f.c0 == pytest.approx(k ** 2 - (a11 * a22) ** 2, abs=1e-7)
    assert f.discriminant == pytest.approx((a11 ** 2 + a22 ** 2) ** 2 + 4 * k * (a22 ** 2 - a11 ** 2),
                                           abs=1e-6 * (1 + abs(f.discriminant)))


SINGLE = ["own", "cross", "row_r", "col_r", "anti_diagonal", "mixed_self"]


def test_defining_identity_random():
    rng = np.random.default_rng(21)
    for i, m in enumerate(random_matrices(rng, 1000)):
        name = SINGLE[i % len(SINGLE)]
        p = DelayPlacement.parse(name, rng.uniform(-3, 3) if name == "mixed_self" else 0.0)
        w = quasi_polynomial(build_system(m, p))
        f = auxiliary_quadratic(w)
        y = rng.uniform(0, 100)
        om = math.sqrt(y)
        pv = np.polyval(w.p[::-1], 1j * om)
        qv = np.polyval(w.q1[::-1], 1j * om) if w.has_q1 else np.polyval(w.q2[::-1], 1j * om)
        ref = abs(pv) ** 2 - abs(qv) ** 2
        assert abs(f(y) - ref) < 1e-6 * (1 + abs(f(y)))


def test_two_exponential_rejected():
    with pytest.raises(TwoExponentialError):
        auxiliary_quadratic(quasi_polynomial(build_system(InteractionMatrix(-4, 1, -2, -2), "diagonal")))


def test_triad_auxiliary_has_cubic_degree():
    w = quasi_polynomial(build_system(InteractionMatrix(-28, -74, 76, -35, 76, -42, -28), "triad_j_own"))
    assert len(auxiliary_polynomial(w)) == 4


# --------------------------------------------------------------------------
# crossing frequencies and angles


def test_crossing_frequencies_examples():
    one = crossing_frequencies(auxiliary_quadratic(quasi_polynomial(own(-4, 1, -2, -2))))
    assert len(one) == 1
    assert one[0].y == pytest.approx(8 + 2 * math.sqrt(31))
    assert one[0].direction is Direction.DESTABILIZING
    two = crossing_frequencies(auxiliary_quadratic(quasi_polynomial(own(-2, -4, 3, -2))))
    assert [c.y for c in two] == pytest.approx([8, 16])
    assert [c.direction for c in two] == [Direction.STABILIZING, Direction.DESTABILIZING]
    assert crossing_frequencies(auxiliary_quadratic(quasi_polynomial(own(-1, 3, -1, -2)))) == []


def test_zero_discriminant_is_non_generic():
    # F = y^2 - 2y + 1 for a11 = 0, a22 = 0 ... built directly
    from delayswitch.switches import AuxiliaryQuadratic
    with pytest.raises(NonGenericError):
        crossing_frequencies(AuxiliaryQuadratic(1.0, -2.0, 1.0))


@pytest.mark.parametrize("m, om, cosv, sinv, theta, tol", [
    ((-4, 1, -2, -2), 4.37443, -0.04322, 0.99907, 1.61405, 5e-5),
    ((-2, -4, 3, -2), 4.0, -0.6, 0.8, math.atan2(0.8, -0.6), 1e-12),
    ((-2, -4, 3, -2), math.sqrt(8), -1.0, 0.0, math.pi, 1e-12),
])
def test_critical_angle_examples(m, om, cosv, sinv, theta, tol):
    a = critical_angle(own(*m), om)
    assert a.cosv == pytest.approx(cosv, abs=max(tol, 1e-5))
    assert a.sinv == pytest.approx(sinv, abs=max(tol, 1e-5))
    assert a.theta == pytest.approx(theta, abs=tol)
    assert a.cosv ** 2 + a.sinv ** 2 == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("m, pick, tau_max, expected", [
    ((-4, 1, -2, -2), 0, 3, [0.36898, 1.80532]),
    ((-2, -4, 3, -2), 1, 6, [0.55357, 2.12437, 3.69517, 5.26597]),
    ((-2, -4, 3, -2), 0, 6, [1.11072, 3.33216, 5.55360]),
])
def test_critical_delays_examples(m, pick, tau_max, expected):
    sys = own(*m)
    cf = crossing_frequencies(auxiliary_quadratic(quasi_polynomial(sys)))[pick]
    seq = critical_delays(sys, cf, tau_max)
    assert seq.delays == pytest.approx(expected, abs=2e-5)
    assert np.diff(seq.delays) == pytest.approx(2 * math.pi / cf.omega)


@settings(max_examples=200)
@given(planar(nonzero))
def test_emitted_delays_are_roots(m):
    sys = build_system(m, "own")
    w = quasi_polynomial(sys)
    try:
        cfs = crossing_frequencies(auxiliary_quadratic(w))
    except NonGenericError:
        assume(False)
    for cf in cfs:
        for tau in critical_delays(sys, cf, 20.0).delays:
            scale = 1 + cf.omega ** 2 + m.max_norm() ** 2
            assert abs(evaluate(w, 1j * cf.omega, tau)) < 1e-6 * scale


# --------------------------------------------------------------------------
# switch walks


def test_unique_switch():
    r = enumerate_switches(own(-4, 1, -2, -2), 3)
    assert r.switch_taus == pytest.approx([0.36898], abs=2e-5)
    assert r.stable_intervals[0][0] == 0 and r.stable_intervals[0][1] == pytest.approx(0.36898, abs=2e-5)
    assert r.eventual.kind == "unstable_beyond"


def test_two_switches_from_unstable_start():
    r = enumerate_switches(own(5, -4, 3, -1), 3)
    # frozen from an independent oracle bisection (see test_oracle)
    assert r.switch_taus == pytest.approx([0.5227853, 0.7072385], abs=1e-6)
    assert len(r.stable_intervals) == 1
    lo, hi = r.stable_intervals[0]
    assert lo == pytest.approx(0.5227853, abs=1e-6) and hi == pytest.approx(0.7072385, abs=1e-6)


def test_five_switches():
    r = enumerate_switches(own(-2, -4, 3, -2), 6)
    assert r.switch_taus == pytest.approx([0.55357, 1.11072, 2.12437, 3.33216, 3.69517], abs=2e-5)
    assert [s.becomes for s in r.switches] == ["unstable", "stable"] * 2 + ["unstable"]
    assert r.eventual.kind == "unstable_beyond"


def test_no_switch_stable_forever():
    for tau_max in (1.0, 100.0):
        r = enumerate_switches(own(-1, 3, -1, -2), tau_max)
        assert r.switches == () and r.eventual.kind == "stable_forever"
        assert r.stable_intervals == ((0.0, None),)


def test_marginal_centre_start_resolved_by_zero_delay_event():
    r = enumerate_switches(own(-1, 3, -2, 1), 6)
    assert r.baseline.verdict is Verdict.MARGINAL_CENTER
    assert r.switch_taus == pytest.approx([0.2731679], abs=1e-6)
    assert r.total_switches == 1


@pytest.mark.parametrize("m", [(1, 1, -2, -2), (0, 0, 0, 0)])
def test_zero_determinant_refused(m):
    with pytest.raises(NonGenericError):
        enumerate_switches(own(*m), 3)


def test_pure_cross_refused():
    with pytest.raises(NonGenericError):
        enumerate_switches(build_system(InteractionMatrix(0, 1, -1, 0), "pure_cross"), 3)


def test_report_round_trip():
    r = enumerate_switches(own(-2, -4, 3, -2), 6)
    assert SwitchReport.from_dict(r.to_dict()) == r


def own_walk(m):
    try:
        return analytic_report(build_system(m, "own"), 1e-9)
    except NonGenericError:
        return None


@settings(max_examples=200)
@given(planar())
def test_walk_invariants(m):
    r = own_walk(m)
    assume(r is not None)
    full = analytic_report(build_system(m, "own"), (r.eventual.tau or 0.0) + 1.0)
    count = full.initial_unstable
    for e in full.events:
        count += 2 if e.direction is Direction.DESTABILIZING else (0 if e.tau == 0 else -2)
        assert count >= 0
    becomes = [s.becomes for s in full.switches]
    assert all(a != b for a, b in zip(becomes, becomes[1:]))
    if full.eventual.kind == "unstable_beyond" and full.baseline.verdict is not Verdict.MARGINAL_CENTER:
        starts_stable = full.baseline.verdict is Verdict.STABLE
        assert full.total_switches % 2 == (1 if starts_stable else 0)


def test_analytic_report_is_fast():
    sys = own(-2, -4, 3, -2)
    analytic_report(sys, 6)
    t0 = time.perf_counter()
    for _ in range(20):
        analytic_report(sys, 6)
    assert (time.perf_counter() - t0) / 20 < 0.01


# --------------------------------------------------------------------------
# theorem regimes


@pytest.mark.parametrize("m, placement, regime, bound", [
    ((-4, 1, -2, -2), "own", Regime.THM1_CASE2, 1),
    ((-2, -4, 3, -2), "own", Regime.THM2_MULTI, None),
    ((-4, 1, -2, -2), "cross", Regime.THM3_NO_SWITCH, 0),
    ((-1, 3, -2, -1), "cross", Regime.THM3_ONE_SWITCH, 1),
    ((-4, 1, -2, -2), "full", Regime.THM5, 1),
    ((3, 1, -2, -3), "diagonal", Regime.THM4_AT_MOST_ONE, 1),
    ((0, 1, -1, -3), "diagonal", Regime.THM4_ARBITRARY_NEAR_ZERO, None),
    ((-4, 1, -2, -2), "diagonal", Regime.IRREDUCIBLE_NUMERIC_ONLY, None),
    ((1, 1, -2, -2), "own", Regime.NON_GENERIC, None),
])
def test_classification_examples(m, placement, regime, bound):
    c = classify_theorem_case(build_system(InteractionMatrix(*m), placement))
    assert (c.regime, c.bound) == (regime, bound)


def total(m, placement):
    try:
        return analytic_report(build_system(m, placement), 1e-9)
    except NonGenericError:
        return None


@st.composite
def coupling(draw, lo, hi):
    """Matrix whose |a12 a21| / |a11 a22| ratio lies in [lo, hi]."""
    a11, a22, a12 = draw(nonzero), draw(nonzero), draw(nonzero)
    r = draw(st.floats(lo, hi)) * draw(st.sampled_from([-1, 1]))
    return InteractionMatrix(a11, a12, r * abs(a11 * a22) / a12, a22)


@settings(max_examples=200)
@given(coupling(0.0, 0.95))
def test_weak_coupling_own_delay_bounds(m):
    r = total(m, "own")
    assume(r is not None and not r.baseline.verdict.marginal)
    if r.baseline.verdict is Verdict.STABLE:
        assert r.total_switches == 1
    else:
        assert r.total_switches == 0


@settings(max_examples=200)
@given(coupling(0.0, 0.95))
def test_weak_coupling_cross_delay_has_no_switch(m):
    r = total(m, "cross")
    assume(r is not None)
    assert r.total_switches == 0


@settings(max_examples=200)
@given(coupling(1.05, 6.0))
def test_strong_coupling_cross_delay_at_most_one(m):
    r = total(m, "cross")
    assume(r is not None)
    assert r.total_switches <= 1


@settings(max_examples=200)
@given(planar(), st.sampled_from(["row_r", "col_r", "anti_diagonal", "full"]))
def test_at_most_one_switch_placements(m, placement):
    r = total(m, placement)
    assume(r is not None)
    assert r.total_switches <= 1


@settings(max_examples=200)
@given(nonzero, coef, coef)
def test_diagonal_zero_trace_at_most_one(a, a12, a21):
    r = total(InteractionMatrix(a, a12, a21, -a), "diagonal")
    # zero trace: only the saddle case is hyperbolic at zero delay
    assume(r is not None and not r.baseline.verdict.marginal)
    assert r.total_switches <= 1


def test_diagonal_zero_trace_centre_start_can_switch_three_times():
    sys = build_system(InteractionMatrix(1, 3, -1, -1), "diagonal")
    assert classify_theorem_case(sys).regime is Regime.NON_GENERIC
    r = analytic_report(sys, 10)
    assert r.switch_taus == pytest.approx([math.pi / 4, math.pi / math.sqrt(2), 3 * math.pi / 4])
    assert verify_report(r, quasi_polynomial(sys)).ok


@given(st.floats(0.05, 9), st.floats(0.05, 9), st.floats(0.05, 9))
def test_diagonal_near_zero_two_frequencies(a22_abs, a12, k):
    # a11 = 0, a22 < 0, a12 a21 < 0
    m = InteractionMatrix(0.0, a12, -k / a12, -a22_abs)
    assume(a22_abs ** 2 > 4 * k)
    try:
        cfs = crossing_frequencies(auxiliary_quadratic(quasi_polynomial(build_system(m, "diagonal"))))
    except NonGenericError:
        assume(False)
    assert len(cfs) == 2 and all(c.y > 0 for c in cfs)


def test_diagonal_small_self_term_keeps_many_switches():
    base = build_system(InteractionMatrix(0, 1, -1, -0.3), "diagonal")
    r = analytic_report(base, 8.0)
    assert len(r.switches) == 3
    for a in (0.01, -0.01):
        w = quasi_polynomial(build_system(InteractionMatrix(a, 1, -1, -0.3), "diagonal"))
        o = oracle_switches(w, 8.0, n_grid=200)
        assert len(o.switches) == 3
        assert o.switch_taus == pytest.approx(r.switch_taus, abs=0.1)


def test_mixed_self_continuity():
    m = InteractionMatrix(-2, -4, 3, -2)
    n = switch_count(build_system(m, "own"))
    eps = 1e-3 * m.max_norm()
    for a13 in (0.0, eps, -eps):
        assert switch_count(build_system(m, DelayPlacement.parse("mixed_self", a13))) == n == 5


# --------------------------------------------------------------------------
# full delay


def test_full_delay_example():
    r = zsubstitution_analysis(build_system(InteractionMatrix(-1, -1, 1, -1), "full"), 3)
    assert r.switch_taus == pytest.approx([math.pi / (4 * math.sqrt(2))], abs=1e-9)
    assert r.events[0].omega == pytest.approx(math.sqrt(2))
    # 2 / (1 + 2 * 0.55536**2)
    assert full_delay_crossing_rate(math.sqrt(2), 0.55536) == pytest.approx(1.23697, abs=1e-5)


def test_full_delay_unstable_start_never_switches():
    r = zsubstitution_analysis(build_system(InteractionMatrix(1, -1, 1, 1), "full"), 10)
    assert r.switches == () and r.eventual.kind == "unstable_beyond"


# --------------------------------------------------------------------------
# trigonometric scan


def test_g_at_zero_is_minus_det_squared():
    rng = np.random.default_rng(31)
    for m in random_matrices(rng, 200):
        w = quasi_polynomial(build_system(m, "three_own_last"))
        det = m.a11 * m.a22 - m.a12 * m.a21
        assert trig_function(w, rng.uniform(0, 5))(0.0) == pytest.approx(-det ** 2, abs=1e-8 * (1 + det ** 2))


def test_g_expansion_with_frequency_factor():
    rng = np.random.default_rng(32)
    for m in random_matrices(rng, 200):
        a11, a12, a21, a22 = m.coefficients
        om, tau = rng.uniform(0, 10), rng.uniform(0, 5)
        g = trig_function(quasi_polynomial(build_system(m, "three_own_last")), tau)(om)
        hand = (om ** 4 + (a22 ** 2 - a11 ** 2) * om ** 2 - (a11 * a22) ** 2 - (a12 * a21) ** 2
                + 2 * a11 * a12 * a21 * om * math.sin(om * tau) + 2 * a11 * a22 * a12 * a21 * math.cos(om * tau))
        assert g == pytest.approx(hand, abs=1e-8 * (1 + abs(hand)))


def test_trig_scan_at_zero_delay_matches_quartic():
    m = InteractionMatrix(-2, -4, 3, -2)
    zeros = trig_scan(build_system(m, "three_own_last"), 0.0)
    a11, a12, a21, a22 = m.coefficients
    c0 = -(a11 * a22) ** 2 - (a12 * a21) ** 2 + 2 * a11 * a22 * a12 * a21
    ys = np.roots([1, a22 ** 2 - a11 ** 2, c0])
    expected = sorted(math.sqrt(y.real) for y in ys if abs(y.imag) < 1e-12 and y.real > 0)
    assert [z.omega for z in zeros] == pytest.approx(expected, abs=1e-9)


@given(planar(), st.floats(0, 5))
def test_g_grows_without_bound(m, tau):
    g = trig_function(quasi_polynomial(build_system(m, "three_cross_last")), tau)
    assert g(1e3) > 0


# --------------------------------------------------------------------------
# witness search


@pytest.mark.parametrize("n, box", [(1, (-5.0, 5.0)), (2, (-9.0, 9.0)), (5, (-9.0, 9.0))])
def test_find_n_switch_region(n, box):
    m = find_n_switch_region("own", n, box=box, budget=20_000)
    assert m is not None and all(box[0] <= v <= box[1] for v in m.coefficients)
    sys = build_system(m, "own")
    assert switch_count(sys) == n
    if n == 5:
        r = analytic_report(sys, 1.25 * analytic_report(sys, 1e-9).eventual.tau + 0.5)
        assert verify_report(r, quasi_polynomial(sys)).ok


def test_two_switch_example_qualifies():
    assert switch_count(own(5, -4, 3, -1)) == 2
