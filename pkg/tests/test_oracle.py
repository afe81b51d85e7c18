import dataclasses
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from delayswitch.charpoly import evaluate, quasi_polynomial
from delayswitch.model import InteractionMatrix, NonGenericError, Verdict, build_system, classify_baseline
from delayswitch.oracle import (
    IndeterminateRegion,
    OracleVerdict,
    SearchRegion,
    baseline_from_roots,
    count_roots,
    count_unstable,
    newton_refine,
    oracle_switches,
    rightmost_root,
    unstable_count,
    verify_report,
)
from delayswitch.switches import analytic_report, enumerate_switches

from strategies import planar, random_matrices


def w_of(m, placement="own"):
    return quasi_polynomial(build_system(InteractionMatrix.from_sequence(m), placement))


# --------------------------------------------------------------------------
# argument principle


def test_count_roots_unstable_baseline():
    # lam^2 - 4 lam + 7 has both roots at 2 +- i sqrt(3)
    w = w_of([5, -4, 3, -1])
    assert count_roots(w, 0.0, SearchRegion(0.01, 10, -10, 10)) == 2


@pytest.mark.parametrize("tau, n", [(0.35, 0), (0.4, 2)])
def test_count_roots_across_unique_switch(tau, n):
    w = w_of([-4, 1, -2, -2])
    assert count_roots(w, tau, SearchRegion(1e-7, 10, -10, 10)) == n


@pytest.mark.parametrize("m, tau, n", [
    ([-1, 3, -1, -2], 5.0, 0),
    ([-2, -4, 3, -2], 1.6, 0),
    ([-2, -4, 3, -2], 0.8, 2),
    ([5, -4, 3, -1], 0.0, 2),
    ([5, -4, 3, -1], 0.615, 0),
])
def test_unstable_count_examples(m, tau, n):
    v = unstable_count(w_of(m), tau)
    assert v.unstable_count == n
    assert v.stable is (n == 0)
    assert (v.rightmost.real < 0) is (n == 0)


def test_count_matches_polynomial_roots_at_zero_delay():
    rng = np.random.default_rng(31)
    for m in random_matrices(rng, 50):
        ev = np.linalg.eigvals(m.as_array())
        if np.any(np.abs(ev.real) < 1e-3):
            continue
        n = count_unstable(quasi_polynomial(build_system(m, "own")), 0.0)
        assert n == int(np.sum(ev.real > 0))


def test_refinement_invariance():
    w = w_of([-2, -4, 3, -2])
    region = SearchRegion(1e-7, 20, -20, 20)
    for tau in (0.3, 0.8, 1.6, 3.0, 4.0):
        assert count_roots(w, tau, region) == count_roots(w, tau, region, min_points=128)


@settings(max_examples=40)
@given(planar(), st.floats(0.05, 4.0))
def test_complex_roots_come_in_conjugate_pairs(m, tau):
    w = quasi_polynomial(build_system(m, "own"))
    upper = SearchRegion(1e-7, 10, 0.5, 10)
    lower = SearchRegion(1e-7, 10, -10, -0.5)
    try:
        n_up, n_down = count_roots(w, tau, upper), count_roots(w, tau, lower)
    except IndeterminateRegion:
        assume(False)
    assert n_up == n_down


def test_search_region_validation():
    with pytest.raises(ValueError):
        SearchRegion(1.0, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        SearchRegion(0.0, 1.0, 2.0, 1.0)
    r = SearchRegion(0.0, 1.0, -1.0, 1.0).expanded(0.5, keep_left=True)
    assert r.re_lo == 0.0 and r.re_hi == 1.5 and r.im_hi == 2.0


def test_marginal_verdict_at_exact_crossing():
    # the crossing of [-1, 3, -2, 1] is closed form: om = sqrt 7, cos(om tau) = 3/4
    w = w_of([-1, 3, -2, 1])
    om = math.sqrt(7)
    tau = math.atan2(math.sqrt(7) / 4, 0.75) / om
    v = unstable_count(w, tau)
    assert v.verdict is OracleVerdict.MARGINAL and v.unstable_count == -1
    assert count_unstable(w, tau) is None


def test_negative_delay_rejected():
    with pytest.raises(ValueError):
        count_unstable(w_of([-4, 1, -2, -2]), -0.1)


# --------------------------------------------------------------------------
# root refinement


def test_newton_finds_crossing_root():
    w = w_of([-4, 1, -2, -2])
    tau = 0.3689710
    roots, ok = newton_refine(w, tau, [0.1 + 4.3j])
    assert ok[0]
    assert roots[0].imag == pytest.approx(4.374417529872982, abs=1e-5)
    assert abs(roots[0].real) < 1e-5


@pytest.mark.parametrize("m, placement, tau_star", [
    ([-4, 1, -2, -2], "own", 0.3689710),
    ([5, -4, 3, -1], "own", 0.5227853),
    ([-1, -1, 1, -1], "full", math.pi / (4 * math.sqrt(2))),
])
def test_rightmost_root_changes_sign_across_switch(m, placement, tau_star):
    w = w_of(m, placement)
    before = rightmost_root(w, tau_star - 1e-3).real
    after = rightmost_root(w, tau_star + 1e-3).real
    assert before * after < 0


def test_rightmost_root_is_a_root():
    w = w_of([-2, -4, 3, -2])
    for tau in (0.2, 1.0, 2.5):
        z = rightmost_root(w, tau)
        assert abs(evaluate(w, z, tau)) < 1e-8


# --------------------------------------------------------------------------
# baselines and bisection


def test_baseline_from_roots_matches_trace_rule():
    rng = np.random.default_rng(32)
    for m in random_matrices(rng, 200):
        w = quasi_polynomial(build_system(m, "own"))
        assert baseline_from_roots(w).verdict is classify_baseline(m).verdict


def test_baseline_from_roots_handles_triads():
    w = w_of([-28, -74, 76, -35, 76, -42, -28], "triad_j_own")
    b = baseline_from_roots(w)
    ev = np.linalg.eigvals(InteractionMatrix.from_sequence([-28, -74, 76, -35, 76, -42, -28]).as_array())
    assert b.verdict is (Verdict.STABLE if np.all(ev.real < 0) else Verdict.UNSTABLE)


def test_oracle_switches_frozen_values():
    # these two numbers are also frozen into the analytic walk's tests
    r = oracle_switches(w_of([5, -4, 3, -1]), 1.0, n_grid=100, tol=1e-7)
    assert r.switch_taus == pytest.approx([0.5227853, 0.7072385], abs=1e-6)
    assert r.method == "oracle-bisection"


def test_oracle_switches_five():
    r = oracle_switches(w_of([-2, -4, 3, -2]), 4.0)
    assert r.switch_taus == pytest.approx([0.553574, 1.110721, 2.124371, 3.332162, 3.695167], abs=2e-5)


def test_oracle_refuses_marginal_baseline():
    with pytest.raises(NonGenericError):
        oracle_switches(w_of([-1, 3, -2, 1]), 1.0)


# --------------------------------------------------------------------------
# cross-checks against the analytic walk


@pytest.mark.parametrize("m, tau_max", [
    ([-4, 1, -2, -2], 3.0),
    ([5, -4, 3, -1], 2.0),
    ([-2, -4, 3, -2], 6.0),
    ([-1, 3, -1, -2], 10.0),
    ([-1, 3, -2, 1], 2.0),
])
def test_verify_report_examples(m, tau_max):
    sys = build_system(InteractionMatrix.from_sequence(m), "own")
    agreement = verify_report(enumerate_switches(sys, tau_max), quasi_polynomial(sys))
    assert agreement.ok, agreement.first_disagreement


def test_verify_report_catches_a_deleted_event():
    sys = build_system(InteractionMatrix(-2, -4, 3, -2), "own")
    r = enumerate_switches(sys, 6.0)
    broken = dataclasses.replace(r, events=r.events[:1] + r.events[2:])
    agreement = verify_report(broken, quasi_polynomial(sys))
    assert not agreement.ok
    assert agreement.first_disagreement.tau > r.events[0].tau


def test_random_systems_agree_with_walk():
    rng = np.random.default_rng(33)
    checked = 0
    for m in random_matrices(rng, 400):
        if checked == 100:
            break
        sys = build_system(m, "own")
        try:
            r = analytic_report(sys, 5.0)
        except NonGenericError:
            continue
        if r.baseline.verdict.marginal:
            continue
        w = quasi_polynomial(sys)
        event_taus = np.array([e.tau for e in r.events] or [np.inf])
        for tau in rng.uniform(0, 5, 5):
            if np.min(np.abs(event_taus - tau)) < 1e-3:
                continue
            assert count_unstable(w, float(tau)) == r.unstable_count_at(float(tau)), (m, tau)
        checked += 1
    assert checked == 100
