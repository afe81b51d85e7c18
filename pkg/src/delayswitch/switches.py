"""Analytic enumeration of delay-induced stability switches.

For a single-exponential quasi-polynomial ``W = P + Q e^{-k lam tau}`` a root
``lam = i omega`` needs ``|P(i omega)| = |Q(i omega)|``, i.e. a positive zero
``y = omega**2`` of ``F(y) = |P(i sqrt y)|^2 - |Q(i sqrt y)|^2``.  The sign of
``F'(y)`` fixes the crossing direction, and ``e^{i k omega tau} = -Q/P`` fixes
the arithmetic progression of delays at which the crossing happens.  Walking
the merged progressions in increasing ``tau`` while tracking the number of
roots in the open right half-plane gives every switch.
"""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq
from scipy.stats import qmc

from .charpoly import QuasiPolynomial, omega_ceiling, quasi_polynomial, tau_zero_roots
from .model import (
    BaselineStability,
    DelayPlacement,
    DelaySystem,
    DimensionError,
    InteractionMatrix,
    NonGenericError,
    Placement,
    Verdict,
    classify_matrix,
)

DEGENERACY_TOL = 1e-9
# theta closer than this to 0 (mod 2 pi) means the crossing sits at tau = 0
ANGLE_SNAP = 1e-7
TWO_PI = 2.0 * math.pi
_MAX_EVENTS = 200_000


class TwoExponentialError(ValueError):
    """The quasi-polynomial keeps both exponential terms; F is not polynomial."""


class Direction(enum.Enum):
    DESTABILIZING = "destabilizing"
    STABILIZING = "stabilizing"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.DESTABILIZING else -1


@dataclass(frozen=True)
class AuxiliaryQuadratic:
    """``F(y) = c2 y^2 + c1 y + c0`` with ``c2 = 1``."""

    c2: float
    c1: float
    c0: float
    # exponential order k of the surviving term e^{-k lam tau}
    delay_multiple: int = 1

    @property
    def discriminant(self) -> float:
        return self.c1 * self.c1 - 4.0 * self.c2 * self.c0

    def __call__(self, y):
        return (self.c2 * y + self.c1) * y + self.c0

    def derivative(self, y):
        return 2.0 * self.c2 * y + self.c1


@dataclass(frozen=True)
class CrossingFrequency:
    y: float
    omega: float
    direction: Direction


@dataclass(frozen=True)
class CriticalAngle:
    cosv: float
    sinv: float
    theta: float


@dataclass(frozen=True)
class CriticalDelaySequence:
    omega: float
    theta: float
    delays: tuple[float, ...]
    direction: Direction
    delay_multiple: int = 1

    @property
    def spacing(self) -> float:
        return TWO_PI / (self.delay_multiple * self.omega)


@dataclass(frozen=True)
class CrossingEvent:
    tau: float
    direction: Direction
    omega: float


@dataclass(frozen=True)
class Switch:
    tau: float
    becomes: str  # "stable" or "unstable"


@dataclass(frozen=True)
class Eventual:
    # "stable_forever", "unstable_beyond", or "undetermined" when only a
    # finite window was examined and it ends stable
    kind: str
    tau: float | None = None


@dataclass(frozen=True)
class SwitchReport:
    """Outcome of a switch walk over ``[0, tau_max]``.

    ``events`` and ``switches`` are truncated at ``tau_max``; ``eventual`` and
    ``total_switches`` come from the walk continued until no further switch
    is possible.  Crossing events at ``tau = 0`` resolve roots sitting on the
    imaginary axis in a marginal baseline and do not change the count when
    stabilizing.  ``stable_intervals`` are ``(lo, hi)`` with ``hi = None`` for
    an unbounded tail.
    """

    baseline: BaselineStability
    initial_unstable: int
    events: tuple[CrossingEvent, ...]
    switches: tuple[Switch, ...]
    stable_intervals: tuple[tuple[float, float | None], ...]
    eventual: Eventual
    tau_max: float
    total_switches: int
    method: str = "analytic"
    notes: tuple[str, ...] = field(default=())

    @property
    def switch_taus(self) -> list[float]:
        return [s.tau for s in self.switches]

    def unstable_count_at(self, tau: float) -> int:
        """Right-half-plane root count predicted by the event walk."""
        count = self.initial_unstable
        if tau <= 0.0:
            return count
        for e in self.events:
            if e.tau < tau:
                count += _delta(e)
        return count

    def predicts_stable(self, tau: float) -> bool:
        return self.unstable_count_at(tau) == 0

    def to_dict(self) -> dict:
        return {
            "baseline": {
                "trace": self.baseline.trace,
                "determinant": self.baseline.determinant,
                "verdict": self.baseline.verdict.value,
            },
            "initial_unstable": self.initial_unstable,
            "events": [
                {"tau": e.tau, "direction": e.direction.value, "omega": e.omega} for e in self.events
            ],
            "switches": [{"tau": s.tau, "becomes": s.becomes} for s in self.switches],
            "stable_intervals": [[lo, hi] for lo, hi in self.stable_intervals],
            "eventual": {"kind": self.eventual.kind, "tau": self.eventual.tau},
            "tau_max": self.tau_max,
            "total_switches": self.total_switches,
            "method": self.method,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SwitchReport":
        b = d["baseline"]
        return cls(
            baseline=BaselineStability(b["trace"], b["determinant"], Verdict(b["verdict"])),
            initial_unstable=d["initial_unstable"],
            events=tuple(
                CrossingEvent(e["tau"], Direction(e["direction"]), e["omega"]) for e in d["events"]
            ),
            switches=tuple(Switch(s["tau"], s["becomes"]) for s in d["switches"]),
            stable_intervals=tuple((lo, hi) for lo, hi in d["stable_intervals"]),
            eventual=Eventual(d["eventual"]["kind"], d["eventual"]["tau"]),
            tau_max=d["tau_max"],
            total_switches=d["total_switches"],
            method=d["method"],
            notes=tuple(d["notes"]),
        )


def _delta(e: CrossingEvent) -> int:
    if e.direction is Direction.DESTABILIZING:
        return 2
    return 0 if e.tau == 0.0 else -2


class Regime(enum.Enum):
    THM1_CASE1 = "Thm1Case1"
    THM1_CASE2 = "Thm1Case2"
    THM2_MULTI = "Thm2Multi"
    THM3_NO_SWITCH = "Thm3NoSwitch"
    THM3_ONE_SWITCH = "Thm3OneSwitch"
    THM4_AT_MOST_ONE = "Thm4AtMostOne"
    THM4_ARBITRARY_NEAR_ZERO = "Thm4ArbitraryNearZero"
    THM5 = "Thm5"
    NON_GENERIC = "NonGeneric"
    IRREDUCIBLE_NUMERIC_ONLY = "IrreducibleNumericOnly"


@dataclass(frozen=True)
class TheoremClassification:
    regime: Regime
    bound: int | None


# --------------------------------------------------------------------------
# auxiliary function and crossing frequencies


def single_exponential_form(w: QuasiPolynomial) -> tuple[tuple[float, ...], int]:
    """Return ``(Q, k)`` with ``W = P + Q e^{-k lam tau}``.

    Raises TwoExponentialError when both exponential terms are present.
    """
    if w.has_q1 and w.has_q2:
        raise TwoExponentialError(
            f"{w.placement.value}: both e^(-lam tau) and e^(-2 lam tau) present; "
            "use zsubstitution_analysis or trig_scan"
        )
    if w.has_q2:
        return w.q2, 2
    return w.q1, 1


def _even_part_in_y(c: np.ndarray) -> np.ndarray:
    # c holds an even polynomial in lam; substitute lam^2 = -y
    out = np.zeros(len(c) // 2 + 1)
    for k in range(0, len(c), 2):
        out[k // 2] = c[k] * (-1.0) ** (k // 2)
    return out


def auxiliary_polynomial(w: QuasiPolynomial) -> np.ndarray:
    """Ascending coefficients of ``F(y)`` for any single-exponential ``w``."""
    q, _ = single_exponential_form(w)
    p = np.asarray(w.p)
    q = np.asarray(q)
    neg = lambda c: c * (-1.0) ** np.arange(len(c))  # noqa: E731
    r = P.polysub(P.polymul(p, neg(p)), P.polymul(q, neg(q)))
    f = _even_part_in_y(np.asarray(r))
    while len(f) > 1 and f[-1] == 0.0:
        f = f[:-1]
    return f


def auxiliary_quadratic(w: QuasiPolynomial) -> AuxiliaryQuadratic:
    if w.degree != 2:
        raise DimensionError("the auxiliary quadratic exists for planar systems only")
    _, k = single_exponential_form(w)
    f = np.zeros(3)
    c = auxiliary_polynomial(w)
    f[: len(c)] = c
    return AuxiliaryQuadratic(float(f[2]), float(f[1]) + 0.0, float(f[0]) + 0.0, k)


def crossing_frequencies(f: AuxiliaryQuadratic) -> list[CrossingFrequency]:
    """Positive zeros of ``F`` with the direction each crossing takes."""
    disc = f.discriminant
    scale = f.c1 * f.c1 + 4.0 * abs(f.c0)
    if scale == 0.0:
        return []
    if abs(disc) <= DEGENERACY_TOL * scale:
        raise NonGenericError(f"discriminant {disc!r} of F is numerically zero")
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    # stable quadratic formula
    qq = -0.5 * (f.c1 + math.copysign(sq, f.c1 if f.c1 != 0 else 1.0))
    ys = sorted({qq / f.c2, f.c0 / qq} if qq != 0.0 else {0.0})
    ytol = DEGENERACY_TOL * math.sqrt(scale)
    out = []
    for y in ys:
        if y <= ytol:
            continue
        slope = f.derivative(y)
        direction = Direction.DESTABILIZING if slope > 0 else Direction.STABILIZING
        out.append(CrossingFrequency(y, math.sqrt(y), direction))
    return out


# --------------------------------------------------------------------------
# critical angles and delays


def _angle(cosv: float, sinv: float) -> CriticalAngle:
    # exact only at a true crossing frequency; project back onto the circle
    r = math.hypot(cosv, sinv)
    if r == 0.0:
        raise NonGenericError("critical angle undefined")
    cosv, sinv = cosv / r, sinv / r
    theta = math.atan2(sinv, cosv) % TWO_PI
    if min(theta, TWO_PI - theta) < ANGLE_SNAP:
        theta = 0.0
    return CriticalAngle(cosv, sinv, theta)


def crossing_angle(w: QuasiPolynomial, omega: float) -> CriticalAngle:
    """Angle ``k omega tau (mod 2 pi)`` solving ``W(i omega) = 0``.

    Valid for every single-exponential form: ``e^{i k omega tau} = -Q(i omega)/P(i omega)``.
    """
    q, _ = single_exponential_form(w)
    lam = 1j * omega
    pv = P.polyval(lam, w.p)
    qv = P.polyval(lam, q)
    if abs(pv) == 0.0 or abs(qv) == 0.0:
        raise NonGenericError(f"P and Q vanish together at i*{omega}")
    r = -qv / pv
    r /= abs(r)
    return _angle(float(r.real), float(r.imag))


def critical_angle(sys: DelaySystem, omega: float) -> CriticalAngle:
    """Critical angle for the own-delay placement from its Re/Im system.

    Other single-exponential placements fall back to ``crossing_angle``.
    """
    m = sys.matrix
    if sys.placement.kind is Placement.OWN and m.a11 != 0.0:
        k = m.a12 * m.a21
        den = m.a11 * (omega * omega + m.a22 * m.a22)
        cosv = k * m.a22 / den
        sinv = -omega * (omega * omega + m.a22 * m.a22 + k) / den
        return _angle(cosv, sinv)
    return crossing_angle(quasi_polynomial(sys), omega)


def _progression(theta: float, omega: float, k: int) -> Iterator[float]:
    n = 0
    while True:
        yield (theta + TWO_PI * n) / (k * omega)
        n += 1


def critical_delays(sys: DelaySystem, cf: CrossingFrequency, tau_max: float) -> CriticalDelaySequence:
    """Delays in ``[0, tau_max]`` at which ``i omega`` is a characteristic root."""
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    w = quasi_polynomial(sys)
    _, k = single_exponential_form(w)
    ang = critical_angle(sys, cf.omega)
    delays = []
    for t in _progression(ang.theta, cf.omega, k):
        if t > tau_max:
            break
        delays.append(t)
    return CriticalDelaySequence(cf.omega, ang.theta, tuple(delays), cf.direction, k)


# --------------------------------------------------------------------------
# event walk


@dataclass(frozen=True)
class _Seq:
    omega: float
    theta: float
    k: int
    direction: Direction


def _count_unstable_roots(w: QuasiPolynomial) -> int:
    roots = tau_zero_roots(w)
    tol = DEGENERACY_TOL * max(1.0, float(np.max(np.abs(roots))) if len(roots) else 1.0)
    return int(np.sum(roots.real > tol))


def _walk(baseline: BaselineStability, initial: int, seqs: Sequence[_Seq], tau_max: float,
          method: str) -> SwitchReport:
    heap = []
    gens = []
    for i, s in enumerate(seqs):
        g = _progression(s.theta, s.omega, s.k)
        gens.append(g)
        heapq.heappush(heap, (next(g), i))
    has_destab = any(s.direction is Direction.DESTABILIZING for s in seqs)
    has_stab = any(s.direction is Direction.STABILIZING for s in seqs)

    count = initial
    events: list[CrossingEvent] = []
    prev_tau = -math.inf
    prev_seq = -1
    while heap:
        tau, i = heapq.heappop(heap)
        s = seqs[i]
        if prev_seq != i and abs(tau - prev_tau) <= DEGENERACY_TOL * max(1.0, tau):
            raise NonGenericError(f"two crossings coincide at tau={tau!r}")
        prev_tau, prev_seq = tau, i
        e = CrossingEvent(tau, s.direction, s.omega)
        count += _delta(e)
        events.append(e)
        heapq.heappush(heap, (next(gens[i]), i))
        if len(events) > _MAX_EVENTS:
            raise RuntimeError("switch walk did not terminate")
        if tau <= tau_max:
            continue
        # past the window: stop once no further switch is possible
        if not has_destab and count == 0:
            break
        if not has_stab and count > 0:
            break
        if count >= 4:
            # destabilizing progressions are denser, so the count drops by at most one pair
            break
    return assemble_report(baseline, initial, events, tau_max, method)


def assemble_report(baseline: BaselineStability, initial: int, events: Sequence[CrossingEvent],
                    tau_max: float, method: str, eventual: Eventual | None = None,
                    notes: Sequence[str] = ()) -> SwitchReport:
    """Build a report from time-ordered crossing events.

    ``events`` may run past ``tau_max``; those later events still decide the
    switch total and, unless ``eventual`` is given, the long-delay verdict.
    """
    count = initial
    switches: list[Switch] = []
    for e in events:
        new = count + _delta(e)
        if new < 0:
            raise AssertionError(f"unstable root count went negative at tau={e.tau!r}")
        if e.tau > 0.0:
            if count == 0 and new > 0:
                switches.append(Switch(e.tau, "unstable"))
            elif count > 0 and new == 0:
                switches.append(Switch(e.tau, "stable"))
        count = new

    stable0 = initial + sum(_delta(e) for e in events if e.tau == 0.0) == 0
    intervals = []
    lo = 0.0 if stable0 else None
    for sw in switches:
        if sw.becomes == "stable":
            lo = sw.tau
        elif lo is not None:
            intervals.append((lo, sw.tau))
            lo = None
    if lo is not None:
        intervals.append((lo, None))
    intervals = [iv for iv in intervals if iv[0] <= tau_max]

    if eventual is None:
        if count == 0:
            eventual = Eventual("stable_forever")
        else:
            eventual = Eventual("unstable_beyond", switches[-1].tau if switches else 0.0)
    return SwitchReport(
        baseline=baseline,
        initial_unstable=initial,
        events=tuple(e for e in events if e.tau <= tau_max),
        switches=tuple(sw for sw in switches if sw.tau <= tau_max),
        stable_intervals=tuple(intervals),
        eventual=eventual,
        tau_max=float(tau_max),
        total_switches=len(switches),
        method=method,
        notes=tuple(notes),
    )


def baseline_of(sys: DelaySystem) -> BaselineStability:
    if sys.matrix.dimension != 2:
        raise DimensionError("baseline classification is planar-only")
    return classify_matrix(sys.tau_zero_matrix())


def enumerate_switches(sys: DelaySystem, tau_max: float) -> SwitchReport:
    """Every stability switch of a planar single-exponential system.

    A marginal-centre baseline (roots on the imaginary axis at zero delay) is
    admitted: the progression starting at ``tau = 0`` says which way those
    roots leave the axis.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    if sys.placement.kind is Placement.PURE_CROSS:
        raise NonGenericError("pure cross-delay system is non-generic (Lyapunov-marginal at best)")
    baseline = baseline_of(sys)
    if baseline.verdict is Verdict.MARGINAL_ZERO_ROOT:
        raise NonGenericError("zero determinant: lam = 0 is a root for every delay")
    w = quasi_polynomial(sys)
    seqs = []
    if w.has_q1 or w.has_q2:
        f = auxiliary_quadratic(w)
        for cf in crossing_frequencies(f):
            ang = critical_angle(sys, cf.omega) if f.delay_multiple == 1 else crossing_angle(w, cf.omega)
            if ang.theta == 0.0 and baseline.verdict is not Verdict.MARGINAL_CENTER:
                raise NonGenericError(f"crossing at tau = 0 with non-marginal baseline (omega={cf.omega})")
            seqs.append(_Seq(cf.omega, ang.theta, f.delay_multiple, cf.direction))
    elif baseline.verdict is Verdict.MARGINAL_CENTER:
        raise NonGenericError("marginal centre with no delay dependence")
    if baseline.verdict is Verdict.MARGINAL_CENTER and not any(s.theta == 0.0 for s in seqs):
        raise NonGenericError("marginal centre roots do not leave the axis transversally")
    return _walk(baseline, _count_unstable_roots(w), seqs, tau_max, "analytic")


# --------------------------------------------------------------------------
# z-substitution for the full-delay form  lam^2 + c lam s + d s^2


def is_z_form(w: QuasiPolynomial) -> bool:
    """``W = lam^2 + c lam e^{-lam tau} + d e^{-2 lam tau}`` with both c and d present."""
    p = w.p
    q1 = tuple(w.q1) + (0.0,) * (2 - len(w.q1))
    return (
        len(p) == 3 and p[0] == 0.0 and p[1] == 0.0 and p[2] == 1.0
        and q1[0] == 0.0 and w.has_q1 and w.has_q2 and len(w.q2) == 1
    )


def full_delay_crossing_rate(omega: float, tau: float) -> float:
    """``d Re(lam)/d tau`` at ``lam = i omega`` for the full-delay form."""
    return omega * omega / (1.0 + omega * omega * tau * tau)


def zsubstitution_analysis(sys: DelaySystem, tau_max: float) -> SwitchReport:
    """Switches of the full-delay form via ``z = lam e^{lam tau}``.

    ``z`` solves ``z^2 + c z + d = 0``; each root gives crossings at
    ``omega = |z|`` and ``omega tau = arg z - pi/2 (mod 2 pi)``, all of them
    destabilizing, so at most one switch occurs.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    w = quasi_polynomial(sys)
    if not is_z_form(w):
        raise ValueError(f"{sys.placement.name}: quasi-polynomial is not of the full-delay form")
    baseline = baseline_of(sys)
    if baseline.verdict.marginal:
        raise NonGenericError(f"marginal baseline ({baseline.verdict.value})")
    c = w.q1[1]
    d = w.q2[0]
    zs = np.roots([1.0, c, d])
    if abs(zs[0] - zs[1]) <= DEGENERACY_TOL * max(1.0, abs(zs[0])):
        raise NonGenericError("double root of the z-quadratic")
    seqs = []
    for z in zs:
        omega = float(abs(z))
        ang = _angle(math.cos(np.angle(z) - math.pi / 2), math.sin(np.angle(z) - math.pi / 2))
        if ang.theta == 0.0:
            raise NonGenericError("crossing at tau = 0")
        seqs.append(_Seq(omega, ang.theta, 1, Direction.DESTABILIZING))
    return _walk(baseline, _count_unstable_roots(w), seqs, tau_max, "z-substitution")


# --------------------------------------------------------------------------
# trigonometric scan for irreducible placements


@dataclass(frozen=True)
class TrigZero:
    omega: float
    slope_sign: int


def trig_function(w: QuasiPolynomial, tau: float):
    """``G_tau(omega) = |P(i omega)|^2 - |Q1(i omega) + Q2(i omega) e^{-i omega tau}|^2``.

    Its zeros are necessary for ``i omega`` to be a root at this ``tau``.
    """
    def g(omega):
        lam = 1j * np.asarray(omega, dtype=float)
        pv = P.polyval(lam, w.p)
        rest = P.polyval(lam, w.q1) + P.polyval(lam, w.q2) * np.exp(-lam * tau)
        return np.abs(pv) ** 2 - np.abs(rest) ** 2
    return g


def trig_scan(sys: DelaySystem, tau: float, steps: int = 4096) -> list[TrigZero]:
    """Zeros of ``G_tau`` on ``(0, omega_hi]`` by sign-change bracketing."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    w = quasi_polynomial(sys)
    g = trig_function(w, tau)
    hi = omega_ceiling(w)
    grid = np.linspace(0.0, hi, steps + 1)[1:]
    vals = g(grid)
    out = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            out.append(TrigZero(float(grid[i]), int(np.sign(b))))
        elif a * b < 0:
            r = brentq(lambda x: float(g(x)), grid[i], grid[i + 1], xtol=1e-13)
            out.append(TrigZero(float(r), 1 if b > a else -1))
    return out


# --------------------------------------------------------------------------
# theorem regimes


def classify_theorem_case(sys: DelaySystem) -> TheoremClassification:
    m = sys.matrix
    kind = sys.placement.kind
    if m.dimension != 2:
        return TheoremClassification(Regime.IRREDUCIBLE_NUMERIC_ONLY, None)
    if kind is Placement.PURE_CROSS:
        return TheoremClassification(Regime.NON_GENERIC, None)
    baseline = baseline_of(sys)
    if baseline.verdict.marginal:
        # the theorem bounds assume a hyperbolic zero-delay system
        return TheoremClassification(Regime.NON_GENERIC, None)
    cross = abs(m.a12 * m.a21)
    own = abs(m.a11 * m.a22)
    tie = abs(cross - own) <= DEGENERACY_TOL * max(cross, own, 1e-300)
    stable = baseline.verdict is Verdict.STABLE
    if kind is Placement.OWN:
        if tie:
            return TheoremClassification(Regime.NON_GENERIC, None)
        if cross < own:
            return TheoremClassification(Regime.THM1_CASE2 if stable else Regime.THM1_CASE1,
                                         1 if stable else 0)
        return TheoremClassification(Regime.THM2_MULTI, None)
    if kind is Placement.CROSS:
        if tie:
            return TheoremClassification(Regime.NON_GENERIC, None)
        if cross < own:
            return TheoremClassification(Regime.THM3_NO_SWITCH, 0)
        return TheoremClassification(Regime.THM3_ONE_SWITCH, 1 if stable else 0)
    if kind in (Placement.ROW_R, Placement.COL_R, Placement.ANTI_DIAGONAL):
        return TheoremClassification(Regime.THM4_AT_MOST_ONE, 1)
    if kind is Placement.DIAGONAL:
        scale = max(abs(m.a11), abs(m.a22), 1e-300)
        if abs(m.a11 + m.a22) <= DEGENERACY_TOL * scale:
            return TheoremClassification(Regime.THM4_AT_MOST_ONE, 1)
        if m.a11 == 0.0:
            return TheoremClassification(Regime.THM4_ARBITRARY_NEAR_ZERO, None)
        return TheoremClassification(Regime.IRREDUCIBLE_NUMERIC_ONLY, None)
    if kind is Placement.FULL:
        return TheoremClassification(Regime.THM5, 1)
    if kind in (Placement.THREE_OWN_LAST, Placement.THREE_CROSS_LAST):
        return TheoremClassification(Regime.IRREDUCIBLE_NUMERIC_ONLY, None)
    if kind is Placement.MIXED_SELF:
        return TheoremClassification(Regime.THM2_MULTI, None)
    if kind is Placement.NONE:
        return TheoremClassification(Regime.THM3_NO_SWITCH, 0)
    return TheoremClassification(Regime.NON_GENERIC, None)


def analytic_report(sys: DelaySystem, tau_max: float) -> SwitchReport:
    """Dispatch to the closed-form route that fits the quasi-polynomial."""
    if sys.matrix.dimension != 2:
        raise TwoExponentialError("triad systems are analysed with the spectral oracle")
    w = quasi_polynomial(sys)
    if is_z_form(w):
        return zsubstitution_analysis(sys, tau_max)
    return enumerate_switches(sys, tau_max)


# --------------------------------------------------------------------------
# witness search


def switch_count(sys: DelaySystem) -> int | None:
    """Total number of switches over all delays, or None when non-generic."""
    try:
        return enumerate_switches(sys, 1e-9).total_switches
    except (NonGenericError, AssertionError):
        return None


def find_n_switch_region(placement: Placement | str, n: int,
                         box: Sequence[tuple[float, float]] | tuple[float, float] = (-9.0, 9.0),
                         budget: int = 100_000, seed: int = 0) -> InteractionMatrix | None:
    """Search a coefficient box for a matrix with exactly ``n`` switches.

    Scrambled Sobol points cover the box first; the remaining budget perturbs
    the samples whose count came closest to ``n``.
    """
    if isinstance(placement, str):
        placement = Placement.parse(placement)
    if placement is not Placement.OWN:
        raise ValueError("witness search is implemented for the own-delay placement")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if len(box) == 2 and not isinstance(box[0], (tuple, list)):
        box = [tuple(box)] * 4
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    rng = np.random.default_rng(seed)
    sobol = qmc.Sobol(d=4, scramble=True, seed=seed)
    n_sobol = max(1, budget // 2)
    pts = qmc.scale(sobol.random(1 << int(math.ceil(math.log2(n_sobol)))), lo, hi)[:n_sobol]
    best: list[tuple[int, int, np.ndarray]] = []
    used = 0
    for x in pts:
        used += 1
        c = switch_count(DelaySystem(InteractionMatrix(*x), DelayPlacement(placement)))
        if c is None:
            continue
        if c == n:
            return InteractionMatrix(*map(float, x))
        best.append((abs(c - n), used, x))
    best.sort(key=lambda t: (t[0], t[1]))
    seeds = [b[2] for b in best[:32]] or [0.5 * (lo + hi)]
    width = 0.05 * (hi - lo)
    while used < budget:
        base = seeds[used % len(seeds)]
        x = np.clip(base + rng.normal(0.0, 1.0, 4) * width, lo, hi)
        used += 1
        c = switch_count(DelaySystem(InteractionMatrix(*x), DelayPlacement(placement)))
        if c == n:
            return InteractionMatrix(*map(float, x))
    return None
