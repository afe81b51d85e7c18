"""Root counting for quasi-polynomials, independent of the closed-form switch analysis.

Counts come from the argument principle on rectangles; the rightmost root is
located by Newton iteration from a grid of seeds.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .charpoly import QuasiPolynomial, derivative, evaluate, omega_ceiling, tau_zero_polynomial
from .model import BaselineStability, Verdict
from .switches import CrossingEvent, Direction, Eventual, SwitchReport, assemble_report

AXIS_MARGIN = 1e-7
NEAR_ZERO = 1e-10
MAX_NUDGES = 8
MAX_EVALS = 1 << 21


class IndeterminateRegion(RuntimeError):
    """The winding count could not be certified on this contour."""


class BoundaryRootError(IndeterminateRegion):
    """A root sits on an edge that is not allowed to move."""


@dataclass(frozen=True)
class SearchRegion:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ValueError(f"degenerate rectangle {self}")

    def expanded(self, frac: float, keep_left: bool = False) -> "SearchRegion":
        dr = frac * (self.re_hi - self.re_lo)
        di = frac * (self.im_hi - self.im_lo)
        return SearchRegion(self.re_lo if keep_left else self.re_lo - dr, self.re_hi + dr,
                            self.im_lo - di, self.im_hi + di)


class OracleVerdict(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class SpectralVerdict:
    unstable_count: int
    rightmost: complex | None
    verdict: OracleVerdict

    @property
    def stable(self) -> bool:
        return self.verdict is OracleVerdict.STABLE


def _edge_winding(f, a: complex, b: complex, n0: int, budget: list[int], threshold: float,
                  edge_id: int):
    """Total phase change of ``f`` along the segment a -> b.

    Segments are bisected until every phase increment is below pi/2.
    """
    t = np.linspace(0.0, 1.0, n0 + 1)
    vals = f(a + (b - a) * t)
    budget[0] += len(t)
    while True:
        if np.min(np.abs(vals)) < threshold:
            return None, edge_id
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) >= 0.5 * math.pi
        if not bad.any():
            return float(np.sum(dphi)), edge_id
        if budget[0] > MAX_EVALS:
            raise IndeterminateRegion("subdivision budget exhausted")
        mids = 0.5 * (t[:-1][bad] + t[1:][bad])
        mvals = f(a + (b - a) * mids)
        budget[0] += len(mids)
        t = np.concatenate([t, mids])
        vals = np.concatenate([vals, mvals])
        order = np.argsort(t, kind="stable")
        t, vals = t[order], vals[order]


def count_roots(w: QuasiPolynomial, tau: float, region: SearchRegion, min_points: int = 64,
                keep_left: bool = False) -> int:
    """Number of zeros of ``W(., tau)`` inside ``region``, with multiplicity.

    When ``|W|`` nearly vanishes on the contour the rectangle grows by 1 %
    and the count is retried, at most ``MAX_NUDGES`` times.  ``keep_left``
    pins the left edge; a root on it raises BoundaryRootError instead.
    """
    f = lambda z: evaluate(w, z, tau)  # noqa: E731
    threshold = NEAR_ZERO * max(1.0, w.scale) ** w.degree
    for _ in range(MAX_NUDGES + 1):
        corners = [complex(region.re_lo, region.im_lo), complex(region.re_hi, region.im_lo),
                   complex(region.re_hi, region.im_hi), complex(region.re_lo, region.im_hi)]
        budget = [0]
        total = 0.0
        hit = None
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            # the exponential only rotates along vertical edges; keep its
            # phase change per initial segment under pi/4
            rise = abs(b.imag - a.imag)
            n0 = max(min_points, int(math.ceil(4.0 * tau * rise / math.pi)) + 1)
            phase, edge = _edge_winding(f, a, b, n0, budget, threshold, k)
            if phase is None:
                hit = edge
                break
            total += phase
        if hit is None:
            n = total / (2.0 * math.pi)
            r = round(n)
            if abs(n - r) > 1e-3:
                raise IndeterminateRegion(f"non-integer winding {n!r}")
            return int(r)
        if keep_left and hit == 3:
            raise BoundaryRootError("root on the pinned left edge")
        region = region.expanded(0.01, keep_left=keep_left)
    raise IndeterminateRegion("contour kept passing through a root")


def default_region(w: QuasiPolynomial, margin: float = AXIS_MARGIN) -> SearchRegion:
    # Both the coefficient sum and the modulus ceiling bound |lam| for
    # Re lam >= 0 (there |e^{-lam tau}| <= 1); the smaller one is used.
    om = omega_ceiling(w)
    re_hi = max(1.0, min(w.coefficient_scale(), om))
    return SearchRegion(margin, re_hi, -om, om)


def newton_refine(w: QuasiPolynomial, tau: float, seeds, max_iter: int = 50, tol: float = 1e-12):
    """Vectorised Newton on ``W``; stagnating points take a secant step instead.

    Returns ``(roots, converged)`` arrays aligned with ``seeds``.
    """
    z = np.array(seeds, dtype=complex).ravel()
    with np.errstate(all="ignore"):
        zprev = z + 1e-3
        fprev = evaluate(w, zprev, tau)
        fz = evaluate(w, z, tau)
        z, fz, converged = _newton_loop(w, tau, z, fz, zprev, fprev, max_iter, tol)
    scale = max(1.0, w.scale) ** w.degree
    converged &= np.abs(fz) <= 1e-8 * scale
    return z, converged


def _newton_loop(w, tau, z, fz, zprev, fprev, max_iter, tol):
    converged = np.zeros(z.shape, dtype=bool)
    for _ in range(max_iter):
        dz = fz / derivative(w, z, tau)
        znew = z - dz
        fnew = evaluate(w, znew, tau)
        stall = ~np.isfinite(fnew) | (np.abs(fnew) >= np.abs(fz))
        if stall.any():
            denom = fz[stall] - fprev[stall]
            safe = np.abs(denom) > 0
            sec = z[stall].copy()
            sec[safe] = z[stall][safe] - fz[stall][safe] * (z[stall][safe] - zprev[stall][safe]) / denom[safe]
            znew[stall] = sec
            fnew[stall] = evaluate(w, sec, tau)
        zprev, fprev = z, fz
        z, fz = znew, fnew
        step = np.abs(z - zprev)
        converged = np.isfinite(z) & (step <= tol * np.maximum(1.0, np.abs(z)))
        if converged.all():
            break
    return z, fz, converged


def rightmost_root(w: QuasiPolynomial, tau: float, region: SearchRegion | None = None) -> complex | None:
    """Rightmost root found from a seed grid over the upper half of ``region``."""
    region = region or default_region(w)
    res = np.linspace(-region.re_hi, region.re_hi, 10)
    # root chains are spaced about 2 pi / tau apart along the imaginary direction
    n_im = int(min(2000, max(24, math.ceil(tau * region.im_hi / 2.0))))
    ims = np.linspace(0.0, region.im_hi, n_im)
    grid = (res[:, None] + 1j * ims[None, :]).ravel()
    seeds = np.concatenate([grid, P.polyroots(tau_zero_polynomial(w))])
    roots, ok = newton_refine(w, tau, seeds)
    roots = roots[ok & np.isfinite(roots)]
    if roots.size == 0:
        return None
    best = roots[np.argmax(roots.real)]
    return complex(best.real, abs(best.imag))


def count_unstable(w: QuasiPolynomial, tau: float, margin: float = AXIS_MARGIN) -> int | None:
    """Roots with ``Re lam > margin``, or None when one lies within ``margin`` of the axis."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    inner = default_region(w, margin)
    try:
        n_in = count_roots(w, tau, inner, keep_left=True)
        outer = SearchRegion(-margin, inner.re_hi, inner.im_lo, inner.im_hi)
        n_out = count_roots(w, tau, outer, keep_left=True)
    except BoundaryRootError:
        return None
    return n_in if n_in == n_out else None


def unstable_count(w: QuasiPolynomial, tau: float, margin: float = AXIS_MARGIN) -> SpectralVerdict:
    """Count plus refined rightmost root; MARGINAL carries count -1."""
    n = count_unstable(w, tau, margin)
    right = rightmost_root(w, tau, default_region(w, margin))
    if n is None:
        return SpectralVerdict(-1, right, OracleVerdict.MARGINAL)
    verdict = OracleVerdict.STABLE if n == 0 else OracleVerdict.UNSTABLE
    return SpectralVerdict(n, right, verdict)


# --------------------------------------------------------------------------
# cross-checking reports


@dataclass(frozen=True)
class Sample:
    tau: float
    predicted: int
    observed: int
    verdict: OracleVerdict


@dataclass(frozen=True)
class Agreement:
    ok: bool
    samples: tuple[Sample, ...]
    first_disagreement: Sample | None = None


def verify_report(report: SwitchReport, w: QuasiPolynomial) -> Agreement:
    """Compare the report's predicted root count with the oracle.

    Samples are ``tau = 0``, the midpoint of every gap between consecutive
    events (and before the first), and ``tau_max``.
    """
    taus = [0.0]
    edges = [0.0] + [e.tau for e in report.events if e.tau > 0.0] + [report.tau_max]
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            taus.append(0.5 * (a + b))
    if all(abs(report.tau_max - e.tau) > 1e-6 for e in report.events):
        taus.append(report.tau_max)
    samples = []
    bad = None
    for tau in taus:
        v = unstable_count(w, tau)
        predicted = report.unstable_count_at(tau)
        if tau == 0.0 and report.baseline.verdict.marginal:
            ok = v.verdict is OracleVerdict.MARGINAL
        else:
            ok = v.verdict is not OracleVerdict.MARGINAL and v.unstable_count == predicted
        s = Sample(tau, predicted, v.unstable_count, v.verdict)
        samples.append(s)
        if not ok and bad is None:
            bad = s
    return Agreement(bad is None, tuple(samples), bad)


# --------------------------------------------------------------------------
# oracle-driven switch finding


def baseline_from_roots(w: QuasiPolynomial) -> BaselineStability:
    """Zero-delay classification from the ordinary characteristic polynomial (any size)."""
    c = tau_zero_polynomial(w)
    n = len(c) - 1
    roots = P.polyroots(c)
    trace = -c[n - 1]
    det = (-1) ** n * c[0]
    tol = 1e-9 * max(1.0, float(np.max(np.abs(roots))))
    if np.any(np.abs(roots) <= tol):
        verdict = Verdict.MARGINAL_ZERO_ROOT
    elif np.any(roots.real > tol):
        verdict = Verdict.UNSTABLE
    elif np.any(np.abs(roots.real) <= tol):
        verdict = Verdict.MARGINAL_CENTER
    else:
        verdict = Verdict.STABLE
    return BaselineStability(float(trace), float(det), verdict)


def _robust_count(w: QuasiPolynomial, tau: float, tol: float) -> int:
    # slow crossings keep the root inside the axis margin for a while, so
    # the probe moves outward geometrically
    for shift in (0.0, 0.1, -0.1, 0.3, -0.3, 1.0, -1.0, 3.0, -3.0, 10.0, -10.0, 30.0, -30.0):
        n = count_unstable(w, max(0.0, tau + shift * tol))
        if n is not None:
            return n
    raise IndeterminateRegion(f"root stays on the imaginary axis near tau={tau!r}")


def _crossing_omega(w: QuasiPolynomial, tau: float) -> float:
    om = omega_ceiling(w)
    seeds = 1j * np.linspace(0.0, om, 200) + 1e-3
    roots, ok = newton_refine(w, tau, seeds)
    roots = roots[ok]
    if roots.size == 0:
        return float("nan")
    near = roots[np.argmin(np.abs(roots.real))]
    return float(abs(near.imag))


def oracle_switches(w: QuasiPolynomial, tau_max: float, n_grid: int = 200, tol: float = 1e-5,
                    baseline: BaselineStability | None = None) -> SwitchReport:
    """Locate count changes of the oracle on ``[0, tau_max]`` by grid plus bisection.

    Crossings closer together than the grid spacing can be missed; the
    returned report's ``eventual`` is ``undetermined`` when the window ends stable.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    baseline = baseline or baseline_from_roots(w)
    if baseline.verdict.marginal:
        from .model import NonGenericError
        raise NonGenericError(f"marginal baseline ({baseline.verdict.value})")
    grid = np.linspace(0.0, tau_max, n_grid + 1)
    counts = [_robust_count(w, float(t), tol) for t in grid]
    events: list[CrossingEvent] = []

    def split(a: float, ca: int, b: float, cb: int):
        while b - a > tol:
            mid = 0.5 * (a + b)
            cm = _robust_count(w, mid, tol)
            if cm == ca:
                a = mid
            elif cm == cb:
                b = mid
            else:
                split(a, ca, mid, cm)
                a, ca = mid, cm
        tau = 0.5 * (a + b)
        direction = Direction.DESTABILIZING if cb > ca else Direction.STABILIZING
        omega = _crossing_omega(w, tau)
        for _ in range(abs(cb - ca) // 2):
            events.append(CrossingEvent(tau, direction, omega))

    for i in range(n_grid):
        if counts[i] != counts[i + 1]:
            split(float(grid[i]), counts[i], float(grid[i + 1]), counts[i + 1])
    events.sort(key=lambda e: e.tau)
    initial = counts[0]
    final = counts[-1]
    eventual = None if final > 0 else Eventual("undetermined")
    return assemble_report(baseline, initial, events, tau_max, "oracle-bisection", eventual)
