"""Coefficient-space scans: switch counts per point, witnesses, spot verification."""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .charpoly import quasi_polynomial
from .model import DelayPlacement, DelaySystem, DimensionError, InteractionMatrix, NonGenericError
from .oracle import Agreement, verify_report
from .switches import TwoExponentialError, analytic_report, baseline_of

MAX_GRID = 10_000_000
NON_GENERIC = "NonGeneric"
IRREDUCIBLE = "IrreducibleNumericOnly"


@dataclass(frozen=True)
class WitnessRequest:
    n: int
    at_least: bool = False
    # restrict witnesses to this zero-delay verdict, e.g. "stable"
    baseline: str | None = None

    @classmethod
    def parse(cls, raw) -> "WitnessRequest":
        if isinstance(raw, int) and not isinstance(raw, bool):
            return cls(raw)
        if isinstance(raw, dict):
            extra = set(raw) - {"n", "at_least", "baseline"}
            if extra or "n" not in raw:
                raise ValueError(f"bad witness request {raw!r}")
            return cls(int(raw["n"]), bool(raw.get("at_least", False)), raw.get("baseline"))
        raise ValueError(f"bad witness request {raw!r}")

    def matches(self, count: int, baseline: str) -> bool:
        ok = count >= self.n if self.at_least else count == self.n
        return ok and (self.baseline is None or baseline == self.baseline)

    @property
    def label(self) -> str:
        s = f">={self.n}" if self.at_least else str(self.n)
        return s + (f"/{self.baseline}" if self.baseline else "")


@dataclass(frozen=True)
class ScanSpec:
    """Either a product grid (``ranges``: per-coefficient ``[lo, hi, count]``) or
    ``samples`` scrambled Sobol points in the box spanned by ``ranges``."""

    ranges: tuple[tuple[float, float, int], ...]
    mode: str = "grid"
    samples: int = 0
    requests: tuple[WitnessRequest, ...] = ()
    verify_fraction: float = 0.001
    verify_witnesses: int = 3
    max_witnesses: int = 100
    budget: int = MAX_GRID
    time_budget: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("grid", "sobol"):
            raise ValueError(f"scan mode must be grid or sobol, got {self.mode!r}")
        for lo, hi, n in self.ranges:
            if not (hi >= lo) or n < 1:
                raise ValueError(f"bad range {(lo, hi, n)!r}")
        if self.mode == "grid" and self.size > MAX_GRID:
            raise ValueError(f"grid has {self.size} points, limit is {MAX_GRID}")
        if self.mode == "sobol" and not 0 < self.samples <= MAX_GRID:
            raise ValueError("sobol mode needs 0 < samples <= 10^7")
        if not 0.0 <= self.verify_fraction <= 1.0:
            raise ValueError("verify_fraction must lie in [0, 1]")

    @property
    def size(self) -> int:
        if self.mode == "sobol":
            return self.samples
        return math.prod(int(n) for _, _, n in self.ranges)


@dataclass
class ScanPoint:
    index: int
    coords: tuple[float, ...]
    count: int | str
    baseline: str


@dataclass
class ScanResult:
    points: list[ScanPoint]
    witnesses: dict[str, list[list[float]]]
    verified: list[dict] = field(default_factory=list)
    partial: bool = False
    histogram: dict[str, int] = field(default_factory=dict)

    def disagreements(self) -> list[dict]:
        return [v for v in self.verified if not v["ok"]]

    def to_dict(self, include_points: bool = False) -> dict:
        d = {
            "partial": self.partial,
            "evaluated": len(self.points),
            "histogram": self.histogram,
            "witnesses": self.witnesses,
            "verified": self.verified,
        }
        if include_points:
            d["points"] = [[p.index, list(p.coords), p.count] for p in self.points]
        return d


def _grid_points(spec: ScanSpec):
    axes = [np.linspace(lo, hi, int(n)) if n > 1 else np.array([lo]) for lo, hi, n in spec.ranges]
    for coords in itertools.product(*axes):
        yield tuple(float(c) + 0.0 for c in coords)


def _sobol_points(spec: ScanSpec, seed: int):
    lo = np.array([r[0] for r in spec.ranges], dtype=float)
    hi = np.array([r[1] for r in spec.ranges], dtype=float)
    sampler = qmc.Sobol(d=len(spec.ranges), scramble=True, seed=seed)
    m = int(math.ceil(math.log2(max(spec.samples, 1))))
    pts = qmc.scale(sampler.random_base2(m), lo, hi)[: spec.samples]
    for row in pts:
        yield tuple(float(c) for c in row)


def _system(coords, placement: DelayPlacement) -> DelaySystem:
    return DelaySystem(InteractionMatrix.from_sequence(coords), placement)


def evaluate_point(coords, placement: DelayPlacement) -> tuple[int | str, str]:
    """Total switch count over all delays plus the baseline verdict name."""
    try:
        sys = _system(coords, placement)
        base = baseline_of(sys).verdict.value
    except DimensionError:
        return IRREDUCIBLE, "n/a"
    try:
        return analytic_report(sys, 1e-9).total_switches, base
    except NonGenericError:
        return NON_GENERIC, base
    except (TwoExponentialError, ValueError):
        return IRREDUCIBLE, base
    except AssertionError:
        return NON_GENERIC, base


def _chunk(args):
    chunk, placement = args
    return [(i, c, *evaluate_point(c, placement)) for i, c in chunk]


def verify_point(coords, placement: DelayPlacement) -> tuple[Agreement, float]:
    """Oracle check of the analytic report over a window covering every switch."""
    sys = _system(coords, placement)
    probe = analytic_report(sys, 1e-9)
    last = probe.eventual.tau or 0.0
    tau_max = 1.25 * last + 0.5
    report = analytic_report(sys, tau_max)
    return verify_report(report, quasi_polynomial(sys)), tau_max


def run_scan(spec: ScanSpec, placement: DelayPlacement, seed: int = 0) -> ScanResult:
    """Evaluate every scan point, collect witnesses, verify a seeded subset.

    Results are keyed by point index, so worker scheduling never changes the output.
    """
    gen = _grid_points(spec) if spec.mode == "grid" else _sobol_points(spec, seed)
    limit = min(spec.size, spec.budget)
    partial = spec.size > spec.budget
    indexed = list(zip(range(limit), gen))
    t0 = time.monotonic()
    results: list[tuple] = []
    chunk = 2048
    chunks = [(indexed[i:i + chunk], placement) for i in range(0, len(indexed), chunk)]
    if spec.workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for part in pool.map(_chunk, chunks):
                results.extend(part)
                if spec.time_budget is not None and time.monotonic() - t0 > spec.time_budget:
                    partial = True
                    break
    else:
        for args in chunks:
            results.extend(_chunk(args))
            if spec.time_budget is not None and time.monotonic() - t0 > spec.time_budget:
                partial = True
                break
    results.sort(key=lambda r: r[0])
    points = [ScanPoint(i, c, n, b) for i, c, n, b in results]

    hist: dict[str, int] = {}
    for p in points:
        hist[str(p.count)] = hist.get(str(p.count), 0) + 1
    hist = dict(sorted(hist.items(), key=lambda kv: (not kv[0].isdigit(), int(kv[0]) if kv[0].isdigit() else 0, kv[0])))

    witnesses: dict[str, list[list[float]]] = {}
    matched: dict[str, list[ScanPoint]] = {}
    for req in spec.requests:
        hits = [p for p in points if isinstance(p.count, int) and req.matches(p.count, p.baseline)]
        matched[req.label] = hits
        witnesses[req.label] = [list(p.coords) for p in hits[: spec.max_witnesses]]

    rng = np.random.default_rng(seed)
    counted = [p for p in points if isinstance(p.count, int)]
    n_verify = int(round(spec.verify_fraction * len(counted)))
    if spec.verify_fraction > 0 and counted:
        n_verify = max(1, n_verify)
    picks = sorted(rng.choice(len(counted), size=min(n_verify, len(counted)), replace=False)) if counted else []
    to_verify = [("sample", counted[i]) for i in picks]
    for req in spec.requests:
        to_verify += [("witness " + req.label, p) for p in matched[req.label][: spec.verify_witnesses]]
    verified = []
    for why, p in to_verify:
        agreement, tau_max = verify_point(p.coords, placement)
        bad = agreement.first_disagreement
        verified.append({
            "reason": why,
            "coords": list(p.coords),
            "switches": p.count,
            "tau_max": tau_max,
            "ok": agreement.ok,
            "first_disagreement": None if bad is None else
            {"tau": bad.tau, "predicted": bad.predicted, "observed": bad.observed},
        })
    return ScanResult(points, witnesses, verified, partial, hist)
