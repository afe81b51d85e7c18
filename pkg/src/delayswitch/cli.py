"""Command-line front end.

Every subcommand reads an optional JSON config, applies flag overrides,
validates the system, and writes deterministic artifacts into ``--out``.
Exit codes: 0 ok, 2 bad config, 3 non-generic input, 4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import oracle, sim
from .charpoly import quasi_polynomial, tau_zero_roots
from .model import (
    DelayPlacement,
    DelaySystem,
    DimensionError,
    InteractionMatrix,
    NonGenericError,
    Placement,
    build_system,
)
from .scan import ScanSpec, WitnessRequest, run_scan
from .switches import (
    Regime,
    SwitchReport,
    TwoExponentialError,
    analytic_report,
    auxiliary_quadratic,
    baseline_of,
    classify_theorem_case,
    critical_angle,
    crossing_angle,
    crossing_frequencies,
    is_z_form,
    trig_scan,
)

EXIT_OK, EXIT_CONFIG, EXIT_NONGENERIC, EXIT_DISAGREE = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    matrix: tuple[float, ...] | None = None
    placement: str = "own"
    a13: float = 0.0
    tau: float | None = None
    tau_max: float | None = None
    horizon: float | None = None
    step: float | None = None
    history: list | dict | None = None
    scan: dict | None = None
    out: str = "out"
    seed: int = 0
    verify: bool = True
    tol: float = 1e-5
    oracle_grid: int = 200
    plot: bool = True

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        vals = dict(raw)
        if vals.get("matrix") is not None:
            vals["matrix"] = tuple(float(v) for v in vals["matrix"])
        return cls(**vals)

    def system(self) -> DelaySystem:
        if self.matrix is None:
            raise ConfigError("no matrix given")
        try:
            m = InteractionMatrix.from_sequence(self.matrix)
            return build_system(m, DelayPlacement.parse(self.placement, self.a13))
        except (ValueError, DimensionError) as exc:
            raise ConfigError(str(exc)) from exc


# Switch structures that have been claimed in print for specific systems.
# Reports for these systems carry a note comparing the claim with the
# computed structure.
@dataclass(frozen=True)
class PublishedClaim:
    matrix: tuple[float, ...]
    placement: str
    switches: int | None
    taus: tuple[float, ...] = ()
    remark: str = ""


PUBLISHED_CLAIMS = (
    PublishedClaim((-1, 3, -2, 1), "own", 5, (0.92, 1.4, 3.3, 4.2, 5.46),
                   "zero-delay trace is 0, so the baseline is a marginal centre"),
    PublishedClaim((-28, -74, 76, -35, 76, -42, -28), "triad_j_own", 3, (),
                   "a11 = a33 factors W as (lam + 28) times an own-delay planar quasi-polynomial"),
    PublishedClaim((1, 1, -2, -2), "own", 0, (),
                   "claimed stable for every delay, but det = 0 puts lam = 0 in the spectrum"),
)
DISCREPANCY = "published-claim-discrepancy"


def _claim_for(cfg: RunConfig) -> PublishedClaim | None:
    if cfg.matrix is None:
        return None
    for c in PUBLISHED_CLAIMS:
        if c.placement == Placement.parse(cfg.placement).value and len(c.matrix) == len(cfg.matrix) \
                and all(abs(a - b) <= 1e-12 for a, b in zip(c.matrix, cfg.matrix)):
            return c
    return None


def _claim_notes(cfg: RunConfig, report: SwitchReport, agreement: oracle.Agreement | None) -> list[str]:
    claim = _claim_for(cfg)
    if claim is None:
        return []
    found = len(report.switches)
    taus = ", ".join(f"{t:g}" for t in claim.taus)
    claimed = f"{claim.switches} switch(es)" + (f" near tau = {taus}" if taus else "")
    if claim.switches == found and not taus:
        return []
    check = ""
    if agreement is not None:
        check = "; the root-counting oracle agrees with the computed report at every sample" if agreement.ok \
            else "; the root-counting oracle DISAGREES with the computed report"
    window = f"[0, {report.tau_max:g}]"
    computed = ", ".join(f"{t:.6g}" for t in report.switch_taus) or "none"
    return [f"{DISCREPANCY}: claimed {claimed}; computed {found} switch(es) on {window} at {computed}"
            f" ({claim.remark}){check}"]


# --------------------------------------------------------------------------
# output helpers


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _system_dict(cfg: RunConfig) -> dict:
    return {"matrix": list(cfg.matrix), "placement": Placement.parse(cfg.placement).value, "a13": cfg.a13}


def _qp_dict(w) -> dict:
    return {"p": list(w.p), "q1": list(w.q1), "q2": list(w.q2)}


def _write_switch_csv(out: Path, report: SwitchReport) -> None:
    out.mkdir(parents=True, exist_ok=True)
    by_tau = {e.tau: e for e in report.events}
    with (out / "switches.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "direction", "omega"])
        for s in report.switches:
            e = by_tau.get(s.tau)
            direction = "destabilizing" if s.becomes == "unstable" else "stabilizing"
            w.writerow([repr(s.tau), direction, repr(e.omega) if e else "nan"])


def _table(report: SwitchReport) -> str:
    lines = [f"{'tau':>12}  {'becomes':<9} omega"]
    by_tau = {e.tau: e for e in report.events}
    for s in report.switches:
        e = by_tau.get(s.tau)
        lines.append(f"{s.tau:12.6f}  {s.becomes:<9} {e.omega if e else float('nan'):.6f}")
    ev = report.eventual
    tail = {"stable_forever": "StableForever", "unstable_beyond": f"UnstableBeyond({ev.tau:.6f})"
            if ev.tau is not None else "UnstableBeyond", "undetermined": "Undetermined"}[ev.kind]
    lines.append(f"eventual: {tail}   total switches: {report.total_switches}   method: {report.method}")
    for n in report.notes:
        lines.append(f"note: {n}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# commands


def cmd_analyze(cfg: RunConfig) -> tuple[int, dict]:
    sys_ = cfg.system()
    w = quasi_polynomial(sys_)
    report: dict = {"command": "analyze", "system": _system_dict(cfg), "quasi_polynomial": _qp_dict(w)}
    code = EXIT_OK
    if sys_.matrix.dimension == 3:
        b = oracle.baseline_from_roots(w)
        report["baseline"] = {"trace": b.trace, "determinant": b.determinant, "verdict": b.verdict.value}
        report["classification"] = {"regime": Regime.IRREDUCIBLE_NUMERIC_ONLY.value, "bound": None}
        report["tau_zero_roots"] = [[r.real, r.imag] for r in sorted(tau_zero_roots(w), key=lambda z: (z.real, z.imag))]
        return code, report
    b = baseline_of(sys_)
    report["baseline"] = {"trace": b.trace, "determinant": b.determinant, "verdict": b.verdict.value}
    cls = classify_theorem_case(sys_)
    report["classification"] = {"regime": cls.regime.value, "bound": cls.bound}
    if cls.regime is Regime.NON_GENERIC:
        code = EXIT_NONGENERIC
    analysis: dict = {}
    try:
        if is_z_form(w):
            c, d = w.q1[1], w.q2[0]
            zs = sorted(np.roots([1.0, c, d]), key=lambda z: (z.imag, z.real))
            analysis = {"route": "z-substitution", "z_roots": [[z.real, z.imag] for z in zs],
                        "omegas": [abs(z) for z in zs]}
        elif cls.regime is Regime.IRREDUCIBLE_NUMERIC_ONLY:
            tau = cfg.tau or 0.0
            zeros = trig_scan(sys_, tau)
            analysis = {"route": "trig-scan", "tau": tau,
                        "zeros": [{"omega": z.omega, "slope_sign": z.slope_sign} for z in zeros]}
        else:
            f = auxiliary_quadratic(w)
            analysis = {"route": "auxiliary", "F": {"c2": f.c2, "c1": f.c1, "c0": f.c0},
                        "delta": f.discriminant, "delay_multiple": f.delay_multiple, "crossings": []}
            for cf in crossing_frequencies(f):
                ang = critical_angle(sys_, cf.omega) if f.delay_multiple == 1 else crossing_angle(w, cf.omega)
                analysis["crossings"].append({
                    "y": cf.y, "omega": cf.omega, "direction": cf.direction.value, "theta": ang.theta,
                    "first_delay": ang.theta / (f.delay_multiple * cf.omega),
                    "spacing": 2 * math.pi / (f.delay_multiple * cf.omega)})
    except NonGenericError as exc:
        analysis["non_generic"] = str(exc)
        code = EXIT_NONGENERIC
    except TwoExponentialError as exc:
        analysis["route"] = "none"
        analysis["note"] = str(exc)
    report["analysis"] = analysis
    return code, report


def _oracle_report(cfg: RunConfig, sys_: DelaySystem, tau_max: float) -> SwitchReport:
    w = quasi_polynomial(sys_)
    return oracle.oracle_switches(w, tau_max, n_grid=cfg.oracle_grid, tol=cfg.tol)


def cmd_switches(cfg: RunConfig) -> tuple[int, dict]:
    sys_ = cfg.system()
    tau_max = cfg.tau_max if cfg.tau_max is not None else 10.0
    w = quasi_polynomial(sys_)
    irreducible = sys_.matrix.dimension == 3 or classify_theorem_case(sys_).regime is Regime.IRREDUCIBLE_NUMERIC_ONLY
    if irreducible and not is_z_form(w):
        report = _oracle_report(cfg, sys_, tau_max)
    else:
        try:
            report = analytic_report(sys_, tau_max)
        except TwoExponentialError:
            report = _oracle_report(cfg, sys_, tau_max)
    agreement = None
    if cfg.verify and report.method != "oracle-bisection":
        agreement = oracle.verify_report(report, w)
    notes = list(report.notes) + _claim_notes(cfg, report, agreement)
    report = replace(report, notes=tuple(notes))
    out = {"command": "switches", "system": _system_dict(cfg), "report": report.to_dict()}
    if agreement is not None:
        out["verification"] = _agreement_dict(agreement)
    code = EXIT_OK if agreement is None or agreement.ok else EXIT_DISAGREE
    return code, out


def _agreement_dict(a: oracle.Agreement) -> dict:
    return {"ok": a.ok, "samples": [{"tau": s.tau, "predicted": s.predicted, "observed": s.observed,
                                     "verdict": s.verdict.value} for s in a.samples]}


def _history(cfg: RunConfig, n: int):
    h = cfg.history
    if h is None:
        return sim.default_history(n)
    if isinstance(h, list):
        if len(h) != n:
            raise ConfigError(f"history needs {n} values")
        return sim.ConstantHistory(tuple(float(v) for v in h))
    if isinstance(h, dict) and set(h) == {"times", "values"}:
        return sim.SampledHistory(tuple(h["times"]), tuple(tuple(v) for v in h["values"]))
    raise ConfigError("history must be a list of constants or {times, values}")


GNUPLOT = """# time series and phase portrait
set datafile separator ','
set key autotitle columnhead
set multiplot layout 1,2 title '{title}'
set xlabel 't'
plot '{csv}' using 1:2 with lines, '' using 1:3 with lines{third}
set xlabel 'r'
set ylabel 'j'
plot '{csv}' using 2:3 with lines notitle
unset multiplot
"""


def cmd_simulate(cfg: RunConfig) -> tuple[int, dict, sim.Trajectory]:
    sys_ = cfg.system()
    tau = cfg.tau if cfg.tau is not None else 0.0
    if tau < 0:
        raise ConfigError("tau must be nonnegative")
    traj = sim.integrate(sys_, tau, _history(cfg, sys_.matrix.dimension), cfg.horizon, cfg.step)
    est = sim.growth_estimate(traj)
    report = {"command": "simulate", "system": _system_dict(cfg), "tau": tau, "h": traj.h,
              "horizon": float(traj.times[-1]) if len(traj.times) else 0.0, "steps": len(traj.times) - 1,
              "diverged": traj.diverged, "growth_rate": est.rate, "growth_confident": est.confident,
              "envelope_peaks": est.peaks, "dominant_period": sim.dominant_period(traj)}
    return EXIT_OK, report, traj


def cmd_scan(cfg: RunConfig) -> tuple[int, dict, object]:
    placement = DelayPlacement.parse(cfg.placement, cfg.a13)
    raw = dict(cfg.scan or {})
    allowed = {"box", "ranges", "mode", "samples", "requests", "verify_fraction", "verify_witnesses",
               "max_witnesses", "budget", "time_budget", "workers"}
    if set(raw) - allowed:
        raise ConfigError(f"unknown scan keys: {', '.join(sorted(set(raw) - allowed))}")
    dim = placement.kind.dimension
    ncoef = 4 if dim == 2 else 7
    if "ranges" in raw:
        ranges = tuple((float(a), float(b), int(n)) for a, b, n in raw.pop("ranges"))
        raw.pop("box", None)
    else:
        lo, hi, n = raw.pop("box", [-9.0, 9.0, 19])
        ranges = ((float(lo), float(hi), int(n)),) * ncoef
    if len(ranges) != ncoef:
        raise ConfigError(f"scan needs {ncoef} ranges")
    reqs = tuple(WitnessRequest.parse(r) for r in raw.pop("requests", []))
    spec = ScanSpec(ranges=ranges, requests=reqs, **raw)
    result = run_scan(spec, placement, cfg.seed)
    report = {"command": "scan", "placement": placement.name, "seed": cfg.seed,
              "spec": {"ranges": [list(r) for r in ranges], "mode": spec.mode, "samples": spec.samples},
              "result": result.to_dict()}
    code = EXIT_DISAGREE if result.disagreements() else EXIT_OK
    return code, report, result


def cmd_triad(cfg: RunConfig) -> tuple[int, dict]:
    sys_ = cfg.system()
    if sys_.matrix.dimension != 3:
        raise ConfigError("triad needs 7 coefficients a11,a12,a21,a22,a23,a32,a33")
    m = sys_.matrix
    kind = sys_.placement.kind
    tau_max = cfg.tau_max if cfg.tau_max is not None else 1.0
    out: dict = {"command": "triad", "system": _system_dict(cfg)}
    notes: list[str] = []
    if kind is Placement.TRIAD_J_IN and m.a11 == m.a33:
        a = m.a11
        reduced = [m.a22, 1.0, m.a12 * m.a21 + m.a23 * m.a32, a]
        red_sys = build_system(InteractionMatrix(*reduced), Placement.CROSS)
        report = analytic_report(red_sys, tau_max)
        notes.append(f"lam = {a:g} is a root for every delay" + ("; the triad is never asymptotically stable"
                                                                 if a >= 0 else ""))
        out["reduction"] = {"matrix": reduced, "placement": "cross", "extra_root": a,
                            "classification": classify_theorem_case(red_sys).regime.value}
        if a >= 0:
            out["never_stable"] = True
    else:
        report = _oracle_report(cfg, sys_, tau_max)
        if kind is Placement.TRIAD_J_OWN and (m.a32, m.a33, m.a23) == (m.a12, m.a11, m.a21):
            equiv = [m.a22, 2.0 * m.a21, m.a12, m.a11]
            out["planar_equivalent"] = {"matrix": equiv, "placement": "own"}
            notes.append("symmetric triad: W = (lam - a11) times the own-delay planar quasi-polynomial of "
                         f"{equiv}")
    notes += _claim_notes(cfg, report, None)
    report = replace(report, notes=tuple(list(report.notes) + notes))
    out["report"] = report.to_dict()
    return EXIT_OK, out


# --------------------------------------------------------------------------
# argument handling


def _fix_negative_values(argv: list[str]) -> list[str]:
    # "--matrix -4,1,-2,-2" would otherwise be read as an unknown option
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in ("--matrix", "--tau", "--tau-max") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delayswitch", description="stability switches of delayed linear systems")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("analyze", "switches", "simulate", "scan", "triad"):
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path)
        s.add_argument("--matrix", help="a11,a12,a21,a22[,a23,a32,a33]")
        s.add_argument("--placement")
        s.add_argument("--tau", type=float)
        s.add_argument("--tau-max", type=float, dest="tau_max")
        s.add_argument("--out")
        s.add_argument("--seed", type=int)
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if args.command == "triad" and "placement" not in raw and args.placement is None:
        raw["placement"] = "triad_j_own"
    if args.matrix is not None:
        try:
            raw["matrix"] = [float(v) for v in args.matrix.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --matrix: {exc}") from exc
    for key in ("placement", "tau", "tau_max", "out", "seed"):
        v = getattr(args, key)
        if v is not None:
            raw[key] = v
    try:
        cfg = RunConfig.from_mapping(raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if args.command != "scan":
        cfg.system()
    else:
        DelayPlacement.parse(cfg.placement, cfg.a13)
    return cfg


def run(argv: list[str] | None = None) -> int:
    argv = _fix_negative_values(list(sys.argv[1:] if argv is None else argv))
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    try:
        if args.command == "analyze":
            code, report = cmd_analyze(cfg)
            _write(out, "report.json", _dump(report))
            print(_dump(report), end="")
        elif args.command == "switches":
            code, report = cmd_switches(cfg)
            _write(out, "report.json", _dump(report))
            _write_switch_csv(out, SwitchReport.from_dict(report["report"]))
            print(_table(SwitchReport.from_dict(report["report"])))
        elif args.command == "simulate":
            code, report, traj = cmd_simulate(cfg)
            out.mkdir(parents=True, exist_ok=True)
            sim.export_trajectory(traj, out / "trajectory.csv")
            if cfg.plot:
                third = ", '' using 1:4 with lines" if traj.dimension == 3 else ""
                title = f"tau = {report['tau']:g}"
                _write(out, "plot.gp", GNUPLOT.format(csv="trajectory.csv", third=third, title=title))
            _write(out, "report.json", _dump(report))
            print(f"growth rate {report['growth_rate']:.6g}  diverged={report['diverged']}")
        elif args.command == "scan":
            code, report, result = cmd_scan(cfg)
            _write(out, "report.json", _dump(report))
            _write_scan_csv(out, result)
            print(_dump(report["result"]["histogram"]), end="")
            if code == EXIT_DISAGREE:
                print("verification disagreement on scanned points", file=sys.stderr)
        else:
            code, report = cmd_triad(cfg)
            _write(out, "report.json", _dump(report))
            _write_switch_csv(out, SwitchReport.from_dict(report["report"]))
            print(_table(SwitchReport.from_dict(report["report"])))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonGenericError as exc:
        print(f"non-generic input: {exc}", file=sys.stderr)
        return EXIT_NONGENERIC
    if code == EXIT_NONGENERIC:
        print("non-generic input", file=sys.stderr)
    return code


def _write_scan_csv(out: Path, result) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with (out / "scan.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not result.points:
            w.writerow(["switch_count"])
            return
        ncoef = len(result.points[0].coords)
        names = ["a11", "a12", "a21", "a22", "a23", "a32", "a33"][:ncoef]
        w.writerow(names + ["switch_count"])
        for p in result.points:
            w.writerow([repr(c) for c in p.coords] + [p.count])


def main() -> None:
    sys.exit(run())
