"""Trajectories just below, at and just above the single switch of [-4,1,-2,-2].

Writes one CSV plus a gnuplot script per delay into --out and prints the
growth rate of each run.
"""
import argparse
from pathlib import Path

from delayswitch.cli import GNUPLOT
from delayswitch.model import InteractionMatrix, build_system
from delayswitch.sim import dominant_period, export_trajectory, growth_estimate, integrate
from delayswitch.switches import enumerate_switches


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/unique_switch"))
    ap.add_argument("--horizon", type=float, default=40.0)
    args = ap.parse_args()

    sys = build_system(InteractionMatrix(-4, 1, -2, -2), "own")
    tau_star = enumerate_switches(sys, 1.0).switch_taus[0]
    print(f"switch at tau = {tau_star:.7f}")
    for label, tau in (("stable", 0.35), ("critical", tau_star), ("unstable", 0.4)):
        tr = integrate(sys, tau, horizon=args.horizon)
        est = growth_estimate(tr)
        d = args.out / label
        d.mkdir(parents=True, exist_ok=True)
        export_trajectory(tr, d / "trajectory.csv")
        (d / "plot.gp").write_text(GNUPLOT.format(csv="trajectory.csv", third="", title=f"tau = {tau:.4f}"))
        print(f"{label:9s} tau={tau:.5f}  rate={est.rate:+.4f}  period={dominant_period(tr):.4f}  -> {d}")


if __name__ == "__main__":
    main()
