"""Switches of the seven-coefficient triad with the delay on the middle self term.

Compares the oracle bisection on the cubic quasi-polynomial with the
closed-form walk on the planar system it factors into (a11 = a33), then
checks simulated growth signs between consecutive switches.
"""
import argparse

from delayswitch.charpoly import quasi_polynomial
from delayswitch.model import InteractionMatrix, build_system
from delayswitch.oracle import oracle_switches, unstable_count
from delayswitch.sim import growth_rate, integrate
from delayswitch.switches import enumerate_switches

TRIAD = (-28, -74, 76, -35, 76, -42, -28)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau-max", type=float, default=1.0)
    args = ap.parse_args()

    a11, a12, a21, a22, a23, a32, a33 = TRIAD
    sys = build_system(InteractionMatrix(*TRIAD), "triad_j_own")
    w = quasi_polynomial(sys)
    oracle = oracle_switches(w, args.tau_max)
    print(f"oracle: {len(oracle.switches)} switches in [0, {args.tau_max:g}]:",
          [round(t, 6) for t in oracle.switch_taus])

    # with a11 = a33 the triad determinant is (lam - a11) times a planar one
    planar = build_system(InteractionMatrix(a22, 1.0, a12 * a21 + a23 * a32, a11), "own")
    walk = enumerate_switches(planar, args.tau_max)
    print(f"planar reduction {list(planar.matrix.coefficients)}: {walk.total_switches} switches,",
          [round(t, 6) for t in walk.switch_taus])

    edges = [0.0] + oracle.switch_taus + [args.tau_max]
    for lo, hi in zip(edges, edges[1:]):
        tau = 0.5 * (lo + hi)
        v = unstable_count(w, tau)
        rate = growth_rate(integrate(sys, tau, horizon=10.0))
        print(f"tau={tau:.5f}: oracle {v.verdict.value:8s} sim rate {rate:+9.3f}")


if __name__ == "__main__":
    main()
