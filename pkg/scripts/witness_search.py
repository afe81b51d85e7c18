"""Sobol scan of the own-delay coefficient box for matrices with many switches.

Prints the switch-count histogram and the first few oracle-verified
witnesses for each requested count.
"""
import argparse
import json

from delayswitch.model import DelayPlacement
from delayswitch.scan import ScanSpec, WitnessRequest, run_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=1 << 14)
    ap.add_argument("--box", type=float, nargs=2, default=(-9.0, 9.0))
    ap.add_argument("--at-least", type=int, nargs="+", default=[5])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = ScanSpec(
        ranges=((args.box[0], args.box[1], 1),) * 4,
        mode="sobol",
        samples=args.samples,
        requests=tuple(WitnessRequest(n, at_least=True) for n in args.at_least),
    )
    result = run_scan(spec, DelayPlacement.parse("own"), seed=args.seed)
    print("histogram:", json.dumps(result.histogram))
    for label, found in result.witnesses.items():
        print(f"{label}: {len(found)} witnesses")
        for v in result.verified:
            if v["reason"] == "witness " + label:
                print(f"  {[round(c, 4) for c in v['coords']]} switches={v['switches']} oracle ok={v['ok']}")
    bad = result.disagreements()
    print("verification disagreements:", len(bad))
    raise SystemExit(4 if bad else 0)


if __name__ == "__main__":
    main()
