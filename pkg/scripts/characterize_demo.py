#!/usr/bin/env python3
"""Circuit characterization walk-through on a multimode network.

Prints the drive-independent pole table, then the antiresonance table seen
from every drive port, and finally singles out the lossiest component by
the mean antiresonance half-width.  Point it at a network JSON file to run
the same analysis on your own circuit.

    python3 scripts/characterize_demo.py
    python3 scripts/characterize_demo.py --network my_circuit.json
"""

import argparse

from antires.network import load_network
from antires.presets import five_node_demo
from antires.spectra import AmbiguityError, antiresonances, lossy_component_identify, resonances


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--network", default=None, help="network JSON file (default: demo ring)")
    ap.add_argument("--lossy", default="n3", help="demo only: which node is lossy")
    args = ap.parse_args()

    net = load_network(args.network) if args.network else five_node_demo(lossy=args.lossy)

    print(f"network: {len(net)} modes {list(net.labels)}")
    print("\npoles (identical from every drive port):")
    for p in resonances(net):
        print(f"  {p.center:+9.3f} MHz   half-width {p.half_width:6.3f} MHz")

    for lab in net.labels:
        zeros = antiresonances(net, lab)
        widths = ", ".join(f"{z.half_width:.3f}" for z in zeros)
        centers = ", ".join(f"{z.center:+.2f}" for z in zeros)
        print(f"\ndrive {lab}: zeros at [{centers}] MHz, half-widths [{widths}] MHz")

    print("\nmean antiresonance half-width per drive port:")
    try:
        verdict = lossy_component_identify(net)
    except AmbiguityError as exc:
        for lab, w in sorted(exc.widths.items(), key=lambda kv: kv[1]):
            print(f"  {lab:>6}: {w:7.4f} MHz")
        print(f"no unique answer; tied candidates: {exc.candidates}")
        return
    for lab, w in sorted(verdict.mean_widths.items(), key=lambda kv: kv[1]):
        tag = "  <-- lossiest (all other decays excluded here)" if lab == verdict.label else ""
        print(f"  {lab:>6}: {w:7.4f} MHz{tag}")


if __name__ == "__main__":
    main()
