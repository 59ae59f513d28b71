"""Quantum Volume scan on a simulated backend, with and without noise.

For each two-qubit depolarizing rate, runs widths 2..max and reports the
mean heavy-output probability, its 2-sigma lower bound and the largest
passing width.

    python scripts/qv_scan.py [--max-width 5] [--p2 0 0.02 0.05 0.5] [--seed 0]
"""

from __future__ import annotations

import argparse

from clopsbench.backend import LocalBackend
from clopsbench.cli import render_table
from clopsbench.qv import qv_scan
from clopsbench.simulator import NoiseModel


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-width", type=int, default=5)
    ap.add_argument("--p2", type=float, nargs="*", default=[0.0, 0.02, 0.05, 0.5])
    ap.add_argument("--circuits", type=int, default=100)
    ap.add_argument("--shots", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    for p2 in args.p2:
        noise = NoiseModel(p2 / 10, p2) if p2 else None
        with LocalBackend(args.max_width, noise=noise) as backend:
            best, results = qv_scan(
                backend, args.max_width, num_circuits=args.circuits, shots=args.shots, seed=args.seed
            )
        for r in results:
            rows.append((p2, r.width, f"{r.ideal_heavy_mass:.4f}", f"{r.mean_hop:.4f}", f"{r.lower_bound:.4f}", r.passed))
        print(f"p2={p2}: largest passing width {best}, QV {None if best is None else 2**best}", flush=True)
    print()
    print(render_table(("p2", "Width", "Ideal heavy mass", "Mean HOP", "Lower bound", "Passed"), rows))


if __name__ == "__main__":
    main()
