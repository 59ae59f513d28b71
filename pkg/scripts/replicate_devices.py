"""Run the full CLOPS procedure on every bundled device config and tabulate.

Prints the results table (including the depth-1 rate) and the per-category
time breakdown. All devices run on the virtual clock, so the totals come
from the latency model and the run is deterministic for a given seed.

    python scripts/replicate_devices.py [--seed 0] [--out-dir results/]
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from clopsbench.backend import load_backend
from clopsbench.cli import BREAKDOWN_COLUMNS, REPORT_COLUMNS, breakdown_row, render_table, report_row
from clopsbench.clops import ClopsConfig, run_clops

DEVICES = ("bogota", "toronto", "brooklyn")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--devices", nargs="*", default=list(DEVICES))
    ap.add_argument("--out-dir", type=Path, help="write one report JSON per device here")
    args = ap.parse_args()

    reports = []
    for name in args.devices:
        start = time.perf_counter()
        with load_backend(name) as backend:
            report = run_clops(backend, ClopsConfig(master_seed=args.seed))
        print(f"{name}: {time.perf_counter() - start:.1f} s wall", flush=True)
        reports.append(report)
        if args.out_dir:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            (args.out_dir / f"{name}.json").write_text(report.dumps() + "\n")

    print()
    print(render_table(REPORT_COLUMNS, [report_row(r) for r in reports]))
    print()
    print(render_table(BREAKDOWN_COLUMNS, [breakdown_row(r) for r in reports]))
    print()
    for r in reports:
        print(f"{r.backend['name']}: mean template depth {r.avg_template_depth:.2f}, mean HOP {r.mean_hop:.3f}")


if __name__ == "__main__":
    main()
