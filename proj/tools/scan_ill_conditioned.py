#!/usr/bin/env python3
"""Scan ill-conditioned simulator instances for backward-elimination failures.

This is how the ill-conditioned seed set in tests/acceptance.cpp was
checked: C=9, L=2, K=1, N2 capped at 4 (so N2 <= C/2), M in {2, 3}, and a
fail meaning exhaustive minus method above 10 dB. The acceptance run uses
the first 40 runs of seed base 7.

    tools/scan_ill_conditioned.py --gevsel build/tools/gevsel --runs 40 --seed 7 --with-gs
"""

import argparse
import csv
import json
import subprocess
import sys
import tempfile
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--gevsel", default="build/tools/gevsel", help="path to the gevsel binary")
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threshold", type=float, default=10.0)
    ap.add_argument("--with-gs", action="store_true", help="also run gs (slow: seconds per cell)")
    args = ap.parse_args()

    methods = ["exhaustive", "be"] + (["gs"] if args.with_gs else [])
    config = {"schema_version": 1, "C": 9, "L": 2, "K": 1, "M": [2, 3], "runs": args.runs, "seed": args.seed,
              "methods": methods, "fail_threshold_db": args.threshold, "scene": {"n2_max": 4}}
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "config.json"
        cfg.write_text(json.dumps(config))
        subprocess.run([args.gevsel, "bench", "--config", str(cfg), "--out", tmp], check=True)
        records = list(csv.DictReader(open(Path(tmp) / "records.csv")))

    grq = {(r["run"], r["M"], r["method"]): float(r["grq_db"]) for r in records if r["grq_db"]}
    for method in methods[1:]:
        cells = [(run, m) for (run, m, meth) in grq if meth == method and (run, m, "exhaustive") in grq]
        fails = [c for c in cells if grq[c + ("exhaustive",)] - grq[c + (method,)] > args.threshold]
        rate = len(fails) / len(cells) if cells else float("nan")
        print(f"{method}: {len(fails)}/{len(cells)} cells fail ({rate:.4f})")
        for run, m in sorted(fails, key=lambda c: (int(c[0]), int(c[1])))[:20]:
            gap = grq[(run, m, "exhaustive")] - grq[(run, m, method)]
            print(f"  run {run} M={m}: {gap:.2f} dB below exhaustive")
    return 0


if __name__ == "__main__":
    sys.exit(main())
