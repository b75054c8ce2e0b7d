#!/usr/bin/env python3
"""Sweep the ridge term over a manifest with the foal CLI and print a table."""

import argparse
import json
import subprocess
import sys
import tempfile
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--foal", default="foal", help="path to the foal executable")
    ap.add_argument("--manifest", required=True)
    ap.add_argument("--gammas", default="100000,10000,1000,100,10,1,0.1,0.01,0.001")
    args, run_args = ap.parse_known_args()  # the rest goes to `foal run`

    print("gamma\ta_avg\ta_last\tf_final")
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "results.json"
        for g in args.gammas.split(","):
            cmd = [args.foal, "run", "--manifest", args.manifest, "--output", str(out), "--gamma", g]
            proc = subprocess.run(cmd + run_args, capture_output=True, text=True)
            if proc.returncode != 0:
                sys.stderr.write(proc.stderr)
                return proc.returncode
            doc = json.loads(out.read_text())
            print(f"{g}\t{doc['a_avg']:.4f}\t{doc['a_last']:.4f}\t{doc.get('f_final', float('nan')):.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
