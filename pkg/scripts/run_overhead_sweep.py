#!/usr/bin/env python3
"""Sweep beacon-interval length against beamforming cadence under high motion.

Covers both BI lengths crossed with both DTI beamforming periods, plus the
A-BFT variant at each BI, writing two CSVs.

Usage: python3 scripts/run_overhead_sweep.py [out_dir] [extra xrsim sweep flags]
"""

import sys

from xrsim.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    out = "results"
    if args and not args[0].startswith("--"):
        out, args = args[0], args[1:]
    rc = main(
        ["sweep", "--vary", "bi_duration=0.1024,1.024", "--vary", "bf_interval=0.1,1.0",
         "--label", "overhead_dti", "--out-dir", out] + args
    )
    if rc == 0:
        rc = main(
            ["sweep", "--set", "bf_location = abft", "--vary", "bi_duration=0.1024,1.024",
             "--label", "overhead_abft", "--out-dir", out] + args
        )
    sys.exit(rc)
