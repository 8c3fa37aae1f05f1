#!/usr/bin/env python3
"""Run the rate-vs-mode matrix (12 cells, 20 s each) and write one CSV.

Usage: python3 scripts/run_rate_sweep.py [out_dir] [extra xrsim sweep flags]
"""

import sys

from xrsim.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    out = "results"
    if args and not args[0].startswith("--"):
        out, args = args[0], args[1:]
    sys.exit(
        main(
            ["sweep", "--preset", "paper-fig4", "--label", "rate_sweep",
             "--out-dir", out] + args
        )
    )
