#!/usr/bin/env python3
"""Localization audit: per-patch constants across an h-sweep.

Traces the partition argument (local rotations, Poincare step, rotation
lower bound) at gamma = 1/2 on the sphere for several h, on both the
constant shell and the bump-thickness profile, and prints the aggregate
constants whose h-uniformity backs the estimate.
"""

import sys

from shellrig.cli import main

if __name__ == "__main__":
    status = 0
    for h in ("1e-1", "3e-2", "1e-2", "3e-3"):
        for profile in ("shell", "bump"):
            status |= main(
                [
                    "trace",
                    "--surface", "sphere",
                    "--profile", profile,
                    "--h", h,
                    "--gamma", "0.5",
                    "--field", "random:1",
                    "--amplitude", "1e-3",
                    "--out", f"runs/trace-{profile}-{h}",
                    "--force",
                ]
            )
    sys.exit(status)
