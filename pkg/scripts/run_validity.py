#!/usr/bin/env python3
"""Validity battery: no random field drives the empirical constant up as h -> 0.

Runs the 20-seed random-field battery on the spherical and the
negative-curvature patch and checks the per-h maximum ratio has a fitted
slope >= -0.2.  Artifacts land under runs/validity-<surface>.
"""

import sys

from shellrig.cli import main

if __name__ == "__main__":
    status = 0
    for surface in ("sphere", "pseudosphere"):
        status |= main(
            [
                "sweep",
                "--surface", surface,
                "--field", "random",
                "--seeds", "20",
                "--h-min", "1e-3",
                "--h-max", "1e-1",
                "--num-h", "9",
                "--nt", "6",
                "--ntheta", "48",
                "--nz", "48",
                "--out", f"runs/validity-{surface}",
                "--force",
            ]
        )
    sys.exit(status)
