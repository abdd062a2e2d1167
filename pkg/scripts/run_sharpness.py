#!/usr/bin/env python3
"""Headline sharpness experiment: the bending-type field keeps the ratio flat.

Sweeps h over two decades on the unit sphere with eps = h, for both the
nonlinear interpolation ratio and its linearized (strain) form, and prints
the fitted log-log slopes.  Writes CSV/JSON artifacts under runs/sharpness.
"""

import sys

from shellrig.cli import main

if __name__ == "__main__":
    status = main(
        [
            "sweep",
            "--surface", "sphere",
            "--field", "ansatz",
            "--p", "2",
            "--h-min", "1e-3",
            "--h-max", "1e-1",
            "--num-h", "9",
            "--out", "runs/sharpness",
            "--force",
        ]
    )
    status |= main(
        [
            "korn-sweep",
            "--surface", "sphere",
            "--field", "ansatz",
            "--p", "2",
            "--h-min", "1e-3",
            "--h-max", "1e-1",
            "--num-h", "9",
            "--out", "runs/sharpness-korn",
            "--force",
        ]
    )
    sys.exit(status)
