"""Run the dam-break scene to disk and report density error per frame.

Usage: python demos/dam_break.py [OUT_DIR]
"""
import sys

import numpy as np

from nnsph.cli import simulate
from nnsph.frames import read_diagnostics
from nnsph.scene import load_scene


def main(out="output/dam_break_demo", frames=30):
    cfg = load_scene("dam_break")
    simulate(cfg, frames, out)
    diag = read_diagnostics(f"{out}/diagnostics.csv")
    for f in range(1, frames + 1, 5):
        sel = diag["frame"] == f
        print(f"frame {f:3d}  steps {int(sel.sum()):2d}  mean density error {100 * diag['density_err'][sel].mean():.4f}%")
    print(f"frames written to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
