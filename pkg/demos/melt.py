"""Heat a block from a box source and watch the viscosity drop as it melts."""
import numpy as np

from nnsph.scene import build_world, load_scene


def main(frames=30):
    cfg = load_scene("cut_and_melt")
    w = build_world(cfg)
    print("frame  mean T   max T    mean mu  height")
    for _ in range(frames):
        w.advance_frame(cfg.output.frame_interval)
        if w.frame % 5 == 0:
            print(f"{w.frame:5d} {w.T.mean():7.4f} {w.T.max():7.4f} {w.mu.mean():9.2f} {w.x[:, 1].max():7.3f}")


if __name__ == "__main__":
    main()
