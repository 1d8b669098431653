"""Drop a ball into a shear-thickening and a shear-thinning pool and compare the response.

Prints sphere speed and the median of the per-step maximum viscosity in the
25 ms before and after first contact.
"""
import warnings

import numpy as np

from nnsph.scene import build_world, load_scene


def trace(name, duration=0.3):
    w = build_world(load_scene(name))
    ball = w.spheres[0]
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while w.time < duration:
            r = w.step()
            rows.append((r["time"], r["max_mu"], ball.in_contact, np.linalg.norm(ball.velocity)))
    t, mu, contact, speed = (np.array(c) for c in zip(*rows))
    k = int(np.argmax(contact))
    tc = t[k]
    before = np.median(mu[(t >= tc - 0.025) & (t < tc)])
    after = np.median(mu[(t >= tc) & (t < tc + 0.025)])
    later = speed[np.searchsorted(t, tc + 0.1)]
    print(f"{name:14s} contact at {tc:.3f} s  speed {speed[k]:.3f} -> {later:.3f} m/s  "
          f"max mu {before:.3g} -> {after:.3g}")


if __name__ == "__main__":
    for scene in ("golf", "ketchup_golf"):
        trace(scene)
