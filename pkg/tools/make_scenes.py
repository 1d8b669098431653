"""Regenerate the shipped scene corpus in src/nnsph/scenes.

Run from the repository root: ``python3 tools/make_scenes.py``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "nnsph" / "scenes"
SCHEMA = "nnsph.scene/1"


def box(lo, hi):
    return {"kind": "box", "min": list(lo), "max": list(hi)}


def sphere(c, r):
    return {"kind": "sphere", "center": list(c), "radius": r}


def container(lo, hi, name="tank"):
    return {"name": name, "kind": "container", "min": list(lo), "max": list(hi), "open_top": True}


def scene(name, description, spacing, materials, bodies, boundaries=(), spheres=(), frames=60, notes="",
          **solver):
    return {
        "schema": SCHEMA, "name": name, "description": description, "notes": notes, "seed": 0,
        "solver": {"spacing": spacing, **solver},
        "materials": materials, "bodies": list(bodies), "boundaries": list(boundaries),
        "rigid_spheres": list(spheres),
        "output": {"frame_interval": 1.0 / 60.0, "frames": frames, "directory": f"output/{name}",
                   "formats": ["binary"]},
    }


def golf(name, fluid, description):
    s = 0.015
    half = 0.225
    radius = 0.045
    return scene(
        name, description, s,
        {"fluid": {"viscosity": fluid}},
        [{"name": "pool", "material": "fluid", "shape": box((-half, 0.0, -half), (half, 0.15, half))}],
        [container((-half, 0.0, -half), (half, 0.3, half))],
        [{"name": "ball", "center": [0.0, 0.35, 0.0], "radius": radius,
          "mass": 1150.0 * 4.0 / 3.0 * math.pi * radius**3, "velocity": [0.0, -1.5, 0.0], "mode": "dynamic"}],
        frames=30,
    )


ARMADILLO_MODELS = {
    "newtonian": {"model": "newtonian", "mu0": 10.0},
    "power_law_1": {"model": "power_law", "n": 0.667, "m": 4.5, "mu_inf": 0.1, "mu0": 10.0},
    "power_law_2": {"model": "power_law", "n": 1.5, "m": 1.0, "mu_inf": 0.1, "mu0": 10.0},
    "cross": {"model": "cross", "n": 0.667, "m": 1.0, "mu_inf": 0.1, "mu0": 10.0},
    "casson": {"model": "casson", "mu_c": 1.0, "tau0": 10.0, "mu_inf": 0.1, "mu0": 10.0},
    "carreau": {"model": "carreau", "n": 0.1, "m": 0.2, "mu_inf": 0.1, "mu0": 10.0},
    "bingham": {"model": "bingham", "rate_c": 1.0, "mu_inf": 0.1, "mu0": 10.0},
    "herschel_bulkley": {"model": "herschel_bulkley", "n": 0.667, "m": 10.0, "rate_c": 10.0, "mu_inf": 0.1,
                         "mu0": 10.0},
}


def armadillo_ramp():
    s = 0.015
    tilt = 20.0
    a = math.radians(tilt)
    ramp_center_y = 0.22
    bodies = []
    # ramp lanes, left to right
    order = ["carreau", "casson", "cross", "power_law_2", "power_law_1", "newtonian", "herschel_bulkley", "bingham"]
    for k, mat in enumerate(order):
        z = -0.63 + 0.18 * k
        x = 0.25
        xr = x / math.cos(a)
        surface = ramp_center_y + xr * math.sin(a) + 0.02 * math.cos(a)
        cy = round(surface + 0.05 + 0.02, 4)
        bodies.append({"name": f"armadillo_{mat}", "material": mat, "shape": {
            "kind": "union", "parts": [sphere((x, cy, z), 0.05), sphere((x - 0.01, cy + 0.07, z), 0.035)]}})
    return scene(
        "armadillo_ramp",
        "Eight viscous bodies, one per constitutive model, slide down a tilted ramp side by side.",
        s, {k: {"viscosity": v} for k, v in ARMADILLO_MODELS.items()}, bodies,
        [{"name": "ramp", "kind": "slab", "min": [-0.5, 0.2, -0.72], "max": [0.5, 0.24, 0.72],
          "rotation_deg": tilt},
         container((-0.8, 0.0, -0.8), (0.8, 0.6, 0.8), "floor")],
        notes="Armadillo meshes are replaced by two-sphere proxies (torso and head).",
        frames=60,
    )


def ice_cream():
    s = 0.012
    return scene(
        "ice_cream", "A scoop heated at its surface softens and slumps over a pedestal.", s,
        {"ice_cream": {"thermal": {"diffusivity": 30.0, "source": 1.0, "decay": 0.1, "mu0": 1000.0,
                                   "region": {"kind": "surface"}}}},
        [{"name": "scoop", "material": "ice_cream", "shape": sphere((0.0, 0.11, 0.0), 0.06)}],
        [{"name": "pedestal", "kind": "slab", "min": [-0.04, 0.0, -0.04], "max": [0.04, 0.05, 0.04]},
         container((-0.3, 0.0, -0.3), (0.3, 0.3, 0.3), "floor")],
        frames=60,
    )


def cut_and_melt():
    s = 0.012
    bunny = {"kind": "union", "parts": [
        sphere((0.0, 0.09, 0.0), 0.08),
        sphere((0.08, 0.17, 0.0), 0.05),
        {"kind": "cylinder", "center": [0.07, 0.25, 0.025], "radius": 0.015, "height": 0.08},
        {"kind": "cylinder", "center": [0.07, 0.25, -0.025], "radius": 0.015, "height": 0.08},
    ]}
    return scene(
        "cut_and_melt", "A board cuts a bunny in two while a heat source under the floor melts it.", s,
        {"bunny": {"thermal": {"diffusivity": 1000.0, "source": 1.0, "decay": 0.1, "mu0": 20.0,
                               "region": {"kind": "box", "min": [-1.0, 0.0, -1.0], "max": [1.0, 0.05, 1.0]}}}},
        [{"name": "bunny", "material": "bunny", "shape": bunny}],
        [{"name": "board", "kind": "slab", "min": [0.02, 0.32, -0.2], "max": [0.05, 0.62, 0.2],
          "motion": {"velocity": [0.0, -1.0, 0.0], "start": 0.0, "end": 0.3}},
         container((-0.3, 0.0, -0.3), (0.3, 0.4, 0.3), "floor")],
        notes="Diffusivity 1000; 100 gives a slower melt. "
              "The heat box spans y in [0, 0.05] so it covers the floor layer.",
        frames=60,
    )


def tomato(name, material, description, notes=""):
    s = 0.01
    return scene(
        name, description, s, {"tomato": material},
        [{"name": "tomato", "material": "tomato", "shape": sphere((0.0, 0.06, 0.0), 0.04),
          "velocity": [0.0, -2.0, 0.0]}],
        [container((-0.2, 0.0, -0.2), (0.2, 0.2, 0.2), "floor")],
        notes=notes, frames=30,
    )


def tomatoes():
    out = []
    thin = {"model": "newtonian", "mu0": 0.01}
    for tag, g1 in (("g0.001", 0.001), ("g0.05", 0.05), ("g0.1", 0.1), ("ginf", "inf")):
        out.append(tomato(
            f"tomato_elastic_{tag}",
            {"viscosity": thin, "elastic": {"E": 1e7, "poisson": 0.42, "gamma1": g1, "gamma2": 1.0}},
            f"Elastoplastic tomato dropped on the floor, elastic limit {g1}.",
            notes="A light Newtonian viscosity (0.01) damps the elastic body."))
    out.append(tomato("tomato_newtonian", {"viscosity": thin}, "Newtonian tomato dropped on the floor."))
    hb = [
        ("tomato_nn1", {"m": 1.0, "n": 0.667, "mu0": 0.1, "rate_c": 1e-5, "mu_inf": 0.001}),
        ("tomato_nn2", {"m": 20.0, "n": 1.1, "mu0": 10.0, "rate_c": 1e-3, "mu_inf": 0.01}),
        ("tomato_nn3", {"m": 50.0, "n": 1.1, "mu0": 100.0, "rate_c": 100.0, "mu_inf": 1.0}),
    ]
    for name, p in hb:
        out.append(tomato(name, {"viscosity": {"model": "herschel_bulkley", **p}},
                          "Herschel-Bulkley tomato dropped on the floor.",
                          notes="mu_inf is 0.001, 0.01 and 1 for the three variants."))
    return out


def honey():
    s = 0.01
    # 20 x 53 x 13 lattice = 13,780 particles
    return scene(
        "honey", "A tall column of honey slumps under gravity.", s,
        {"honey": {"viscosity": {"model": "newtonian", "mu0": 5.0}}},
        [{"name": "column", "material": "honey", "shape": box((-0.1, 0.0, -0.065), (0.1, 0.53, 0.065))}],
        [container((-0.4, 0.0, -0.4), (0.4, 0.6, 0.4), "floor")],
        frames=60,
    )


def cow_parts(s):
    """Axis-aligned boxes on one lattice whose counts sum to exactly 276,625."""
    lift = 30  # start 0.3 m above the ground

    def b(ix, iy, iz, nx, ny, nz):
        iy += lift
        return box((ix * s, iy * s, iz * s), ((ix + nx) * s, (iy + ny) * s, (iz + nz) * s)), nx * ny * nz

    target = 276_625
    parts = [b(0, 40, 0, 85, 45, 50)]                                    # torso
    parts += [b(x, 0, z, 15, 40, 15) for x in (2, 68) for z in (2, 33)]  # legs
    parts.append(b(85, 65, 10, 30, 28, 30))                              # head
    base = sum(n for _, n in parts)
    # rump sized so the neck (20 x 20 cross-section) absorbs all but a short tail
    best = None
    for ry in range(8, 16):
        for rz in range(8, 16):
            for rx in range(8, 16):
                rest = target - base - rx * ry * rz
                tail = rest % 400
                if best is None or tail < best[0]:
                    best = (tail, rx, ry, rz, rest // 400)
    tail, rx, ry, rz, neck = best
    parts.append(b(-rx, 70, 20, rx, ry, rz))                             # rump
    parts.append(b(-rx - neck, 55, 15, neck, 20, 20))                    # hindquarters
    if tail:
        parts.append(b(-rx - neck - tail, 80, 25, tail, 1, 1))           # tail
    assert sum(n for _, n in parts) == target
    return [p for p, _ in parts]


def cow():
    s = 0.01
    return scene(
        "cow", "A visco-elastoplastic toy cow falls onto the ground (performance scene, 276,625 particles).", s,
        {"cow": {"viscosity": {"model": "herschel_bulkley", "m": 1.0, "n": 0.9, "mu0": 80.0, "rate_c": 5e-4},
                 "elastic": {"E": 1e5, "poisson": 0.3, "gamma1": 0.001, "gamma2": 1.0}}},
        [{"name": "cow", "material": "cow", "shape": {"kind": "union", "parts": cow_parts(s)}}],
        [container((-1.0, 0.0, -0.6), (2.0, 2.0, 1.2), "floor")],
        notes="Mesh replaced by a box composite. Young's modulus, Poisson ratio and plastic limit are not "
              "given for this scene and are chosen here.",
        frames=60,
    )


def dam_break():
    s = 0.02
    return scene(
        "dam_break", "Water column collapse used as the pressure-solver regression scene.", s,
        {"water": {"viscosity": {"model": "newtonian", "mu0": 0.001}}},
        [{"name": "column", "material": "water", "shape": box((0.0, 0.0, 0.0), (0.3, 0.4, 0.2))}],
        [container((0.0, 0.0, 0.0), (0.8, 0.6, 0.2))],
        frames=60,
    )


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    docs = [golf("golf", {"model": "power_law", "n": 1.1, "m": 20.0},
                 "A golf ball drops into a shear-thickening cornstarch-water pool."),
            golf("ketchup_golf", {"model": "power_law", "n": 0.26, "m": 5.86},
                 "The same drop into shear-thinning ketchup."),
            armadillo_ramp(), ice_cream(), cut_and_melt(), *tomatoes(), honey(), cow(), dam_break()]
    for d in docs:
        (OUT / f"{d['name']}.json").write_text(json.dumps(d, indent=2) + "\n")
        print(d["name"])


if __name__ == "__main__":
    main()
