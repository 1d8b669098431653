"""Scene files: JSON parsing, validation, serialization and world construction.

A scene is a JSON object tagged ``"schema": "nnsph.scene/1"``. Validation
collects every problem before failing, each tagged with its JSON path.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dfsph import DfsphSettings
from .elastoplastic import ElasticParams
from .engine import BoundaryObject, Material, Motion, RigidSphere, SolverSettings, World
from .sampling import (EmptyBody, Shape, load_point_cloud, oriented_box_surface, sample_body, sphere_surface)
from .thermal import SourceRegion, ThermalParams
from .viscosity import InvalidModelParams, ViscosityModel, ViscousSolveConfig, model_from_dict

SCHEMA = "nnsph.scene/1"
WALL_GAP = 0.6  # boundary samples sit this many spacings beyond a declared wall face
SHIPPED_DIR = Path(__file__).parent / "scenes"


class ParseError(ValueError):
    """The file is not a readable JSON document."""

    def __init__(self, message, location=None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class ValidationError(ValueError):
    """The document parsed but violates the scene schema or a model invariant."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


# --- config types ------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    spacing: float
    support_factor: float = 2.0
    dt_max: float = 5e-3
    cfl: float = 0.4
    elastic_cfl: float = 0.4
    gravity: tuple = (0.0, -9.81, 0.0)
    rest_density: float = 1000.0
    density_tol: float = 1e-3
    divergence_tol: float = 1e-3
    density_max_iter: int = 100
    divergence_max_iter: int = 100
    viscosity_tol: float = 1e-4
    viscosity_max_iter: int = 100
    viscosity_regularizer: float = 0.01
    strain_rate_floor: float = 1e-6
    thermal_max_delta: float | None = None


@dataclass(frozen=True)
class MaterialConfig:
    viscosity: ViscosityModel
    elastic: ElasticParams | None = None
    thermal: ThermalParams | None = None
    temperature: float = 0.0


@dataclass(frozen=True)
class BodyConfig:
    name: str
    material: str
    shape: Shape
    velocity: tuple = (0.0, 0.0, 0.0)
    spacing: float | None = None
    jitter: float = 0.0


@dataclass(frozen=True)
class BoundaryConfig:
    name: str
    kind: str
    min: tuple
    max: tuple
    open_top: bool = True
    rotation_deg: float = 0.0
    motion: Motion | None = None


@dataclass(frozen=True)
class SphereConfig:
    name: str
    center: tuple
    radius: float
    mass: float = 0.0
    velocity: tuple = (0.0, 0.0, 0.0)
    mode: str = "dynamic"


@dataclass(frozen=True)
class OutputConfig:
    frame_interval: float = 1.0 / 60.0
    frames: int = 60
    directory: str = "output"
    formats: tuple = ("binary",)


@dataclass(frozen=True)
class SceneConfig:
    name: str
    solver: SolverConfig
    materials: dict
    bodies: tuple
    boundaries: tuple = ()
    spheres: tuple = ()
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    description: str = ""
    notes: str = ""
    base_dir: str = field(default=".", compare=False)

    @property
    def material_names(self) -> list:
        return list(self.materials)


# --- reading -------------------------------------------------------------------

class _Reader:
    """Typed field access that records errors instead of raising."""

    def __init__(self):
        self.errors: list = []

    def err(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def obj(self, d, path, allowed):
        if not isinstance(d, dict):
            self.err(path, "expected an object")
            return {}
        for key in d:
            if key not in allowed:
                self.err(f"{path}.{key}", "unknown field")
        return d

    def num(self, d, key, path, default=None, *, required=False, check=None, msg=None, allow_inf=False,
            integer=False):
        if key not in d or d[key] is None:
            if required:
                self.err(f"{path}.{key}", "required")
            return default
        v = d[key]
        if allow_inf and isinstance(v, str) and v.lower() in ("inf", "infinity"):
            v = math.inf
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.err(f"{path}.{key}", f"expected a number, got {v!r}")
            return default
        if integer:
            if float(v) != int(v):
                self.err(f"{path}.{key}", f"expected an integer, got {v!r}")
                return default
            v = int(v)
        else:
            v = float(v)
        if not allow_inf and not math.isfinite(v):
            self.err(f"{path}.{key}", "must be finite")
            return default
        if check is not None and not check(v):
            self.err(f"{path}.{key}", msg or f"invalid value {v!r}")
            return default
        return v

    def vec(self, d, key, path, default=None, *, required=False):
        if key not in d:
            if required:
                self.err(f"{path}.{key}", "required")
            return default
        v = d[key]
        if (not isinstance(v, (list, tuple)) or len(v) != 3
                or not all(isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in v)):
            self.err(f"{path}.{key}", f"expected three finite numbers, got {v!r}")
            return default
        return tuple(float(c) for c in v)

    def text(self, d, key, path, default=None, *, required=False, choices=None):
        if key not in d:
            if required:
                self.err(f"{path}.{key}", "required")
            return default
        v = d[key]
        if not isinstance(v, str):
            self.err(f"{path}.{key}", f"expected a string, got {v!r}")
            return default
        if choices is not None and v not in choices:
            self.err(f"{path}.{key}", f"must be one of {sorted(choices)}, got {v!r}")
            return default
        return v


def _positive(v):
    return v > 0


def _read_solver(r: _Reader, d, path):
    d = r.obj(d, path, set(SolverConfig.__dataclass_fields__))
    defaults = SolverConfig(spacing=1.0)
    kw = {"spacing": r.num(d, "spacing", path, required=True, check=_positive, msg="spacing must be > 0")}
    for key in ("support_factor", "dt_max", "cfl", "elastic_cfl", "rest_density", "density_tol", "divergence_tol",
                "viscosity_tol", "viscosity_regularizer", "strain_rate_floor"):
        kw[key] = r.num(d, key, path, getattr(defaults, key), check=_positive, msg=f"{key} must be > 0")
    for key in ("density_max_iter", "divergence_max_iter", "viscosity_max_iter"):
        kw[key] = r.num(d, key, path, getattr(defaults, key), check=_positive, msg=f"{key} must be >= 1",
                        integer=True)
    kw["thermal_max_delta"] = r.num(d, "thermal_max_delta", path, None, check=_positive)
    kw["gravity"] = r.vec(d, "gravity", path, defaults.gravity)
    if kw["support_factor"] is not None and kw["support_factor"] < 1.0:
        r.err(f"{path}.support_factor", "must be >= 1")
    if kw["dt_max"] is not None and kw["dt_max"] > 5e-3:
        r.err(f"{path}.dt_max", "must not exceed 5e-3 s")
    if kw["viscosity_tol"] is not None and kw["viscosity_tol"] >= 1:
        r.err(f"{path}.viscosity_tol", "must lie in (0, 1)")
    if kw["spacing"] is None:
        return None
    return SolverConfig(**{k: v for k, v in kw.items() if v is not None or k == "thermal_max_delta"})


def _read_viscosity(r: _Reader, d, path):
    if not isinstance(d, dict):
        r.err(path, "expected an object")
        return None
    d = dict(d)
    for k, v in d.items():
        if k != "model" and v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            r.err(f"{path}.{k}", f"expected a number, got {v!r}")
            return None
    try:
        return model_from_dict(d)
    except InvalidModelParams as exc:
        r.err(path, str(exc))
        return None


def _read_elastic(r: _Reader, d, path):
    d = r.obj(d, path, {"E", "poisson", "gamma1", "gamma2"})
    E = r.num(d, "E", path, required=True)
    nu = r.num(d, "poisson", path, 0.3)
    g1 = r.num(d, "gamma1", path, math.inf, allow_inf=True)
    g2 = r.num(d, "gamma2", path, math.inf, allow_inf=True)
    if None in (E, nu, g1, g2):
        return None
    try:
        return ElasticParams(E, nu, g1, g2)
    except ValueError as exc:
        for msg in str(exc).split("; "):
            r.err(path, msg)
        return None


def _read_region(r: _Reader, d, path):
    d = r.obj(d, path, {"kind", "min", "max"})
    kind = r.text(d, "kind", path, "none", choices={"none", "surface", "box"})
    lo = r.vec(d, "min", path, (0.0, 0.0, 0.0), required=kind == "box")
    hi = r.vec(d, "max", path, (0.0, 0.0, 0.0), required=kind == "box")
    if kind == "box" and lo and hi and any(a > b for a, b in zip(lo, hi)):
        r.err(path, "min must not exceed max")
        return None
    return SourceRegion(kind or "none", lo, hi) if kind else None


def _read_thermal(r: _Reader, d, path):
    d = r.obj(d, path, {"diffusivity", "source", "decay", "mu0", "region", "mu_floor"})
    kw = dict(
        diffusivity=r.num(d, "diffusivity", path, 0.0, check=lambda v: v >= 0, msg="diffusivity must be >= 0"),
        source=r.num(d, "source", path, 0.0),
        decay=r.num(d, "decay", path, 0.0, check=lambda v: v >= 0, msg="decay must be >= 0"),
        mu0=r.num(d, "mu0", path, 1.0, check=_positive, msg="mu0 must be > 0"),
        mu_floor=r.num(d, "mu_floor", path, 1e-3, check=lambda v: v >= 0, msg="mu_floor must be >= 0"),
    )
    region = _read_region(r, d.get("region", {}), f"{path}.region")
    if None in kw.values() or region is None:
        return None
    return ThermalParams(region=region, **kw)


def _read_material(r: _Reader, d, path):
    d = r.obj(d, path, {"viscosity", "elastic", "thermal", "temperature"})
    if "viscosity" in d:
        visc = _read_viscosity(r, d["viscosity"], f"{path}.viscosity")
    elif "thermal" in d:
        visc = model_from_dict({"model": "newtonian"})
    else:
        r.err(f"{path}.viscosity", "required")
        visc = None
    elastic = _read_elastic(r, d["elastic"], f"{path}.elastic") if d.get("elastic") is not None else None
    thermal = _read_thermal(r, d["thermal"], f"{path}.thermal") if d.get("thermal") is not None else None
    temp = r.num(d, "temperature", path, 0.0)
    if visc is None or temp is None:
        return None
    if (d.get("elastic") is not None and elastic is None) or (d.get("thermal") is not None and thermal is None):
        return None
    return MaterialConfig(visc, elastic, thermal, temp)


_SHAPES = {"box", "sphere", "cylinder", "union", "point_cloud"}


def _read_shape(r: _Reader, d, path, base_dir):
    d = r.obj(d, path, {"kind", "min", "max", "center", "radius", "height", "parts", "file", "points"})
    kind = r.text(d, "kind", path, required=True, choices=_SHAPES)
    if kind == "box":
        lo = r.vec(d, "min", path, required=True)
        hi = r.vec(d, "max", path, required=True)
        if lo and hi and any(a >= b for a, b in zip(lo, hi)):
            r.err(path, "box min must be below max on every axis")
            return None
        return Shape("box", min=lo, max=hi) if lo and hi else None
    if kind in ("sphere", "cylinder"):
        c = r.vec(d, "center", path, required=True)
        rad = r.num(d, "radius", path, required=True, check=_positive, msg="radius must be > 0")
        h = 0.0
        if kind == "cylinder":
            h = r.num(d, "height", path, required=True, check=_positive, msg="height must be > 0")
        if None in (c, rad, h):
            return None
        return Shape(kind, center=c, radius=rad, height=h)
    if kind == "union":
        parts = d.get("parts")
        if not isinstance(parts, list) or not parts:
            r.err(f"{path}.parts", "expected a non-empty list of shapes")
            return None
        shapes = [_read_shape(r, p, f"{path}.parts[{k}]", base_dir) for k, p in enumerate(parts)]
        if any(s is None for s in shapes):
            return None
        if any(s.kind == "point_cloud" for s in shapes):
            r.err(f"{path}.parts", "point clouds cannot be combined")
            return None
        return Shape("union", parts=tuple(shapes))
    if kind == "point_cloud":
        if "file" in d:
            f = r.text(d, "file", path)
            p = Path(base_dir) / f if f else None
            if p is not None and not p.exists():
                r.err(f"{path}.file", f"no such file {str(p)!r}")
                return None
            return Shape("point_cloud", points=load_point_cloud(p)) if p is not None else None
        pts = d.get("points")
        arr = np.asarray(pts, dtype=float) if isinstance(pts, list) else None
        if arr is None or arr.ndim != 2 or arr.shape[1] != 3 or not np.all(np.isfinite(arr)):
            r.err(f"{path}.points", "expected a list of [x, y, z] triples or a file")
            return None
        return Shape("point_cloud", points=arr)
    return None


def _read_motion(r: _Reader, d, path):
    d = r.obj(d, path, {"velocity", "start", "end"})
    v = r.vec(d, "velocity", path, required=True)
    t0 = r.num(d, "start", path, 0.0)
    t1 = r.num(d, "end", path, math.inf, allow_inf=True)
    if None in (v, t0, t1):
        return None
    if t1 < t0:
        r.err(path, "end must not precede start")
        return None
    return Motion(v, t0, t1)


def _read_body(r, d, path, materials, spacing, base_dir, k):
    d = r.obj(d, path, {"name", "material", "shape", "velocity", "spacing", "jitter"})
    name = r.text(d, "name", path, f"body{k}")
    mat = r.text(d, "material", path, required=True)
    if mat is not None and mat not in materials:
        r.err(f"{path}.material", f"unknown material {mat!r}")
        mat = None
    shape = _read_shape(r, d.get("shape"), f"{path}.shape", base_dir) if "shape" in d else None
    if "shape" not in d:
        r.err(f"{path}.shape", "required")
    vel = r.vec(d, "velocity", path, (0.0, 0.0, 0.0))
    sp = r.num(d, "spacing", path, None, check=_positive, msg="spacing must be > 0")
    if sp is not None and spacing is not None and not math.isclose(sp, spacing, rel_tol=1e-12):
        r.err(f"{path}.spacing", f"must equal the global spacing {spacing}")
    jitter = r.num(d, "jitter", path, 0.0, check=lambda v: 0 <= v < 0.5, msg="jitter must lie in [0, 0.5)")
    if None in (name, mat, shape, vel, jitter):
        return None
    return BodyConfig(name, mat, shape, vel, sp, jitter)


def _read_boundary(r, d, path, k, spacing):
    d = r.obj(d, path, {"name", "kind", "min", "max", "open_top", "rotation_deg", "motion"})
    name = r.text(d, "name", path, f"boundary{k}")
    kind = r.text(d, "kind", path, required=True, choices={"container", "slab"})
    lo = r.vec(d, "min", path, required=True)
    hi = r.vec(d, "max", path, required=True)
    open_top = d.get("open_top", True)
    if not isinstance(open_top, bool):
        r.err(f"{path}.open_top", "expected true or false")
        open_top = None
    rot = r.num(d, "rotation_deg", path, 0.0)
    motion = _read_motion(r, d["motion"], f"{path}.motion") if d.get("motion") is not None else None
    if lo and hi and any(a > b for a, b in zip(lo, hi)):
        r.err(path, "min must not exceed max")
        return None
    if kind == "slab" and lo and hi and spacing and min(b - a for a, b in zip(lo, hi)) < 2 * spacing - 1e-12:
        r.err(path, "slab must be at least two particle spacings thick")
        return None
    if None in (name, kind, lo, hi, open_top, rot) or (d.get("motion") is not None and motion is None):
        return None
    return BoundaryConfig(name, kind, lo, hi, open_top, rot, motion)


def _read_sphere(r, d, path, k):
    d = r.obj(d, path, {"name", "center", "radius", "mass", "velocity", "mode"})
    name = r.text(d, "name", path, f"sphere{k}")
    c = r.vec(d, "center", path, required=True)
    rad = r.num(d, "radius", path, required=True, check=_positive, msg="radius must be > 0")
    mode = r.text(d, "mode", path, "dynamic", choices={"dynamic", "kinematic"})
    mass = r.num(d, "mass", path, 0.0, required=mode == "dynamic")
    if mode == "dynamic" and mass is not None and not mass > 0:
        r.err(f"{path}.mass", "dynamic sphere needs mass > 0")
        mass = None
    vel = r.vec(d, "velocity", path, (0.0, 0.0, 0.0))
    if None in (name, c, rad, mode, mass, vel):
        return None
    return SphereConfig(name, c, rad, mass, vel, mode)


def _read_output(r, d, path):
    d = r.obj(d, path, {"frame_interval", "frames", "directory", "formats"})
    fi = r.num(d, "frame_interval", path, 1.0 / 60.0, check=_positive, msg="frame_interval must be > 0")
    frames = r.num(d, "frames", path, 60, check=lambda v: v >= 0, msg="frames must be >= 0", integer=True)
    directory = r.text(d, "directory", path, "output")
    formats = d.get("formats", ["binary"])
    if not isinstance(formats, list) or not formats or any(f not in ("binary", "ply") for f in formats):
        r.err(f"{path}.formats", "expected a non-empty list drawn from 'binary' and 'ply'")
        formats = None
    if None in (fi, frames, directory, formats):
        return None
    return OutputConfig(fi, frames, directory, tuple(formats))


def scene_from_dict(doc, base_dir=".") -> SceneConfig:
    """Validate a parsed document; raises :class:`ValidationError` listing every problem."""
    r = _Reader()
    top = {"schema", "name", "description", "notes", "seed", "solver", "materials", "bodies", "boundaries",
           "rigid_spheres", "output"}
    doc = r.obj(doc, "$", top)
    if doc.get("schema") != SCHEMA:
        r.err("$.schema", f"expected {SCHEMA!r}, got {doc.get('schema')!r}")
    name = r.text(doc, "name", "$", "scene")
    desc = r.text(doc, "description", "$", "")
    notes = r.text(doc, "notes", "$", "")
    seed = r.num(doc, "seed", "$", 0, check=lambda v: v >= 0, msg="seed must be >= 0", integer=True)
    solver = _read_solver(r, doc["solver"], "$.solver") if "solver" in doc else None
    if "solver" not in doc:
        r.err("$.solver", "required")
    spacing = solver.spacing if solver else None

    mats_doc = doc.get("materials")
    materials = {}
    if not isinstance(mats_doc, dict) or not mats_doc:
        r.err("$.materials", "expected a non-empty object of named materials")
        mats_doc = {}
    for mname, md in mats_doc.items():
        materials[mname] = _read_material(r, md, f"$.materials.{mname}")
    if len(materials) > 65535:
        r.err("$.materials", "too many materials")

    bodies_doc = doc.get("bodies", [])
    if not isinstance(bodies_doc, list):
        r.err("$.bodies", "expected a list")
        bodies_doc = []
    bodies = [_read_body(r, b, f"$.bodies[{k}]", mats_doc, spacing, base_dir, k) for k, b in enumerate(bodies_doc)]
    bnd_doc = doc.get("boundaries", [])
    if not isinstance(bnd_doc, list):
        r.err("$.boundaries", "expected a list")
        bnd_doc = []
    boundaries = [_read_boundary(r, b, f"$.boundaries[{k}]", k, spacing) for k, b in enumerate(bnd_doc)]
    sph_doc = doc.get("rigid_spheres", [])
    if not isinstance(sph_doc, list):
        r.err("$.rigid_spheres", "expected a list")
        sph_doc = []
    spheres = [_read_sphere(r, s, f"$.rigid_spheres[{k}]", k) for k, s in enumerate(sph_doc)]
    output = _read_output(r, doc.get("output", {}), "$.output")

    if r.errors:
        raise ValidationError(r.errors)
    return SceneConfig(name, solver, materials, tuple(bodies), tuple(boundaries), tuple(spheres), output, seed,
                       desc, notes, str(base_dir))


def load_scene(path) -> SceneConfig:
    """Read and validate a scene file; names of shipped scenes are resolved too."""
    path = resolve_scene_path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), str(path)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return scene_from_dict(doc, path.parent)


def loads_scene(text: str, base_dir=".") -> SceneConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"<string>:{exc.lineno}:{exc.colno}") from None
    return scene_from_dict(doc, base_dir)


def resolve_scene_path(path) -> Path:
    """A file path as given, else a shipped scene name with or without ``.json``."""
    p = Path(path)
    if p.is_file():
        return p
    for cand in (SHIPPED_DIR / p, SHIPPED_DIR / f"{p}.json"):
        if cand.is_file():
            return cand
    return p


def shipped_scenes() -> list:
    return sorted(p.stem for p in SHIPPED_DIR.glob("*.json"))


# --- writing -------------------------------------------------------------------

def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _shape_dict(s: Shape) -> dict:
    if s.kind == "box":
        return {"kind": "box", "min": list(s.min), "max": list(s.max)}
    if s.kind == "sphere":
        return {"kind": "sphere", "center": list(s.center), "radius": s.radius}
    if s.kind == "cylinder":
        return {"kind": "cylinder", "center": list(s.center), "radius": s.radius, "height": s.height}
    if s.kind == "union":
        return {"kind": "union", "parts": [_shape_dict(p) for p in s.parts]}
    return {"kind": "point_cloud", "points": np.asarray(s.points).tolist()}


def scene_to_dict(cfg: SceneConfig) -> dict:
    """Plain-JSON form of a config; ``scene_from_dict`` inverts it."""
    solver = {k: _num(v) for k, v in cfg.solver.__dict__.items() if v is not None}
    solver["gravity"] = list(cfg.solver.gravity)
    mats = {}
    for name, m in cfg.materials.items():
        md = {"viscosity": {k: _num(v) for k, v in m.viscosity.to_dict().items()}, "temperature": m.temperature}
        if m.elastic is not None:
            md["elastic"] = {k: _num(v) for k, v in m.elastic.__dict__.items()}
        if m.thermal is not None:
            t = m.thermal
            region = {"kind": t.region.kind}
            if t.region.kind == "box":
                region.update(min=list(t.region.box_min), max=list(t.region.box_max))
            md["thermal"] = {"diffusivity": t.diffusivity, "source": t.source, "decay": t.decay, "mu0": t.mu0,
                             "mu_floor": t.mu_floor, "region": region}
        mats[name] = md
    bodies = []
    for b in cfg.bodies:
        bd = {"name": b.name, "material": b.material, "shape": _shape_dict(b.shape), "velocity": list(b.velocity),
              "jitter": b.jitter}
        if b.spacing is not None:
            bd["spacing"] = b.spacing
        bodies.append(bd)
    bnds = []
    for b in cfg.boundaries:
        bd = {"name": b.name, "kind": b.kind, "min": list(b.min), "max": list(b.max), "open_top": b.open_top,
              "rotation_deg": b.rotation_deg}
        if b.motion is not None:
            bd["motion"] = {"velocity": list(b.motion.velocity), "start": b.motion.start,
                            "end": _num(b.motion.end)}
        bnds.append(bd)
    spheres = [{"name": s.name, "center": list(s.center), "radius": s.radius, "mass": s.mass,
                "velocity": list(s.velocity), "mode": s.mode} for s in cfg.spheres]
    o = cfg.output
    return {"schema": SCHEMA, "name": cfg.name, "description": cfg.description, "notes": cfg.notes,
            "seed": cfg.seed, "solver": solver, "materials": mats, "bodies": bodies, "boundaries": bnds,
            "rigid_spheres": spheres,
            "output": {"frame_interval": o.frame_interval, "frames": o.frames, "directory": o.directory,
                       "formats": list(o.formats)}}


def dumps_scene(cfg: SceneConfig) -> str:
    return json.dumps(scene_to_dict(cfg), indent=2)


def dump_scene(cfg: SceneConfig, path):
    Path(path).write_text(dumps_scene(cfg) + "\n")


# --- world construction --------------------------------------------------------

def solver_settings(cfg: SolverConfig) -> SolverSettings:
    return SolverSettings(
        dt_max=cfg.dt_max, cfl=cfg.cfl, elastic_cfl=cfg.elastic_cfl, gravity=tuple(cfg.gravity),
        rest_density=cfg.rest_density, strain_rate_floor=cfg.strain_rate_floor,
        dfsph=DfsphSettings(density_tol=cfg.density_tol, divergence_tol=cfg.divergence_tol,
                            density_max_iter=cfg.density_max_iter, divergence_max_iter=cfg.divergence_max_iter),
        viscous=ViscousSolveConfig(tol=cfg.viscosity_tol, max_iter=cfg.viscosity_max_iter,
                                   regularizer=cfg.viscosity_regularizer),
        thermal_max_delta=cfg.thermal_max_delta)


def boundary_samples(b: BoundaryConfig, spacing: float):
    """Sample points of a wall; containers sit just outside their interior, slabs just inside."""
    lo, hi = np.asarray(b.min, float), np.asarray(b.max, float)
    gap = WALL_GAP * spacing
    if b.kind == "container":
        lo, hi = lo - gap, hi + gap
        return oriented_box_surface(lo, hi, spacing, b.rotation_deg, open_top=b.open_top)
    mid = 0.5 * (lo + hi)
    lo, hi = np.minimum(lo + gap, mid), np.maximum(hi - gap, mid)
    return oriented_box_surface(lo, hi, spacing, b.rotation_deg, open_top=False)


def sample_scene_bodies(cfg: SceneConfig):
    """Positions, velocities, material ids, body ids and temperatures for every body."""
    s = cfg.solver.spacing
    rng = np.random.default_rng(cfg.seed)
    names = cfg.material_names
    xs, vs, mats, ids, temps = [], [], [], [], []
    for k, b in enumerate(cfg.bodies):
        try:
            x, _ = sample_body(b.shape, s)
        except EmptyBody as exc:
            raise ValidationError([f"$.bodies[{k}]: {exc}"]) from None
        if b.jitter > 0:
            x = x + rng.uniform(-b.jitter * s, b.jitter * s, size=x.shape)
        xs.append(x)
        vs.append(np.broadcast_to(np.asarray(b.velocity, float), x.shape))
        m = names.index(b.material)
        mats.append(np.full(len(x), m))
        ids.append(np.full(len(x), k))
        temps.append(np.full(len(x), cfg.materials[b.material].temperature))
    if not xs:
        return np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0, int), np.zeros(0, int), np.zeros(0)
    return (np.concatenate(xs), np.concatenate(vs), np.concatenate(mats), np.concatenate(ids),
            np.concatenate(temps))


def build_world(cfg: SceneConfig) -> World:
    """Sample bodies and boundaries and assemble a ready-to-step world."""
    s = cfg.solver.spacing
    x, v, mat_ids, body_ids, temps = sample_scene_bodies(cfg)
    materials = [Material(name, m.viscosity, m.elastic, m.thermal) for name, m in cfg.materials.items()]
    chunks, objects, spheres = [], [], []
    offset = 0
    for b in cfg.boundaries:
        pts = boundary_samples(b, s)
        objects.append(BoundaryObject(b.name, np.arange(offset, offset + len(pts)), b.motion))
        chunks.append(pts)
        offset += len(pts)
    for sc in cfg.spheres:
        pts = sphere_surface(sc.center, sc.radius, s)
        spheres.append(RigidSphere(np.array(sc.center), sc.radius, sc.mass, np.array(sc.velocity), sc.mode,
                                   np.arange(offset, offset + len(pts))))
        chunks.append(pts)
        offset += len(pts)
    xb = np.concatenate(chunks) if chunks else np.zeros((0, 3))
    world = World(x, v, mat_ids, materials, s, body_ids=body_ids, settings=solver_settings(cfg.solver),
                  support_factor=cfg.solver.support_factor, xb=xb, boundary_objects=objects, spheres=spheres,
                  temperature=temps)
    for obj in objects:
        if obj.motion is not None:
            world.vb[obj.indices] = obj.motion.velocity_at(0.0)
    return world
