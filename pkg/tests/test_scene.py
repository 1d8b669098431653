import copy
import json
import math

import numpy as np
import pytest

from nnsph.scene import (SCHEMA, ParseError, ValidationError, build_world, dump_scene, dumps_scene, load_scene,
                         loads_scene, resolve_scene_path, sample_scene_bodies, scene_from_dict, scene_to_dict,
                         shipped_scenes)
from nnsph.viscosity import Bingham, Carreau, Casson, Cross, HerschelBulkley, Newtonian, PowerLaw

MINIMAL = {
    "schema": SCHEMA,
    "solver": {"spacing": 0.05},
    "materials": {"w": {"viscosity": {"model": "newtonian", "mu0": 1.0}}},
    "bodies": [{"name": "b", "material": "w", "shape": {"kind": "box", "min": [0, 0, 0], "max": [0.2, 0.2, 0.2]}}],
}


def doc(**edits):
    d = copy.deepcopy(MINIMAL)
    d.update(edits)
    return d


def errors_of(d):
    with pytest.raises(ValidationError) as exc:
        scene_from_dict(d)
    return exc.value.errors


def test_minimal_scene_gets_defaults():
    cfg = scene_from_dict(MINIMAL)
    s = cfg.solver
    assert (s.support_factor, s.dt_max, s.cfl, s.rest_density) == (2.0, 5e-3, 0.4, 1000.0)
    assert s.gravity == (0.0, -9.81, 0.0)
    assert (s.density_tol, s.divergence_tol) == (1e-3, 1e-3)
    assert cfg.output.frame_interval == 1 / 60 and cfg.output.formats == ("binary",)
    assert cfg.seed == 0 and cfg.boundaries == () and cfg.spheres == ()
    assert cfg.materials["w"].viscosity == Newtonian(1.0)
    assert cfg.materials["w"].elastic is None and cfg.materials["w"].thermal is None
    assert len(sample_scene_bodies(cfg)[0]) == 64


def test_poisson_half_is_rejected():
    d = doc()
    d["materials"]["w"]["elastic"] = {"E": 1e5, "poisson": 0.5}
    errs = errors_of(d)
    assert len(errs) == 1
    assert "materials.w.elastic" in errs[0] and "0.5" in errs[0]


def test_every_error_is_collected():
    d = doc(bogus=1)
    d["solver"]["spacing"] = -1
    d["materials"]["w"]["viscosity"] = {"model": "cross", "mu0": 1, "mu_inf": 2, "m": 1, "n": 0.6}
    d["bodies"][0]["material"] = "zz"
    errs = errors_of(d)
    assert len(errs) == 4
    joined = "\n".join(errs)
    for needle in ("$.bogus: unknown field", "$.solver.spacing", "mu0 must be >= mu_inf", "unknown material 'zz'"):
        assert needle in joined


@pytest.mark.parametrize("path,value", [("schema", "nnsph.scene/0"), ("seed", -1), ("materials", {})])
def test_top_level_problems(path, value):
    errs = errors_of(doc(**{path: value}))
    assert any(e.startswith(f"$.{path}") for e in errs)


def test_missing_solver():
    d = doc()
    del d["solver"]
    assert "$.solver: required" in errors_of(d)


def test_unknown_viscosity_model():
    d = doc()
    d["materials"]["w"]["viscosity"] = {"model": "maxwell"}
    assert any("materials.w.viscosity" in e for e in errors_of(d))


def test_parse_error_location():
    with pytest.raises(ParseError) as exc:
        loads_scene('{"a":\n  1,,}')
    assert exc.value.location == "<string>:2:5"


def test_parse_error_from_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{\n\n  nope }")
    with pytest.raises(ParseError) as exc:
        load_scene(p)
    assert exc.value.location == f"{p}:3:3"
    with pytest.raises(ParseError):
        load_scene(tmp_path / "absent.json")


def test_armadillo_materials_match_parameter_table():
    mats = {k: m.viscosity for k, m in load_scene("armadillo_ramp").materials.items()}
    assert mats == {
        "newtonian": Newtonian(10.0),
        "power_law_1": PowerLaw(n=0.667, m=4.5, mu0=10.0, mu_inf=0.1),
        "power_law_2": PowerLaw(n=1.5, m=1.0, mu0=10.0, mu_inf=0.1),
        "cross": Cross(mu0=10.0, mu_inf=0.1, m=1.0, n=0.667),
        "casson": Casson(mu_c=1.0, tau0=10.0, mu0=10.0, mu_inf=0.1),
        "carreau": Carreau(mu0=10.0, mu_inf=0.1, m=0.2, n=0.1, alpha=2.0),
        "bingham": Bingham(mu0=10.0, mu_inf=0.1, rate_c=1.0),
        "herschel_bulkley": HerschelBulkley(mu0=10.0, m=10.0, n=0.667, rate_c=10.0, mu_inf=0.1),
    }


@pytest.mark.filterwarnings("ignore:herschel_bulkley")
@pytest.mark.parametrize("name", shipped_scenes())
def test_round_trip_is_fixed_point(name, tmp_path):
    cfg = load_scene(name)
    text = dumps_scene(cfg)
    again = loads_scene(text, cfg.base_dir)
    assert again == cfg
    assert dumps_scene(again) == text
    dump_scene(again, tmp_path / "s.json")
    assert load_scene(tmp_path / "s.json") == cfg


def test_infinite_thresholds_serialize_as_strings():
    d = doc()
    d["materials"]["w"]["elastic"] = {"E": 1e5, "poisson": 0.3}
    out = scene_to_dict(scene_from_dict(d))
    el = out["materials"]["w"]["elastic"]
    assert el["gamma1"] == "inf" and el["gamma2"] == "inf"
    json.dumps(out, allow_nan=False)
    assert math.isinf(scene_from_dict(out).materials["w"].elastic.gamma1)


def test_shipped_particle_counts():
    assert len(sample_scene_bodies(load_scene("honey"))[0]) == 13780
    assert len(sample_scene_bodies(load_scene("cow"))[0]) == 276625


def test_resolve_scene_path(tmp_path):
    assert resolve_scene_path("honey").name == "honey.json"
    assert resolve_scene_path("honey.json") == resolve_scene_path("honey")
    local = tmp_path / "mine.json"
    local.write_text(json.dumps(MINIMAL))
    assert resolve_scene_path(local) == local
    assert resolve_scene_path("no_such_scene").name == "no_such_scene"
    assert "honey" in shipped_scenes() and "dam_break" in shipped_scenes()


def test_empty_body_is_a_validation_error():
    d = doc()
    d["bodies"][0]["shape"] = {"kind": "sphere", "center": [0.01, 0, 0], "radius": 0.001}
    cfg = scene_from_dict(d)
    with pytest.raises(ValidationError):
        sample_scene_bodies(cfg)


def test_build_world_assembles_everything():
    cfg = load_scene("golf")
    w = build_world(cfg)
    x, _, mats, _, _ = sample_scene_bodies(cfg)
    np.testing.assert_array_equal(w.x, x)
    np.testing.assert_array_equal(w.material_ids, mats)
    assert len(w.spheres) == len(cfg.spheres) == 1
    assert len(w.xb) > 0
